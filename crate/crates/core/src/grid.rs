//! Grid cases and the linearized swing model.
//!
//! A [`GridCase`] is the raw network description (buses, lines, base
//! frequency) parsed from a `.case` file. A [`GridModel`] is the linearized
//! model built from it under the DC approximation: diagonal inertia `M` and
//! damping `D`, the reduced network Laplacian `K` on generator coordinates
//! (loads eliminated by Kron reduction), and the linear maps from generator
//! angles to interior bus angles and line flows.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::linalg::{self, jacobi_eigh};
use crate::ChannelId;

/// One bus record of a case. Inertia and damping are meaningful only when
/// `is_generator` is set.
#[derive(Debug, Clone)]
pub struct BusRecord {
    pub id: u32,
    pub is_generator: bool,
    /// Inertia constant in per-unit seconds.
    pub inertia: f64,
    /// Damping coefficient in per-unit.
    pub damping: f64,
}

/// One transmission line of a case.
#[derive(Debug, Clone)]
pub struct LineRecord {
    pub from: u32,
    pub to: u32,
    /// Series susceptance in per-unit (strictly positive).
    pub susceptance: f64,
}

/// A validated network case.
#[derive(Debug, Clone)]
pub struct GridCase {
    pub buses: Vec<BusRecord>,
    pub lines: Vec<LineRecord>,
    pub base_hz: f64,
}

/// How to populate the damping matrix when building a model.
#[derive(Debug, Clone)]
pub enum DampingSpec {
    /// Use the per-generator dampings recorded in the case file.
    FromCase,
    /// Uniform damping ratio: `D = gamma * M`.
    Uniform(f64),
    /// Explicit per-generator dampings, in case order.
    PerGenerator(Vec<f64>),
}

impl GridCase {
    /// Parse the plain-text case format.
    ///
    /// Sections `[system]`, `[buses]`, `[lines]`; `#` starts a comment.
    /// Bus lines are `id is_gen inertia damping`, line records are
    /// `from to susceptance`, and the system section carries `base_hz`.
    pub fn parse(text: &str) -> Result<GridCase> {
        #[derive(PartialEq)]
        enum Section {
            None,
            System,
            Buses,
            Lines,
        }
        let mut section = Section::None;
        let mut buses = Vec::new();
        let mut lines = Vec::new();
        let mut base_hz = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: lineno + 1, msg };
            match line {
                "[system]" => section = Section::System,
                "[buses]" => section = Section::Buses,
                "[lines]" => section = Section::Lines,
                _ => {
                    let fields: Vec<&str> = line.split_whitespace().collect();
                    match section {
                        Section::None => {
                            return Err(err(format!("content before any section: `{line}`")))
                        }
                        Section::System => {
                            if fields.len() != 2 || fields[0] != "base_hz" {
                                return Err(err(format!("expected `base_hz <value>`, got `{line}`")));
                            }
                            base_hz = Some(fields[1].parse::<f64>().map_err(|e| {
                                err(format!("bad base_hz value `{}`: {e}", fields[1]))
                            })?);
                        }
                        Section::Buses => {
                            if fields.len() != 4 {
                                return Err(err(format!(
                                    "bus record needs 4 fields `id is_gen inertia damping`, got {}",
                                    fields.len()
                                )));
                            }
                            let id = fields[0]
                                .parse::<u32>()
                                .map_err(|e| err(format!("bad bus id `{}`: {e}", fields[0])))?;
                            let is_generator = match fields[1] {
                                "0" => false,
                                "1" => true,
                                other => {
                                    return Err(err(format!("is_gen flag must be 0 or 1, got `{other}`")))
                                }
                            };
                            let inertia = fields[2]
                                .parse::<f64>()
                                .map_err(|e| err(format!("bad inertia `{}`: {e}", fields[2])))?;
                            let damping = fields[3]
                                .parse::<f64>()
                                .map_err(|e| err(format!("bad damping `{}`: {e}", fields[3])))?;
                            buses.push(BusRecord { id, is_generator, inertia, damping });
                        }
                        Section::Lines => {
                            if fields.len() != 3 {
                                return Err(err(format!(
                                    "line record needs 3 fields `from to susceptance`, got {}",
                                    fields.len()
                                )));
                            }
                            let from = fields[0]
                                .parse::<u32>()
                                .map_err(|e| err(format!("bad from-bus `{}`: {e}", fields[0])))?;
                            let to = fields[1]
                                .parse::<u32>()
                                .map_err(|e| err(format!("bad to-bus `{}`: {e}", fields[1])))?;
                            let susceptance = fields[2].parse::<f64>().map_err(|e| {
                                err(format!("bad susceptance `{}`: {e}", fields[2]))
                            })?;
                            lines.push(LineRecord { from, to, susceptance });
                        }
                    }
                }
            }
        }

        let case = GridCase {
            buses,
            lines,
            base_hz: base_hz.ok_or_else(|| Error::validation("missing [system] base_hz"))?,
        };
        case.validate()?;
        Ok(case)
    }

    /// Load and validate a case file from disk.
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<GridCase> {
        let text = std::fs::read_to_string(path)?;
        GridCase::parse(&text)
    }

    /// The bundled WSCC 9-bus case (3 generators, 9 branches).
    pub fn wscc9() -> GridCase {
        GridCase::parse(include_str!("../cases/wscc9.case"))
            .expect("bundled wscc9 case must parse")
    }

    /// A chain of `n` generator buses with uniform inertia, damping and line
    /// susceptance; bus ids are `1..=n`.
    pub fn uniform_chain(n: usize, inertia: f64, damping: f64, susceptance: f64) -> GridCase {
        let buses = (1..=n as u32)
            .map(|id| BusRecord { id, is_generator: true, inertia, damping })
            .collect();
        let lines = (1..n as u32)
            .map(|i| LineRecord { from: i, to: i + 1, susceptance })
            .collect();
        GridCase { buses, lines, base_hz: 60.0 }
    }

    /// Check the case invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.base_hz > 0.0) {
            return Err(Error::validation("base frequency must be positive"));
        }
        let mut seen = std::collections::HashSet::new();
        for bus in &self.buses {
            if !seen.insert(bus.id) {
                return Err(Error::validation(format!("duplicate bus id {}", bus.id)));
            }
            if bus.is_generator {
                if !(bus.inertia > 0.0) {
                    return Err(Error::validation(format!(
                        "generator bus {} must have positive inertia",
                        bus.id
                    )));
                }
                if bus.damping < 0.0 {
                    return Err(Error::validation(format!(
                        "generator bus {} must have nonnegative damping",
                        bus.id
                    )));
                }
            }
        }
        for line in &self.lines {
            for end in [line.from, line.to] {
                if !seen.contains(&end) {
                    return Err(Error::validation(format!(
                        "line {}-{} references unknown bus id {end}",
                        line.from, line.to
                    )));
                }
            }
            if line.from == line.to {
                return Err(Error::validation(format!("line {}-{} is a self-loop", line.from, line.to)));
            }
            if !(line.susceptance > 0.0) {
                return Err(Error::validation(format!(
                    "line {}-{} must have strictly positive susceptance",
                    line.from, line.to
                )));
            }
        }
        let n_gen = self.buses.iter().filter(|b| b.is_generator).count();
        if n_gen < 2 {
            return Err(Error::validation(format!(
                "at least 2 generator buses required, found {n_gen}"
            )));
        }
        Ok(())
    }

    pub fn generator_ids(&self) -> Vec<u32> {
        self.buses.iter().filter(|b| b.is_generator).map(|b| b.id).collect()
    }

    fn bus_index(&self, id: u32) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }
}

/// Build the full-network Laplacian from line susceptances:
/// `L[i][j] = -b_ij`, `L[i][i] = sum_j b_ij`. Fails if the network is
/// disconnected (zero-eigenvalue multiplicity above one).
pub fn build_laplacian(case: &GridCase) -> Result<DMatrix<f64>> {
    let n = case.buses.len();
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for line in &case.lines {
        let i = case.bus_index(line.from).expect("validated");
        let j = case.bus_index(line.to).expect("validated");
        let b = line.susceptance;
        lap[(i, j)] -= b;
        lap[(j, i)] -= b;
        lap[(i, i)] += b;
        lap[(j, j)] += b;
    }
    let eig = jacobi_eigh(&lap)?;
    let scale = eig.values.last().copied().unwrap_or(0.0).max(1.0);
    let zero_count = eig.values.iter().filter(|&&v| v < 1e-8 * scale).count();
    if zero_count > 1 {
        return Err(Error::validation(format!(
            "network is disconnected ({zero_count} zero eigenvalues in the Laplacian)"
        )));
    }
    Ok(lap)
}

/// Kron reduction of a full Laplacian onto the `generator` index set.
///
/// Returns the reduced Laplacian `K = L_GG - L_GL L_LL^-1 L_LG` and the
/// interior-bus angle map `A = -L_LL^-1 L_LG` (interior angles as `A *
/// delta`). `A` has one row per eliminated bus, in input order.
pub fn kron_reduce(lap: &DMatrix<f64>, generators: &[usize]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = lap.nrows();
    if generators.is_empty() {
        return Err(Error::validation("generator index set must be nonempty"));
    }
    let interior: Vec<usize> = (0..n).filter(|i| !generators.contains(i)).collect();
    let ng = generators.len();
    let ni = interior.len();

    let pick = |rows: &[usize], cols: &[usize]| -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| lap[(rows[r], cols[c])])
    };
    let l_gg = pick(generators, generators);
    if ni == 0 {
        return Ok((l_gg, DMatrix::zeros(0, ng)));
    }
    let l_gl = pick(generators, &interior);
    let l_lg = pick(&interior, generators);
    let l_ll = pick(&interior, &interior);

    let chol = l_ll.clone().cholesky().ok_or_else(|| {
        Error::numerical(format!(
            "interior block is singular; offending bus positions {interior:?} \
             (is a non-generator component isolated from all generators?)"
        ))
    })?;
    let a_map = -chol.solve(&l_lg);
    let k = &l_gg + &l_gl * &a_map;
    Ok((k, a_map))
}

/// Rows mapping generator angles to line-flow deviations: for line `(n, m)`,
/// `p_nm = b_nm (theta_n - theta_m)` with bus angles expressed through the
/// generator angles (identity rows for generator buses, `A` rows for
/// eliminated buses). One row per case line, in case order.
pub fn line_flow_map(case: &GridCase, a_map: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gens = case.generator_ids();
    let ng = gens.len();
    let interior: Vec<u32> =
        case.buses.iter().filter(|b| !b.is_generator).map(|b| b.id).collect();
    if a_map.nrows() != interior.len() || a_map.ncols() != ng {
        return Err(Error::validation(format!(
            "bus angle map shape {}x{} inconsistent with case ({} interior, {} generators)",
            a_map.nrows(),
            a_map.ncols(),
            interior.len(),
            ng
        )));
    }
    let theta_row = |id: u32| -> RowDVector<f64> {
        if let Some(g) = gens.iter().position(|&x| x == id) {
            RowDVector::from_fn(ng, |_, c| if c == g { 1.0 } else { 0.0 })
        } else {
            let r = interior.iter().position(|&x| x == id).expect("validated");
            a_map.row(r).into_owned()
        }
    };
    let mut flow = DMatrix::<f64>::zeros(case.lines.len(), ng);
    for (idx, line) in case.lines.iter().enumerate() {
        let row = (theta_row(line.from) - theta_row(line.to)) * line.susceptance;
        flow.set_row(idx, &row);
    }
    Ok(flow)
}

/// The linearized swing model on generator coordinates.
#[derive(Debug, Clone)]
pub struct GridModel {
    /// Generator inertias (diagonal of `M`).
    pub inertia: DVector<f64>,
    /// Generator dampings (diagonal of `D`).
    pub damping: DVector<f64>,
    /// Reduced network Laplacian on generator coordinates.
    pub stiffness: DMatrix<f64>,
    /// Interior bus angles as `bus_angle_map * delta`.
    pub bus_angle_map: DMatrix<f64>,
    /// Line flows as `flow_map * delta`, one row per line.
    pub flow_map: DMatrix<f64>,
    pub generator_ids: Vec<u32>,
    pub interior_ids: Vec<u32>,
    pub line_ids: Vec<(u32, u32)>,
    pub base_hz: f64,
}

impl GridModel {
    /// Build the model from a case: full Laplacian, Kron reduction of the
    /// load buses, flow map, and the chosen damping.
    pub fn from_case(case: &GridCase, damping: DampingSpec) -> Result<GridModel> {
        case.validate()?;
        let lap = build_laplacian(case)?;
        let gen_idx: Vec<usize> = case
            .buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_generator)
            .map(|(i, _)| i)
            .collect();
        let (k, a_map) = kron_reduce(&lap, &gen_idx)?;
        let flow = line_flow_map(case, &a_map)?;

        let gens: Vec<&BusRecord> = case.buses.iter().filter(|b| b.is_generator).collect();
        let inertia = DVector::from_iterator(gens.len(), gens.iter().map(|b| b.inertia));
        let damping = match damping {
            DampingSpec::FromCase => {
                DVector::from_iterator(gens.len(), gens.iter().map(|b| b.damping))
            }
            DampingSpec::Uniform(gamma) => {
                if !(gamma > 0.0) {
                    return Err(Error::validation("uniform damping ratio must be positive"));
                }
                &inertia * gamma
            }
            DampingSpec::PerGenerator(d) => {
                if d.len() != gens.len() {
                    return Err(Error::validation(format!(
                        "expected {} per-generator dampings, got {}",
                        gens.len(),
                        d.len()
                    )));
                }
                DVector::from_vec(d)
            }
        };

        let model = GridModel {
            inertia,
            damping,
            stiffness: k,
            bus_angle_map: a_map,
            flow_map: flow,
            generator_ids: case.generator_ids(),
            interior_ids: case.buses.iter().filter(|b| !b.is_generator).map(|b| b.id).collect(),
            line_ids: case.lines.iter().map(|l| (l.from, l.to)).collect(),
            base_hz: case.base_hz,
        };
        model.check_invariants()?;
        Ok(model)
    }

    fn check_invariants(&self) -> Result<()> {
        let k = &self.stiffness;
        if linalg::asymmetry(k) > 1e-10 {
            return Err(Error::numerical(format!(
                "reduced Laplacian asymmetry {:.3e} exceeds 1e-10",
                linalg::asymmetry(k)
            )));
        }
        for i in 0..k.nrows() {
            let row_sum: f64 = k.row(i).iter().sum();
            if row_sum.abs() > 1e-10 * linalg::max_abs(k).max(1.0) {
                return Err(Error::numerical(format!(
                    "reduced Laplacian row {i} sums to {row_sum:.3e}"
                )));
            }
        }
        let eig = jacobi_eigh(k)?;
        let scale = eig.values.last().copied().unwrap_or(0.0).max(1.0);
        if eig.values[0] < -1e-8 * scale {
            return Err(Error::numerical(format!(
                "reduced Laplacian has negative eigenvalue {:.3e}",
                eig.values[0]
            )));
        }
        let zeros = eig.values.iter().filter(|&&v| v < 1e-8 * scale).count();
        if zeros != 1 {
            return Err(Error::numerical(format!(
                "expected exactly one zero mode in the reduced Laplacian, found {zeros}"
            )));
        }
        if self.inertia.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::validation("inertia entries must be positive"));
        }
        if self.damping.iter().any(|&d| d < 0.0) {
            return Err(Error::validation("damping entries must be nonnegative"));
        }
        Ok(())
    }

    pub fn n_generators(&self) -> usize {
        self.inertia.len()
    }

    /// Uniform damping ratio if `D = gamma * M` holds to relative 1e-9.
    pub fn uniform_gamma(&self) -> Option<f64> {
        let gamma = self.damping[0] / self.inertia[0];
        for i in 1..self.n_generators() {
            let g = self.damping[i] / self.inertia[i];
            if (g - gamma).abs() > 1e-9 * gamma.abs().max(1e-30) {
                return None;
            }
        }
        Some(gamma)
    }

    /// Smallest damping-to-inertia ratio (slowest envelope decay rate).
    pub fn min_damping_ratio(&self) -> f64 {
        (0..self.n_generators())
            .map(|i| self.damping[i] / self.inertia[i])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn generator_position(&self, id: u32) -> Result<usize> {
        self.generator_ids
            .iter()
            .position(|&g| g == id)
            .ok_or_else(|| Error::validation(format!("no generator at bus {id}")))
    }

    /// Row over generator angles giving the named bus angle.
    pub fn bus_row(&self, bus_id: u32) -> Result<RowDVector<f64>> {
        let ng = self.n_generators();
        if let Some(g) = self.generator_ids.iter().position(|&x| x == bus_id) {
            return Ok(RowDVector::from_fn(ng, |_, c| if c == g { 1.0 } else { 0.0 }));
        }
        if let Some(r) = self.interior_ids.iter().position(|&x| x == bus_id) {
            return Ok(self.bus_angle_map.row(r).into_owned());
        }
        Err(Error::validation(format!("unknown bus id {bus_id}")))
    }

    /// Row over generator angles giving the named line flow.
    pub fn flow_row(&self, from: u32, to: u32) -> Result<RowDVector<f64>> {
        let pos = self
            .line_ids
            .iter()
            .position(|&(a, b)| (a, b) == (from, to) || (a, b) == (to, from))
            .ok_or_else(|| Error::validation(format!("unknown line {from}-{to}")))?;
        let row = self.flow_map.row(pos).into_owned();
        // flows are defined from->to in case order; flip if asked reversed
        if self.line_ids[pos] == (from, to) {
            Ok(row)
        } else {
            Ok(-row)
        }
    }

    /// Row over generator angles (delta coordinates) for any angle-like or
    /// flow channel; speed channels have no delta-space row.
    pub fn delta_row(&self, channel: &ChannelId) -> Result<RowDVector<f64>> {
        match channel {
            ChannelId::GenAngle(id) | ChannelId::BusAngle(id) => self.bus_row(*id),
            ChannelId::LineFlow(a, b) => self.flow_row(*a, *b),
            ChannelId::GenFreq(_) => {
                Err(Error::validation("frequency channels have no angle-space row"))
            }
        }
    }

    /// Selector row over the state `[delta; omega]` for a channel.
    pub fn output_row(&self, channel: &ChannelId) -> Result<RowDVector<f64>> {
        let n = self.n_generators();
        let mut row = RowDVector::zeros(2 * n);
        match channel {
            ChannelId::GenFreq(id) => {
                let g = self.generator_position(*id)?;
                row[n + g] = 1.0;
            }
            _ => {
                let d = self.delta_row(channel)?;
                for c in 0..n {
                    row[c] = d[c];
                }
            }
        }
        Ok(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chain3_case() -> GridCase {
        // buses 1-2-3 with unit susceptances; generators at 1 and 3
        GridCase {
            buses: vec![
                BusRecord { id: 1, is_generator: true, inertia: 1.0, damping: 0.1 },
                BusRecord { id: 2, is_generator: false, inertia: 0.0, damping: 0.0 },
                BusRecord { id: 3, is_generator: true, inertia: 1.0, damping: 0.1 },
            ],
            lines: vec![
                LineRecord { from: 1, to: 2, susceptance: 1.0 },
                LineRecord { from: 2, to: 3, susceptance: 1.0 },
            ],
            base_hz: 60.0,
        }
    }

    #[test]
    fn parses_bundled_wscc9() {
        let case = GridCase::wscc9();
        assert_eq!(case.buses.len(), 9);
        assert_eq!(case.generator_ids(), vec![1, 2, 3]);
        assert_eq!(case.lines.len(), 9);
        assert_eq!(case.base_hz, 60.0);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let text = "[system]\nbase_hz 60\n[buses]\n1 1 bad 0\n";
        match GridCase::parse(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_line_endpoint() {
        let mut case = chain3_case();
        case.lines.push(LineRecord { from: 1, to: 99, susceptance: 1.0 });
        let err = case.validate().unwrap_err();
        assert!(err.to_string().contains("unknown bus id 99"));
    }

    #[test]
    fn rejects_single_generator() {
        let mut case = chain3_case();
        case.buses[2].is_generator = false;
        assert!(case.validate().unwrap_err().to_string().contains("at least 2 generator"));
    }

    #[test]
    fn two_bus_laplacian_by_definition() {
        let case = GridCase {
            buses: vec![
                BusRecord { id: 1, is_generator: true, inertia: 1.0, damping: 0.0 },
                BusRecord { id: 2, is_generator: true, inertia: 1.0, damping: 0.0 },
            ],
            lines: vec![LineRecord { from: 1, to: 2, susceptance: 2.0 }],
            base_hz: 60.0,
        };
        let lap = build_laplacian(&case).unwrap();
        assert_eq!(lap, DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]));
    }

    #[test]
    fn three_bus_chain_laplacian() {
        let lap = build_laplacian(&chain3_case()).unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        assert_eq!(lap, expect);
    }

    #[test]
    fn disconnected_network_is_rejected() {
        let case = GridCase {
            buses: vec![
                BusRecord { id: 1, is_generator: true, inertia: 1.0, damping: 0.0 },
                BusRecord { id: 2, is_generator: true, inertia: 1.0, damping: 0.0 },
                BusRecord { id: 3, is_generator: true, inertia: 1.0, damping: 0.0 },
                BusRecord { id: 4, is_generator: true, inertia: 1.0, damping: 0.0 },
            ],
            lines: vec![
                LineRecord { from: 1, to: 2, susceptance: 1.0 },
                LineRecord { from: 3, to: 4, susceptance: 1.0 },
            ],
            base_hz: 60.0,
        };
        let err = build_laplacian(&case).unwrap_err();
        assert!(err.to_string().contains("disconnected"));
    }

    #[test]
    fn wscc9_laplacian_row_sums_vanish() {
        let lap = build_laplacian(&GridCase::wscc9()).unwrap();
        for i in 0..9 {
            assert!(lap.row(i).iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn kron_reduces_chain_to_series_susceptance() {
        let lap = build_laplacian(&chain3_case()).unwrap();
        let (k, a) = kron_reduce(&lap, &[0, 2]).unwrap();
        // two unit susceptances in series combine to b/2
        assert_abs_diff_eq!(k[(0, 0)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(k[(0, 1)], -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(k[(1, 1)], 0.5, epsilon = 1e-14);
        assert_eq!(a.shape(), (1, 2));
        assert_abs_diff_eq!(a[(0, 0)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(a[(0, 1)], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn kron_with_all_generators_is_identity_reduction() {
        let lap = build_laplacian(&chain3_case()).unwrap();
        let (k, a) = kron_reduce(&lap, &[0, 1, 2]).unwrap();
        assert_eq!(k, lap);
        assert_eq!(a.nrows(), 0);
    }

    #[test]
    fn wscc9_reduction_row_sums_and_psd() {
        let model = GridModel::from_case(&GridCase::wscc9(), DampingSpec::Uniform(0.2)).unwrap();
        assert_eq!(model.stiffness.nrows(), 3);
        for i in 0..3 {
            assert!(model.stiffness.row(i).iter().sum::<f64>().abs() < 1e-10);
        }
        let eig = jacobi_eigh(&model.stiffness).unwrap();
        assert!(eig.values[0] > -1e-10, "Kron reduction must preserve PSD");
        // interior angles are affine averages: A * 1 = 1
        for r in 0..model.bus_angle_map.nrows() {
            assert_abs_diff_eq!(model.bus_angle_map.row(r).iter().sum::<f64>(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn flow_map_examples() {
        // 2 generators, one line b = 2: p = 2 (delta1 - delta2)
        let case = GridCase {
            buses: vec![
                BusRecord { id: 1, is_generator: true, inertia: 1.0, damping: 0.0 },
                BusRecord { id: 2, is_generator: true, inertia: 1.0, damping: 0.0 },
            ],
            lines: vec![LineRecord { from: 1, to: 2, susceptance: 2.0 }],
            base_hz: 60.0,
        };
        let model = GridModel::from_case(&case, DampingSpec::Uniform(0.1)).unwrap();
        let f = model.flow_row(1, 2).unwrap();
        assert_abs_diff_eq!(f[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f[1], -2.0, epsilon = 1e-14);

        // 3-bus chain, line (1,2): f = b ([1,0] - [0.5,0.5]) = [0.5,-0.5]
        let model = GridModel::from_case(&chain3_case(), DampingSpec::Uniform(0.1)).unwrap();
        let f = model.flow_row(1, 2).unwrap();
        assert_abs_diff_eq!(f[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(f[1], -0.5, epsilon = 1e-14);
        // reversed orientation flips the sign
        let f = model.flow_row(2, 1).unwrap();
        assert_abs_diff_eq!(f[0], -0.5, epsilon = 1e-14);
    }

    #[test]
    fn equal_endpoint_response_gives_zero_flow() {
        // line between buses with identical angle rows responds identically
        // to any delta: the flow row annihilates the uniform shift
        let model = GridModel::from_case(&GridCase::wscc9(), DampingSpec::Uniform(0.2)).unwrap();
        for (a, b) in model.line_ids.clone() {
            let f = model.flow_row(a, b).unwrap();
            let uniform = DVector::from_element(3, 1.0);
            assert_abs_diff_eq!((f * uniform)[0], 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn dc_power_flow_consistency_full_vs_reduced() {
        // zero-sum injection on generator buses: angles from the full
        // Laplacian (deflated pseudo-inverse solve) restricted to generators
        // match angles from the reduced K, up to a uniform shift
        let case = GridCase::wscc9();
        let lap = build_laplacian(&case).unwrap();
        let model = GridModel::from_case(&case, DampingSpec::Uniform(0.2)).unwrap();

        let pinv_solve = |m: &DMatrix<f64>, rhs: &DVector<f64>| -> DVector<f64> {
            let eig = jacobi_eigh(m).unwrap();
            let mut x = DVector::zeros(rhs.len());
            let scale = eig.values.last().copied().unwrap().max(1.0);
            for (i, &lam) in eig.values.iter().enumerate() {
                if lam > 1e-8 * scale {
                    let q = eig.vectors.column(i);
                    x += q * (q.dot(rhs) / lam);
                }
            }
            x
        };

        let mut p_full = DVector::zeros(9);
        p_full[0] = 1.0;
        p_full[1] = -0.4;
        p_full[2] = -0.6;
        let theta_full = pinv_solve(&lap, &p_full);

        let p_red = DVector::from_vec(vec![1.0, -0.4, -0.6]);
        let theta_red = pinv_solve(&model.stiffness, &p_red);

        // compare angle differences (the pseudo-inverse fixes different gauges)
        for i in 1..3 {
            let d_full = theta_full[i] - theta_full[0];
            let d_red = theta_red[i] - theta_red[0];
            assert_abs_diff_eq!(d_full, d_red, epsilon = 1e-8);
        }
    }

    #[test]
    fn damping_specs() {
        let case = GridCase::wscc9();
        let m = GridModel::from_case(&case, DampingSpec::Uniform(0.2)).unwrap();
        assert_abs_diff_eq!(m.uniform_gamma().unwrap(), 0.2, epsilon = 1e-12);

        let m = GridModel::from_case(&case, DampingSpec::FromCase).unwrap();
        assert_abs_diff_eq!(m.uniform_gamma().unwrap(), 0.2, epsilon = 1e-9);

        let m =
            GridModel::from_case(&case, DampingSpec::PerGenerator(vec![0.3, 0.2, 0.1])).unwrap();
        assert!(m.uniform_gamma().is_none());
        assert!((m.min_damping_ratio() - 0.3 / 3.76).abs() < 1e-12);

        assert!(GridModel::from_case(&case, DampingSpec::PerGenerator(vec![0.1])).is_err());
        assert!(GridModel::from_case(&case, DampingSpec::Uniform(-1.0)).is_err());
    }
}
