//! Time-domain simulation of the linearized swing dynamics.
//!
//! The first-order form is
//!
//! ```text
//! x = [delta; omega],   x' = A x + B u,
//! A = [[0, I], [-M^-1 K, -M^-1 D]],   B = [[0], [M^-1]]
//! ```
//!
//! Impulse responses are integrated exactly: a unit impulse at input `k`
//! equals the initial condition `x(0) = B e_k`, advanced with the
//! zero-order-hold transition matrix `exp(A T_s)`, so sampled outputs carry
//! no integrator truncation error. Ambient records drive the same recursion
//! with Gaussian process noise whose per-step covariance `Q_d` is the exact
//! integral of the continuous white-noise input (Van Loan's block-exponential
//! construction), making the configured noise intensity meaningful across
//! sample rates.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::GridModel;
use crate::linalg;
use crate::series::TimeSeries;
use crate::ChannelId;

/// Where ambient noise enters the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationTarget {
    /// White noise on generator inputs with covariance `alpha M`.
    GeneratorInputs,
    /// Independent white noise of equal variance on every eliminated load
    /// bus, mapped to generator coordinates through the network reduction.
    Loads,
}

/// Configuration of an ambient simulation.
#[derive(Debug, Clone)]
pub struct AmbientConfig {
    /// Noise intensity: generator-side covariance is `alpha M` (for load
    /// perturbation the per-load variance is scaled to inject the same total
    /// power, `sigma^2 = alpha tr(M) / n_loads`).
    pub alpha: f64,
    /// Output record duration in seconds (burn-in comes on top).
    pub duration: f64,
    /// Sample period in seconds.
    pub sample_period: f64,
    /// RNG seed; identical seeds give bit-identical records.
    pub seed: u64,
    pub target: PerturbationTarget,
    /// Initial stretch discarded from the output, in seconds.
    pub burn_in: f64,
}

impl AmbientConfig {
    pub fn new(alpha: f64, duration: f64, sample_period: f64, seed: u64) -> AmbientConfig {
        AmbientConfig {
            alpha,
            duration,
            sample_period,
            seed,
            target: PerturbationTarget::GeneratorInputs,
            burn_in: 60.0,
        }
    }

    fn validate(&self, model: &GridModel) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::validation("noise intensity alpha must be positive"));
        }
        if !(self.sample_period > 0.0) {
            return Err(Error::validation("sample period must be positive"));
        }
        // duration must cover >= 10 periods of the slowest retained mode
        let dec = crate::modal::decompose(
            &model.inertia,
            &model.stiffness,
            model.min_damping_ratio().max(1e-9),
        )?;
        if let Some(&lam) = dec.lambdas.get(dec.zero_mode_count) {
            let period = 2.0 * std::f64::consts::PI / lam.sqrt();
            if self.duration < 10.0 * period {
                return Err(Error::validation(format!(
                    "duration {:.1}s shorter than 10 slowest-mode periods ({:.1}s)",
                    self.duration,
                    10.0 * period
                )));
            }
        }
        let min_ratio = model.min_damping_ratio();
        if !(min_ratio > 0.0) {
            return Err(Error::validation("ambient simulation requires positive damping"));
        }
        let needed = 10.0 / min_ratio; // five envelope time constants 2/gamma
        if self.burn_in + 1e-9 < needed {
            return Err(Error::validation(format!(
                "burn-in {:.1}s shorter than five damping time constants ({:.1}s)",
                self.burn_in, needed
            )));
        }
        Ok(())
    }
}

/// First-order realization of a grid model with its input map.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    /// Input map; for swing models `[[0], [M^-1]]`.
    pub b: DMatrix<f64>,
    dim: usize,
}

impl StateSpace {
    /// Build `A`, `B` from a model and verify stability: all eigenvalues of
    /// `A` in the closed left half-plane, with only the zero mode on the
    /// axis (when damping is positive).
    pub fn new(model: &GridModel) -> Result<StateSpace> {
        let n = model.n_generators();
        let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            a[(i, n + i)] = 1.0;
        }
        for i in 0..n {
            for j in 0..n {
                a[(n + i, j)] = -model.stiffness[(i, j)] / model.inertia[i];
            }
            a[(n + i, n + i)] = -model.damping[i] / model.inertia[i];
        }
        let mut b = DMatrix::<f64>::zeros(2 * n, n);
        for i in 0..n {
            b[(n + i, i)] = 1.0 / model.inertia[i];
        }

        if model.min_damping_ratio() > 0.0 {
            let eigs = a.complex_eigenvalues();
            let scale = linalg::max_abs(&a).max(1.0);
            let mut zero_like = 0;
            for e in eigs.iter() {
                if e.norm() <= 1e-9 * scale {
                    zero_like += 1;
                } else if e.re >= 1e-9 * scale {
                    return Err(Error::numerical(format!(
                        "unstable state matrix: eigenvalue {e} in the right half-plane"
                    )));
                }
            }
            if zero_like > 1 {
                return Err(Error::numerical(format!(
                    "state matrix has {zero_like} marginal modes; expected at most one"
                )));
            }
        }
        Ok(StateSpace { a, b, dim: 2 * n })
    }

    /// Wrap an arbitrary `(A, B)` pair (no stability check).
    pub fn from_parts(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<StateSpace> {
        if a.nrows() != a.ncols() {
            return Err(Error::validation("state matrix must be square"));
        }
        if b.nrows() != a.nrows() {
            return Err(Error::validation("input map row count must match the state dimension"));
        }
        let dim = a.nrows();
        Ok(StateSpace { a, b, dim })
    }

    pub fn state_dim(&self) -> usize {
        self.dim
    }
}

/// Exact zero-order-hold discretization of `(A, B)` with process-noise
/// covariance `Q_d` for continuous input noise of covariance `sigma`.
#[derive(Debug, Clone)]
pub struct Discretized {
    pub a_d: DMatrix<f64>,
    pub b_d: DMatrix<f64>,
    pub q_d: DMatrix<f64>,
}

/// Discretize: `A_d = exp(A T_s)`, `B_d = (int_0^Ts exp(A s) ds) B` via the
/// augmented exponential (valid for singular `A`), and
/// `Q_d = int_0^Ts exp(A s) B sigma B^T exp(A^T s) ds` by Van Loan's method:
/// exponentiate `[[-A, B sigma B^T], [0, A^T]] T_s` and read
/// `A_d = F22^T`, `Q_d = F22^T F12`.
pub fn discretize(
    ss: &StateSpace,
    sample_period: f64,
    noise_cov: &DMatrix<f64>,
    noise_map: Option<&DMatrix<f64>>,
) -> Result<Discretized> {
    if !(sample_period > 0.0) {
        return Err(Error::validation("sample period must be positive"));
    }
    let n = ss.state_dim();
    let bn = noise_map.unwrap_or(&ss.b);
    if noise_cov.nrows() != bn.ncols() || noise_cov.ncols() != bn.ncols() {
        return Err(Error::validation("noise covariance does not match the input map"));
    }

    // A_d and B_d from exp([[A, B], [0, 0]] Ts)
    let m = ss.b.ncols();
    let mut aug = DMatrix::<f64>::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&ss.a);
    aug.view_mut((0, n), (n, m)).copy_from(&ss.b);
    let f = (aug * sample_period).exp();
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("matrix exponential did not converge"));
    }
    let a_d = f.view((0, 0), (n, n)).into_owned();
    let b_d = f.view((0, n), (n, m)).into_owned();

    // Q_d from the Van Loan block exponential
    let q_in = bn * noise_cov * bn.transpose();
    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&(-&ss.a));
    h.view_mut((0, n), (n, n)).copy_from(&q_in);
    h.view_mut((n, n), (n, n)).copy_from(&ss.a.transpose());
    let g = (h * sample_period).exp();
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("matrix exponential did not converge"));
    }
    let f22 = g.view((n, n), (n, n)).into_owned();
    let f12 = g.view((0, n), (n, n)).into_owned();
    let mut q_d = f22.transpose() * f12;
    // symmetrize; the construction is symmetric up to roundoff
    q_d = (&q_d + q_d.transpose()) * 0.5;
    Ok(Discretized { a_d, b_d, q_d })
}

fn collect_outputs(
    model: &GridModel,
    channels: &[ChannelId],
    sample_period: f64,
    states: &[DVector<f64>],
    start_time: f64,
) -> Result<Vec<TimeSeries>> {
    let mut out = Vec::with_capacity(channels.len());
    for ch in channels {
        let row = model.output_row(ch)?;
        let samples: Vec<f64> = states.iter().map(|x| (&row * x)[0]).collect();
        out.push(TimeSeries::new(ch.to_string(), sample_period, start_time, samples)?);
    }
    Ok(out)
}

/// Impulse response by direct integration: state starts at `B e_k` and is
/// advanced with the exact transition matrix; outputs are sampled through
/// the channel selectors on `0..=horizon`.
pub fn simulate_impulse(
    model: &GridModel,
    source_gen: u32,
    channels: &[ChannelId],
    sample_period: f64,
    horizon: f64,
) -> Result<Vec<TimeSeries>> {
    let ss = StateSpace::new(model)?;
    let k = model.generator_position(source_gen)?;
    let disc = discretize(&ss, sample_period, &DMatrix::identity(ss.b.ncols(), ss.b.ncols()), None)?;

    let steps = (horizon / sample_period).round() as usize;
    let mut x = ss.b.column(k).into_owned();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x.clone());
    for _ in 0..steps {
        x = &disc.a_d * x;
        states.push(x.clone());
    }
    collect_outputs(model, channels, sample_period, &states, 0.0)
}

/// Ambient record: the discretized dynamics driven by seeded Gaussian
/// process noise, burn-in discarded. Deterministic per `(model, cfg, seed)`.
pub fn simulate_ambient(
    model: &GridModel,
    cfg: &AmbientConfig,
    channels: &[ChannelId],
) -> Result<Vec<TimeSeries>> {
    cfg.validate(model)?;
    let ss = StateSpace::new(model)?;
    let n = ss.state_dim();
    let ng = model.n_generators();

    let (noise_map, noise_cov) = match cfg.target {
        PerturbationTarget::GeneratorInputs => {
            let mut cov = DMatrix::<f64>::zeros(ng, ng);
            for i in 0..ng {
                cov[(i, i)] = cfg.alpha * model.inertia[i];
            }
            (None, cov)
        }
        PerturbationTarget::Loads => {
            let nl = model.interior_ids.len();
            if nl == 0 {
                return Err(Error::validation(
                    "load perturbation requires at least one non-generator bus",
                ));
            }
            // effective generator-side injection of load noise is A^T nu
            let mut map = DMatrix::<f64>::zeros(n, nl);
            let at = model.bus_angle_map.transpose(); // ng x nl
            for i in 0..ng {
                for j in 0..nl {
                    map[(ng + i, j)] = at[(i, j)] / model.inertia[i];
                }
            }
            let sigma2 = cfg.alpha * model.inertia.sum() / nl as f64;
            (Some(map), DMatrix::from_diagonal_element(nl, nl, sigma2))
        }
    };

    let disc = discretize(&ss, cfg.sample_period, &noise_cov, noise_map.as_ref())?;
    let factor = linalg::psd_factor(&disc.q_d, 1e-12)
        .map_err(|e| Error::numerical(format!("process-noise factorization failed: {e}")))?;

    let burn_steps = (cfg.burn_in / cfg.sample_period).round() as usize;
    let out_steps = (cfg.duration / cfg.sample_period).round() as usize;

    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut x = DVector::<f64>::zeros(n);
    let mut z = DVector::<f64>::zeros(n);
    let mut states = Vec::with_capacity(out_steps);
    for step in 0..burn_steps + out_steps {
        for i in 0..n {
            z[i] = StandardNormal.sample(&mut rng);
        }
        x = &disc.a_d * x + &factor * &z;
        if step >= burn_steps {
            states.push(x.clone());
        }
    }
    collect_outputs(model, channels, cfg.sample_period, &states, 0.0)
}

/// Add independent Gaussian measurement noise with standard deviation
/// `relative_level` times the RMS of the series. Deterministic per seed.
pub fn add_measurement_noise(ts: &TimeSeries, relative_level: f64, seed: u64) -> Result<TimeSeries> {
    if relative_level < 0.0 {
        return Err(Error::validation("noise level must be nonnegative"));
    }
    if relative_level == 0.0 {
        return Ok(ts.clone());
    }
    let sd = relative_level * ts.rms();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let samples = ts
        .samples
        .iter()
        .map(|&x| {
            let z: f64 = StandardNormal.sample(&mut rng);
            x + sd * z
        })
        .collect();
    TimeSeries::new(ts.channel.clone(), ts.sample_period, ts.start_time, samples)
}
