//! Quantitative evaluation of recovered responses: normalized MSE against
//! model-based references, nadir detection with sub-sample refinement, and
//! nadir-lag tables.

use crate::error::{Error, Result};
use crate::modal::{ImpulseResponse, ResponseKind};
use crate::recovery::RecoveredResponse;

/// Normalized mean squared error between two curves on `tau >= 0` grids:
/// both are max-abs normalized, the estimate is linearly interpolated onto
/// the reference grid over the common span, and the first and last common
/// points (corrupted by one-sided differences) are excluded:
/// `||T - C||_2 / ||T||_2`.
pub fn normalized_mse_samples(
    ref_step: f64,
    reference: &[f64],
    est_step: f64,
    estimate: &[f64],
) -> Result<f64> {
    if reference.len() < 4 || estimate.len() < 4 {
        return Err(Error::validation("curves too short to compare"));
    }
    let ref_end = (reference.len() - 1) as f64 * ref_step;
    let est_end = (estimate.len() - 1) as f64 * est_step;
    let common = ref_end.min(est_end);
    let span = ref_end.max(est_end);
    if common < 0.9 * span {
        return Err(Error::validation(format!(
            "insufficient grid overlap: common span {common:.2}s vs {span:.2}s"
        )));
    }

    let max_abs = |v: &[f64]| v.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    let rn = max_abs(reference);
    if rn == 0.0 {
        return Err(Error::validation("reference curve is identically zero"));
    }
    // a zero estimate stays zero after normalization: NMSE degenerates to 1
    let en = match max_abs(estimate) {
        0.0 => 1.0,
        v => v,
    };

    let n_common = (common / ref_step).floor() as usize + 1;
    let mut num = 0.0_f64;
    let mut den = 0.0_f64;
    for i in 1..n_common.saturating_sub(1) {
        let tau = i as f64 * ref_step;
        let r = reference[i] / rn;
        // linear interpolation of the estimate at tau
        let pos = tau / est_step;
        let j = pos.floor() as usize;
        let frac = pos - j as f64;
        let e = if j + 1 < estimate.len() {
            (estimate[j] * (1.0 - frac) + estimate[j + 1] * frac) / en
        } else {
            estimate[j] / en
        };
        num += (r - e) * (r - e);
        den += r * r;
    }
    if den == 0.0 {
        return Err(Error::validation("reference is zero on the common grid"));
    }
    Ok((num / den).sqrt())
}

/// Normalized MSE of a recovered response against a model-based reference.
pub fn normalized_mse(reference: &ImpulseResponse, estimate: &RecoveredResponse) -> Result<f64> {
    normalized_mse_samples(reference.step, &reference.samples, estimate.sample_period, &estimate.samples)
}

/// Global extremum of largest absolute value (ties broken by earliest time),
/// refined by a three-point parabolic fit and clamped to the grid span.
/// Returns `(time, value)`.
pub fn detect_nadir(samples: &[f64], step: f64) -> (f64, f64) {
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    let mut best = 0usize;
    for (i, v) in samples.iter().enumerate() {
        if v.abs() > samples[best].abs() {
            best = i;
        }
    }
    let mut time = best as f64 * step;
    let mut value = samples[best];
    if best > 0 && best + 1 < samples.len() {
        let y0 = samples[best - 1];
        let y1 = samples[best];
        let y2 = samples[best + 1];
        let den = y0 - 2.0 * y1 + y2;
        if den.abs() > 1e-300 {
            let off = 0.5 * (y0 - y2) / den;
            if off.abs() <= 1.0 {
                time = (best as f64 + off) * step;
                value = y1 - 0.25 * (y0 - y2) * off;
            }
        }
    }
    let span = (samples.len() - 1) as f64 * step;
    (time.clamp(0.0, span), value)
}

/// One row of the nadir-lag table.
#[derive(Debug, Clone)]
pub struct LagRow {
    pub target: String,
    pub nadir_time: f64,
    pub nadir_value: f64,
    /// Nadir time minus the source's nadir time (zero for the source).
    pub lag: f64,
    pub distance: Option<f64>,
    /// `distance / lag` when both are available and the lag is positive.
    pub speed: Option<f64>,
}

/// Build lag rows from already-detected nadir times. `source_index` points
/// at the row whose lag is zero by definition.
pub fn lag_rows_from_times(
    targets: &[String],
    times: &[f64],
    values: &[f64],
    source_index: usize,
    distances: Option<&[f64]>,
) -> Result<Vec<LagRow>> {
    if targets.len() != times.len() || targets.len() != values.len() {
        return Err(Error::validation("targets, times and values must align"));
    }
    if source_index >= targets.len() {
        return Err(Error::validation("source index out of range"));
    }
    if let Some(d) = distances {
        if d.len() != targets.len() {
            return Err(Error::validation("one distance per target required"));
        }
    }
    let t0 = times[source_index];
    Ok(targets
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let lag = times[i] - t0;
            let distance = distances.map(|d| d[i]);
            let speed = match distance {
                Some(d) if lag > 0.0 => Some(d / lag),
                _ => None,
            };
            LagRow { target: name.clone(), nadir_time: times[i], nadir_value: values[i], lag, distance, speed }
        })
        .collect())
}

/// Nadir-lag table over recovered responses sharing a source. The `source`
/// label must appear among the targets; its nadir time anchors the lags.
pub fn lag_table(
    responses: &[(String, &RecoveredResponse)],
    source: &str,
    distances: Option<&[f64]>,
) -> Result<Vec<LagRow>> {
    let source_index = responses
        .iter()
        .position(|(name, _)| name == source)
        .ok_or_else(|| Error::validation(format!("source `{source}` not among the responses")))?;
    let mut targets = Vec::new();
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (name, resp) in responses {
        let (t, v) = detect_nadir(&resp.samples, resp.sample_period);
        targets.push(name.clone());
        times.push(t);
        values.push(v);
    }
    lag_rows_from_times(&targets, &times, &values, source_index, distances)
}

/// A per-pair NMSE record.
#[derive(Debug, Clone)]
pub struct NmseRow {
    pub kind: ResponseKind,
    pub source: String,
    pub target: String,
    pub nmse: f64,
}

/// Evaluation summary: per-pair errors, per-kind means, the nadir-lag table
/// and a config echo for reproducibility.
#[derive(Debug, Clone, Default)]
pub struct EvaluationReport {
    pub nmse: Vec<NmseRow>,
    pub lags: Vec<LagRow>,
    pub config_echo: String,
    pub notes: Vec<String>,
}

impl EvaluationReport {
    /// Mean NMSE per response kind, in a stable order.
    pub fn kind_means(&self) -> Vec<(ResponseKind, f64)> {
        let kinds = [
            ResponseKind::Frequency,
            ResponseKind::RotorAngle,
            ResponseKind::BusAngle,
            ResponseKind::LineFlow,
        ];
        let mut out = Vec::new();
        for kind in kinds {
            let vals: Vec<f64> =
                self.nmse.iter().filter(|r| r.kind == kind).map(|r| r.nmse).collect();
            if !vals.is_empty() {
                out.push((kind, vals.iter().sum::<f64>() / vals.len() as f64));
            }
        }
        out
    }
}
