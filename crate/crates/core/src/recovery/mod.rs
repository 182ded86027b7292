//! The ambient-data recovery pipeline: reference-angle preprocessing,
//! zero-phase bandpass detrending, biased cross-correlation, numerical
//! differentiation, and max-abs normalization.
//!
//! For channels `x_k` (source) and `x_l` (target) the recovered response is
//!
//! ```text
//! R(tau) = sign * d^n/dtau^n  C[tau],    C[tau] = (1/M) sum_m x_k[m] x_l[m - tau]
//! ```
//!
//! restricted to `tau >= 0` and normalized by its maximum absolute value.
//! The differentiation count `n` is 0 for frequency-from-frequency, 1 for
//! angle-from-angle and flow-from-angle, and 2 for frequency-from-angle.
//! The sign comes from the equivalence theory: the stationary
//! cross-correlation relates to the impulse response through a negative
//! coefficient when the target channel carries an angle-like quantity, and
//! through a positive one when the target is a speed (each time derivative
//! moved onto the target side of the correlation flips the sign once).

pub mod fft;
pub mod filter;

use crate::error::{Error, Result};
use crate::modal::ResponseKind;
use crate::series::{same_rate, CorrelationSequence, TimeSeries};
use crate::ChannelId;

/// How the reference angle is formed before angle channels are correlated.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferencePolicy {
    /// Arithmetic mean of all available angle channels.
    Average,
    /// Inertia-weighted mean of the available generator channels (the
    /// center-of-mass angle). Removes the network's uniform zero mode
    /// exactly without touching the oscillatory modes.
    InertiaWeighted,
    /// Subtract one designated channel.
    Designated(String),
    /// No reference subtraction.
    None,
}

/// Parameters of the recovery pipeline.
#[derive(Debug, Clone)]
pub struct RecoveryConfig {
    /// Bandpass edges in Hz.
    pub passband: (f64, f64),
    /// FIR tap count; `None` derives `6 ceil(fs/low) + 1`.
    pub taps: Option<usize>,
    /// Correlation lag horizon in seconds.
    pub max_lag: f64,
    /// Differentiation count applied to the correlation (0, 1 or 2).
    pub diff_order: u8,
    /// Optional physical nadir value used by the scaling step.
    pub nadir: Option<f64>,
    /// Reference-angle policy (applied by the caller that owns all
    /// channels; `recover_response` takes prepared signals).
    pub reference: ReferencePolicy,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            passband: (0.1, 0.7),
            taps: None,
            max_lag: 10.0,
            diff_order: 1,
            nadir: None,
            reference: ReferencePolicy::InertiaWeighted,
        }
    }
}

impl RecoveryConfig {
    /// Defaults for recovering `kind` from like-kind channels (frequency
    /// from frequency data, angles and flows from angle data).
    pub fn for_kind(kind: ResponseKind) -> RecoveryConfig {
        RecoveryConfig { diff_order: default_diff_order(kind), ..RecoveryConfig::default() }
    }

    fn validate(&self, sample_rate: f64) -> Result<()> {
        let (low, high) = self.passband;
        if !(low > 0.0 && low < high && high < sample_rate / 2.0) {
            return Err(Error::validation(format!(
                "passband ({low}, {high}) Hz must satisfy 0 < low < high < Nyquist"
            )));
        }
        if self.diff_order > 2 {
            return Err(Error::validation("differentiation order must be 0, 1 or 2"));
        }
        if !(self.max_lag > 0.0) {
            return Err(Error::validation("max lag must be positive"));
        }
        Ok(())
    }
}

/// Differentiation count for recovering `kind` from like-kind data.
pub fn default_diff_order(kind: ResponseKind) -> u8 {
    match kind {
        ResponseKind::Frequency => 0,
        ResponseKind::RotorAngle | ResponseKind::BusAngle | ResponseKind::LineFlow => 1,
    }
}

/// A recovered, max-abs-normalized dynamic response on `tau >= 0`.
#[derive(Debug, Clone)]
pub struct RecoveredResponse {
    pub kind: ResponseKind,
    pub source: String,
    pub target: String,
    pub sample_period: f64,
    /// Normalized samples; `max |samples| = 1` unless identically zero.
    pub samples: Vec<f64>,
    /// The max-abs value divided out during normalization.
    pub norm: f64,
    /// Physical scale factor from the nadir-matching step, if applied.
    pub scale: Option<f64>,
}

impl RecoveredResponse {
    /// Samples in physical units, when a scale has been attached.
    pub fn physical_samples(&self) -> Option<Vec<f64>> {
        self.scale.map(|s| self.samples.iter().map(|v| v * s).collect())
    }
}

fn check_layout(channels: &[&TimeSeries]) -> Result<()> {
    let first = channels.first().ok_or_else(|| Error::validation("no channels given"))?;
    for ch in channels {
        if ch.samples.len() != first.samples.len() {
            return Err(Error::validation(format!(
                "channel {} has {} samples, expected {}",
                ch.channel,
                ch.samples.len(),
                first.samples.len()
            )));
        }
        if !same_rate(ch.sample_period, first.sample_period) {
            return Err(Error::validation(format!(
                "channel {} sample period {} differs from {}",
                ch.channel, ch.sample_period, first.sample_period
            )));
        }
    }
    Ok(())
}

/// Pointwise arithmetic mean across channels (the plain center-of-mass
/// reference of the preprocessing step).
pub fn reference_angle(channels: &[&TimeSeries]) -> Result<TimeSeries> {
    reference_angle_weighted(channels, &vec![1.0; channels.len()])
}

/// Weighted pointwise mean across channels; weights are normalized to unit
/// sum. With generator-inertia weights this is the center-of-mass angle,
/// which cancels the uniform zero mode exactly.
pub fn reference_angle_weighted(channels: &[&TimeSeries], weights: &[f64]) -> Result<TimeSeries> {
    check_layout(channels)?;
    if weights.len() != channels.len() {
        return Err(Error::validation("one weight per channel required"));
    }
    let total: f64 = weights.iter().sum();
    if !(total.abs() > 0.0) {
        return Err(Error::validation("weights must not sum to zero"));
    }
    let n = channels[0].samples.len();
    let mut out = vec![0.0_f64; n];
    for (ch, &w) in channels.iter().zip(weights) {
        let w = w / total;
        for (o, &x) in out.iter_mut().zip(&ch.samples) {
            *o += w * x;
        }
    }
    TimeSeries::new("reference", channels[0].sample_period, channels[0].start_time, out)
}

/// Apply the reference policy to a set of channels: angle channels get the
/// angle reference subtracted and frequency channels the frequency
/// reference; flow channels pass through (they are angle differences and
/// carry no common mode). Channels whose labels do not parse as standard
/// names pass through untouched.
///
/// `gen_inertia` supplies `(bus id, inertia)` pairs for the
/// inertia-weighted policy; only generators whose angle (resp. frequency)
/// channel is present contribute, with weights renormalized over them.
pub fn subtract_reference(
    channels: &[TimeSeries],
    policy: &ReferencePolicy,
    gen_inertia: &[(u32, f64)],
) -> Result<Vec<TimeSeries>> {
    if *policy == ReferencePolicy::None {
        return Ok(channels.to_vec());
    }
    let parsed: Vec<Option<ChannelId>> =
        channels.iter().map(|c| c.channel.parse::<ChannelId>().ok()).collect();

    let pick = |speed_side: bool| -> Vec<usize> {
        parsed
            .iter()
            .enumerate()
            .filter(|(_, p)| {
                p.map(|ch| if speed_side { ch.is_speed() } else { ch.is_angle() })
                    .unwrap_or(false)
            })
            .map(|(i, _)| i)
            .collect()
    };

    let reference_for = |speed_side: bool| -> Result<Option<TimeSeries>> {
        let members = pick(speed_side);
        if members.is_empty() {
            return Ok(None);
        }
        let refs: Vec<&TimeSeries> = members.iter().map(|&i| &channels[i]).collect();
        match policy {
            ReferencePolicy::None => Ok(None),
            ReferencePolicy::Average => Ok(Some(reference_angle(&refs)?)),
            ReferencePolicy::InertiaWeighted => {
                // restrict to generator channels that have a known inertia
                let mut gens = Vec::new();
                let mut weights = Vec::new();
                for &i in &members {
                    let id = match parsed[i] {
                        Some(ChannelId::GenAngle(id)) | Some(ChannelId::GenFreq(id)) => id,
                        _ => continue,
                    };
                    if let Some(&(_, m)) = gen_inertia.iter().find(|(g, _)| *g == id) {
                        gens.push(&channels[i]);
                        weights.push(m);
                    }
                }
                if gens.is_empty() {
                    return Err(Error::validation(
                        "inertia-weighted reference needs at least one generator channel \
                         with known inertia (use the average or none policy otherwise)",
                    ));
                }
                Ok(Some(reference_angle_weighted(&gens, &weights)?))
            }
            ReferencePolicy::Designated(label) => {
                let idx = members.iter().find(|&&i| channels[i].channel == *label);
                match idx {
                    Some(&i) => Ok(Some(channels[i].clone())),
                    None => Ok(None),
                }
            }
        }
    };

    let angle_ref = reference_for(false)?;
    let speed_ref = reference_for(true)?;
    if let ReferencePolicy::Designated(label) = policy {
        if angle_ref.is_none() && speed_ref.is_none() {
            return Err(Error::validation(format!(
                "designated reference channel `{label}` not found"
            )));
        }
    }

    let mut out = Vec::with_capacity(channels.len());
    for (i, ch) in channels.iter().enumerate() {
        let reference = match parsed[i] {
            Some(c) if c.is_angle() => angle_ref.as_ref(),
            Some(c) if c.is_speed() => speed_ref.as_ref(),
            _ => None,
        };
        match reference {
            Some(r) => {
                let mut s = ch.subtract(r)?;
                s.channel = ch.channel.clone();
                out.push(s);
            }
            None => out.push(ch.clone()),
        }
    }
    Ok(out)
}

/// Remove the mean and apply the zero-phase FIR bandpass; the output is
/// trimmed by half the kernel length at each end (group-delay compensation)
/// so filtered samples stay aligned with the input time base.
pub fn detrend_bandpass(ts: &TimeSeries, cfg: &RecoveryConfig) -> Result<TimeSeries> {
    let fs = 1.0 / ts.sample_period;
    cfg.validate(fs)?;
    let taps = cfg.taps.unwrap_or_else(|| filter::default_taps(fs, cfg.passband.0));
    let taps = if taps % 2 == 0 { taps + 1 } else { taps };
    if ts.samples.len() <= 3 * taps {
        return Err(Error::validation(format!(
            "record too short: {} samples vs {} filter taps (need more than 3x)",
            ts.samples.len(),
            taps
        )));
    }
    let kernel = filter::bandpass_kernel(fs, cfg.passband.0, cfg.passband.1, taps)?;
    let mean = ts.mean();
    let centered: Vec<f64> = ts.samples.iter().map(|&x| x - mean).collect();
    let full = fft::convolve_full(&centered, &kernel);
    let half = (taps - 1) / 2;
    let n = ts.samples.len();
    // zero-phase: sample i of the output corresponds to input index i + half
    let out: Vec<f64> = full[taps - 1..n].to_vec();
    TimeSeries::new(
        ts.channel.clone(),
        ts.sample_period,
        ts.start_time + half as f64 * ts.sample_period,
        out,
    )
}

/// Biased discrete cross-correlation on lags `[-max_lag, max_lag]`:
/// `C[tau] = (1/M) sum_m x[m] y[m - tau]` with `M` the (trimmed) common
/// length, normalized by `M` regardless of overlap.
pub fn cross_correlate(x: &TimeSeries, y: &TimeSeries, max_lag: f64) -> Result<CorrelationSequence> {
    if !same_rate(x.sample_period, y.sample_period) {
        return Err(Error::validation(format!(
            "sample period mismatch: {} vs {}",
            x.sample_period, y.sample_period
        )));
    }
    let m = x.samples.len().min(y.samples.len());
    if m == 0 {
        return Err(Error::validation("empty input"));
    }
    let lag_steps = (max_lag / x.sample_period).round() as usize;
    if lag_steps >= m {
        return Err(Error::validation(format!(
            "max lag of {lag_steps} steps exceeds the record ({m} samples)"
        )));
    }
    let raw = fft::correlate_two_sided(&x.samples[..m], &y.samples[..m], lag_steps);
    let scale = 1.0 / m as f64;
    Ok(CorrelationSequence {
        source: x.channel.clone(),
        target: y.channel.clone(),
        sample_period: x.sample_period,
        first_lag: -(lag_steps as i64),
        values: raw.into_iter().map(|v| v * scale).collect(),
    })
}

/// First or second central difference on the lag grid, one-sided at the two
/// boundary points.
pub fn differentiate(seq: &CorrelationSequence, order: u8) -> Result<CorrelationSequence> {
    if !(order == 1 || order == 2) {
        return Err(Error::validation("differentiation order must be 1 or 2"));
    }
    let v = &seq.values;
    let n = v.len();
    if n < 5 {
        return Err(Error::validation("need at least 5 samples to differentiate"));
    }
    let h = seq.sample_period;
    let mut out = vec![0.0_f64; n];
    match order {
        1 => {
            for i in 1..n - 1 {
                out[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
            }
            out[0] = (v[1] - v[0]) / h;
            out[n - 1] = (v[n - 1] - v[n - 2]) / h;
        }
        _ => {
            for i in 1..n - 1 {
                out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
            }
            out[0] = (v[2] - 2.0 * v[1] + v[0]) / (h * h);
            out[n - 1] = (v[n - 1] - 2.0 * v[n - 2] + v[n - 3]) / (h * h);
        }
    }
    Ok(CorrelationSequence {
        source: seq.source.clone(),
        target: seq.target.clone(),
        sample_period: seq.sample_period,
        first_lag: seq.first_lag,
        values: out,
    })
}

/// Sign of the correlation-to-response identity for a given target channel:
/// positive when the target carries a speed, negative otherwise. Falls back
/// to the configured differentiation count when the label is not a standard
/// channel name (0 differentiations only arise frequency-from-frequency).
fn response_sign(target_label: &str, kind: ResponseKind, diff_order: u8) -> f64 {
    match target_label.parse::<ChannelId>() {
        Ok(ch) if ch.is_speed() => 1.0,
        Ok(_) => -1.0,
        Err(_) => {
            if kind == ResponseKind::Frequency && diff_order == 0 {
                1.0
            } else {
                -1.0
            }
        }
    }
}

/// Run the recovery pipeline on a prepared source/target pair: detrend and
/// bandpass both channels, cross-correlate, differentiate per the response
/// kind, fix the sign, restrict to non-negative lags and normalize.
pub fn recover_response(
    source: &TimeSeries,
    target: &TimeSeries,
    kind: ResponseKind,
    cfg: &RecoveryConfig,
) -> Result<RecoveredResponse> {
    let f_src = detrend_bandpass(source, cfg)?;
    let f_tgt = detrend_bandpass(target, cfg)?;
    let usable = f_src.duration();
    if cfg.max_lag > usable / 4.0 + 1e-12 {
        return Err(Error::validation(format!(
            "max lag {:.2}s exceeds a quarter of the filtered record ({:.2}s)",
            cfg.max_lag,
            usable / 4.0
        )));
    }
    let corr = cross_correlate(&f_src, &f_tgt, cfg.max_lag)?;
    let diffed = match cfg.diff_order {
        0 => corr,
        order => differentiate(&corr, order)?,
    };
    let sign = response_sign(&target.channel, kind, cfg.diff_order);
    let half = diffed.nonnegative();
    let mut samples: Vec<f64> = half.values.iter().map(|&v| sign * v).collect();
    let norm = samples.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    if norm == 0.0 {
        return Err(Error::numerical("no excitation: correlation is identically zero"));
    }
    for s in &mut samples {
        *s /= norm;
    }
    Ok(RecoveredResponse {
        kind,
        source: source.channel.clone(),
        target: target.channel.clone(),
        sample_period: half.sample_period,
        samples,
        norm,
        scale: None,
    })
}

/// Attach a physical scale by matching the response extremum to a known
/// nadir value; the extremum sign must agree with the nadir's sign.
pub fn scale_to_nadir(resp: &RecoveredResponse, nadir_value: f64) -> Result<RecoveredResponse> {
    // the sample extremum, not the parabola-refined vertex: a normalized
    // response scales so its extreme sample equals the nadir exactly
    let mut extremum = 0.0_f64;
    for &v in &resp.samples {
        if v.abs() > extremum.abs() {
            extremum = v;
        }
    }
    if extremum == 0.0 {
        return Err(Error::validation("response has no extremum to scale"));
    }
    if extremum.signum() != nadir_value.signum() {
        return Err(Error::validation(format!(
            "nadir sign mismatch: response extremum {extremum:.3} vs nadir {nadir_value:.3}"
        )));
    }
    let scale = nadir_value / extremum;
    Ok(RecoveredResponse { scale: Some(scale), ..resp.clone() })
}
