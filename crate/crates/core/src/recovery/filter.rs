//! Linear-phase FIR bandpass design: windowed-sinc (Hamming), realized as a
//! difference of two lowpass prototypes, with the DC gain zeroed exactly.
//! Applied with group-delay compensation the filter is zero-phase, which is
//! what keeps correlation peaks (nadir timings) in place.

use crate::error::{Error, Result};

/// Default tap count: `6 ceil(fs / f_low) + 1` (about six periods of the
/// lowest passband frequency, odd so the kernel has a symmetric center).
pub fn default_taps(sample_rate: f64, low_hz: f64) -> usize {
    6 * (sample_rate / low_hz).ceil() as usize + 1
}

/// Windowed-sinc bandpass kernel with unit passband gain.
pub fn bandpass_kernel(sample_rate: f64, low_hz: f64, high_hz: f64, taps: usize) -> Result<Vec<f64>> {
    if !(low_hz > 0.0 && low_hz < high_hz && high_hz < sample_rate / 2.0) {
        return Err(Error::validation(format!(
            "passband ({low_hz}, {high_hz}) Hz must satisfy 0 < low < high < Nyquist ({})",
            sample_rate / 2.0
        )));
    }
    let taps = if taps % 2 == 0 { taps + 1 } else { taps };
    if taps < 3 {
        return Err(Error::validation("kernel needs at least 3 taps"));
    }
    let mid = (taps - 1) / 2;
    let mut kernel = vec![0.0_f64; taps];
    // difference of lowpass sincs at the two edges
    for (i, k) in kernel.iter_mut().enumerate() {
        let n = i as f64 - mid as f64;
        let lp = |fc: f64| -> f64 {
            if n == 0.0 {
                2.0 * fc / sample_rate
            } else {
                (2.0 * std::f64::consts::PI * fc / sample_rate * n).sin()
                    / (std::f64::consts::PI * n)
            }
        };
        *k = lp(high_hz) - lp(low_hz);
    }
    // Hamming window
    for (i, k) in kernel.iter_mut().enumerate() {
        let w = 0.54
            - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (taps - 1) as f64).cos();
        *k *= w;
    }
    // zero the DC gain exactly
    let mean = kernel.iter().sum::<f64>() / taps as f64;
    for k in kernel.iter_mut() {
        *k -= mean;
    }
    Ok(kernel)
}

/// Magnitude of the kernel's frequency response at `f_hz`, with the group
/// delay referred to the kernel center (zero-phase convention).
pub fn kernel_gain(kernel: &[f64], sample_rate: f64, f_hz: f64) -> f64 {
    let mid = (kernel.len() - 1) as f64 / 2.0;
    let omega = 2.0 * std::f64::consts::PI * f_hz / sample_rate;
    let (mut re, mut im) = (0.0_f64, 0.0_f64);
    for (i, &h) in kernel.iter().enumerate() {
        let phase = omega * (i as f64 - mid);
        re += h * phase.cos();
        im -= h * phase.sin();
    }
    (re * re + im * im).sqrt()
}
