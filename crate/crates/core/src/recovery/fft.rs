//! FFT-backed convolution and biased cross-correlation on real signals.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

fn fft(buf: &mut [Complex<f64>], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    plan.process(buf);
}

/// Full linear convolution `x * h` (length `x.len() + h.len() - 1`).
pub fn convolve_full(x: &[f64], h: &[f64]) -> Vec<f64> {
    let out_len = x.len() + h.len() - 1;
    let n = next_pow2(out_len);
    let mut fx: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fx.resize(n, Complex::new(0.0, 0.0));
    let mut fh: Vec<Complex<f64>> = h.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fh.resize(n, Complex::new(0.0, 0.0));
    fft(&mut fx, false);
    fft(&mut fh, false);
    for (a, b) in fx.iter_mut().zip(&fh) {
        *a *= *b;
    }
    fft(&mut fx, true);
    let scale = 1.0 / n as f64;
    fx[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Raw correlation sums `c[l] = sum_m x[m] y[m - l]` for `l` in
/// `[-max_lag, max_lag]`, computed circularly with enough padding to be
/// exact. Inputs must have equal length `>= max_lag + 1`.
pub fn correlate_two_sided(x: &[f64], y: &[f64], max_lag: usize) -> Vec<f64> {
    assert_eq!(x.len(), y.len());
    let m = x.len();
    assert!(max_lag < m);
    let n = next_pow2((2 * m).max(m + max_lag + 1));
    let mut fx: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fx.resize(n, Complex::new(0.0, 0.0));
    let mut fy: Vec<Complex<f64>> = y.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fy.resize(n, Complex::new(0.0, 0.0));
    fft(&mut fx, false);
    fft(&mut fy, false);
    for (a, b) in fx.iter_mut().zip(&fy) {
        *a *= b.conj();
    }
    fft(&mut fx, true);
    let scale = 1.0 / n as f64;
    let mut out = Vec::with_capacity(2 * max_lag + 1);
    for l in -(max_lag as i64)..=(max_lag as i64) {
        let idx = l.rem_euclid(n as i64) as usize;
        out.push(fx[idx].re * scale);
    }
    out
}
