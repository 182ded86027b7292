//! Modal analysis of the swing dynamics.
//!
//! The generalized eigenproblem `K V = M V Lambda` is reduced to a standard
//! symmetric one through the congruence `W = M^{-1/2} K M^{-1/2}` (exact for
//! diagonal `M`), giving an M-orthonormal mode-shape matrix `V = M^{-1/2} Q`
//! with `V^T M V = I` and `V^T K V = Lambda`. Under uniform damping
//! `D = gamma M` each mode is a scalar second-order system
//! `z'' + gamma z' + lambda z = w` with roots
//!
//! ```text
//! c = (-gamma + sqrt(gamma^2 - 4 lambda)) / 2,
//! d = (-gamma - sqrt(gamma^2 - 4 lambda)) / 2,    eta = 1 / sqrt(gamma^2 - 4 lambda)
//! ```
//!
//! from which closed-form impulse responses and the stationary
//! cross-correlation of white-noise-driven angles follow. Zero modes (the
//! reference-angle ambiguity of a connected Laplacian) are excluded from all
//! sums.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridModel;
use crate::linalg::{self, jacobi_eigh};
use crate::series::CorrelationSequence;
use crate::ChannelId;

/// Per-mode root pair and coefficient of the second-order kernel.
#[derive(Debug, Clone, Copy)]
pub struct ModeParams {
    pub c: Complex64,
    pub d: Complex64,
    /// `1 / (c - d)`; meaningless for critically damped modes.
    pub eta: Complex64,
    /// `gamma^2 == 4 lambda` to within 1e-12: the kernel degenerates to
    /// `tau * exp(c tau)`.
    pub critically_damped: bool,
}

/// Result of the generalized symmetric eigendecomposition plus the uniform
/// damping ratio and mode parameters.
#[derive(Debug, Clone)]
pub struct ModalDecomposition {
    /// M-orthonormal mode shapes, one column per mode, eigenvalues ascending.
    pub shapes: DMatrix<f64>,
    /// Generalized eigenvalues, ascending.
    pub lambdas: Vec<f64>,
    /// Uniform damping ratio (`D = gamma M`).
    pub gamma: f64,
    pub mode_params: Vec<ModeParams>,
    /// Number of leading eigenvalues below the deflation tolerance.
    pub zero_mode_count: usize,
}

/// Kind of dynamic response; determines the modal kernel (speed or angle)
/// and, downstream, the differentiation count of the recovery pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResponseKind {
    Frequency,
    RotorAngle,
    BusAngle,
    LineFlow,
}

impl ResponseKind {
    pub fn slug(&self) -> &'static str {
        match self {
            ResponseKind::Frequency => "frequency",
            ResponseKind::RotorAngle => "rotor-angle",
            ResponseKind::BusAngle => "bus-angle",
            ResponseKind::LineFlow => "line-flow",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "frequency" => Ok(ResponseKind::Frequency),
            "rotor-angle" => Ok(ResponseKind::RotorAngle),
            "bus-angle" => Ok(ResponseKind::BusAngle),
            "line-flow" => Ok(ResponseKind::LineFlow),
            other => Err(Error::validation(format!("unknown response kind `{other}`"))),
        }
    }

    /// The response kind measured by a channel.
    pub fn of_channel(ch: &ChannelId) -> ResponseKind {
        match ch {
            ChannelId::GenFreq(_) => ResponseKind::Frequency,
            ChannelId::GenAngle(_) => ResponseKind::RotorAngle,
            ChannelId::BusAngle(_) => ResponseKind::BusAngle,
            ChannelId::LineFlow(_, _) => ResponseKind::LineFlow,
        }
    }
}

impl std::fmt::Display for ResponseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.slug())
    }
}

/// A model-based impulse response on a uniform non-negative tau grid.
#[derive(Debug, Clone)]
pub struct ImpulseResponse {
    pub kind: ResponseKind,
    /// Input location label (source generator).
    pub source: String,
    /// Output channel label.
    pub target: String,
    /// Grid step in seconds; the grid starts at tau = 0.
    pub step: f64,
    pub samples: Vec<f64>,
    /// True for model-based (physical-unit) responses, false for normalized.
    pub physical: bool,
}

fn mode_params(lambda: f64, gamma: f64) -> ModeParams {
    let disc = gamma * gamma - 4.0 * lambda;
    if disc.abs() < 1e-12 {
        // the square root would amplify roundoff in the discriminant to
        // ~1e-6; pin the double root instead
        let c = Complex64::new(-gamma * 0.5, 0.0);
        return ModeParams { c, d: c, eta: Complex64::new(0.0, 0.0), critically_damped: true };
    }
    let sq = if disc >= 0.0 {
        Complex64::new(disc.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-disc).sqrt())
    };
    let c = Complex64::new((-gamma + sq.re) * 0.5, sq.im * 0.5);
    let d = Complex64::new((-gamma - sq.re) * 0.5, -sq.im * 0.5);
    ModeParams { c, d, eta: sq.finv(), critically_damped: false }
}

/// Solve `K V = M V Lambda` for diagonal positive `M` and symmetric PSD `K`.
pub fn decompose(m_diag: &DVector<f64>, k: &DMatrix<f64>, gamma: f64) -> Result<ModalDecomposition> {
    let n = m_diag.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::validation("inertia and stiffness dimensions disagree"));
    }
    if m_diag.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::validation("inertia diagonal must be positive"));
    }
    let scale = linalg::max_abs(k).max(1.0);
    if linalg::asymmetry(k) > 1e-9 * scale {
        return Err(Error::validation(format!(
            "stiffness matrix asymmetry {:.3e} exceeds tolerance",
            linalg::asymmetry(k)
        )));
    }

    let inv_sqrt_m = DVector::from_iterator(n, m_diag.iter().map(|m| 1.0 / m.sqrt()));
    let mut w = k.clone();
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] *= inv_sqrt_m[i] * inv_sqrt_m[j];
        }
    }
    let eig = jacobi_eigh(&w)?;
    let lam_max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    if eig.values[0] < -1e-8 * lam_max.max(1.0) {
        return Err(Error::validation(format!(
            "stiffness matrix is not positive semidefinite (lambda_min = {:.3e})",
            eig.values[0]
        )));
    }

    let mut shapes = eig.vectors;
    for j in 0..n {
        for i in 0..n {
            shapes[(i, j)] *= inv_sqrt_m[i];
        }
    }
    // re-apply the sign convention in V coordinates: scaling by M^{-1/2}
    // preserves signs, but keep the convention explicit for shaped vectors
    for j in 0..n {
        let lead = shapes.column(j).iter().find(|x| x.abs() > 1e-12).copied().unwrap_or(0.0);
        if lead < 0.0 {
            for i in 0..n {
                shapes[(i, j)] = -shapes[(i, j)];
            }
        }
    }

    let deflate_tol = 1e-8 * lam_max;
    let zero_mode_count = eig.values.iter().filter(|&&v| v <= deflate_tol).count();
    let lambdas: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let params = lambdas.iter().map(|&l| mode_params(l, gamma)).collect();

    Ok(ModalDecomposition {
        shapes,
        lambdas,
        gamma,
        mode_params: params,
        zero_mode_count,
    })
}

impl ModalDecomposition {
    /// Convenience constructor from a model with uniform damping.
    pub fn of_model(model: &GridModel) -> Result<ModalDecomposition> {
        let gamma = model.uniform_gamma().ok_or_else(|| {
            Error::validation("modal closed forms require uniform damping D = gamma M")
        })?;
        decompose(&model.inertia, &model.stiffness, gamma)
    }

    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    /// Indices of modes above the deflation tolerance.
    pub fn retained(&self) -> std::ops::Range<usize> {
        self.zero_mode_count..self.n_modes()
    }

    /// Damped natural frequency of mode `i` in Hz (`Im c_i / 2 pi`).
    pub fn mode_frequency_hz(&self, i: usize) -> f64 {
        self.mode_params[i].c.im / (2.0 * std::f64::consts::PI)
    }

    /// Angle kernel of mode `i`: `eta (e^{c tau} - e^{d tau})`, degenerating
    /// to `tau e^{c tau}` when critically damped.
    fn angle_kernel(&self, i: usize, tau: f64) -> Complex64 {
        let p = &self.mode_params[i];
        if p.critically_damped {
            Complex64::new(tau * (p.c.re * tau).exp(), 0.0)
        } else {
            p.eta * ((p.c * tau).exp() - (p.d * tau).exp())
        }
    }

    /// Speed kernel of mode `i`: `eta (c e^{c tau} - d e^{d tau})`,
    /// degenerating to `(1 + c tau) e^{c tau}`.
    fn speed_kernel(&self, i: usize, tau: f64) -> Complex64 {
        let p = &self.mode_params[i];
        if p.critically_damped {
            Complex64::new((1.0 + p.c.re * tau) * (p.c.re * tau).exp(), 0.0)
        } else {
            p.eta * (p.c * (p.c * tau).exp() - p.d * (p.d * tau).exp())
        }
    }

    /// Impulse-response samples for an input at generator `source` observed
    /// through `target_row` (a row over generator angles), on the grid
    /// `0, step, ..., (len-1) step`. Zero modes are excluded.
    pub fn response_samples(
        &self,
        kind: ResponseKind,
        source: usize,
        target_row: &RowDVector<f64>,
        step: f64,
        len: usize,
    ) -> Result<Vec<f64>> {
        let n = self.n_modes();
        if source >= n {
            return Err(Error::validation(format!("source index {source} out of range")));
        }
        if target_row.len() != n {
            return Err(Error::validation("target row has wrong dimension"));
        }
        let weights: Vec<f64> = self
            .retained()
            .map(|i| self.shapes[(source, i)] * (target_row * self.shapes.column(i))[0])
            .collect();

        let mut out = Vec::with_capacity(len);
        let mut worst_im = 0.0_f64;
        for s in 0..len {
            let tau = s as f64 * step;
            let mut acc = Complex64::new(0.0, 0.0);
            for (w, i) in weights.iter().zip(self.retained()) {
                let kern = match kind {
                    ResponseKind::Frequency => self.speed_kernel(i, tau),
                    _ => self.angle_kernel(i, tau),
                };
                acc += kern * *w;
            }
            worst_im = worst_im.max(acc.im.abs());
            out.push(acc.re);
        }
        if worst_im > 1e-10 {
            return Err(Error::numerical(format!(
                "impulse response has imaginary residue {worst_im:.3e}"
            )));
        }
        Ok(out)
    }

    /// Closed-form stationary cross-correlation of white-noise-driven rotor
    /// angles `k` and `l` on a non-negative lag grid:
    ///
    /// ```text
    /// C(tau) = -alpha sum_i V_ki V_li eta_i^2 [ (1/(2 c_i) + 1/gamma) e^{c_i tau}
    ///                                          + (1/(2 d_i) + 1/gamma) e^{d_i tau} ]
    /// ```
    ///
    /// with the input covariance `alpha M`. Zero modes are excluded (the
    /// expression diverges for them).
    pub fn analytic_angle_xcorr(
        &self,
        alpha: f64,
        k: usize,
        l: usize,
        step: f64,
        len: usize,
    ) -> Result<CorrelationSequence> {
        let n = self.n_modes();
        if k >= n || l >= n {
            return Err(Error::validation("generator index out of range"));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::validation("analytic cross-correlation requires gamma > 0"));
        }
        if self.mode_params[self.retained()].iter().any(|p| p.critically_damped) {
            return Err(Error::numerical(
                "analytic cross-correlation not defined for critically damped modes",
            ));
        }
        let gamma_inv = 1.0 / self.gamma;
        let mut values = Vec::with_capacity(len);
        for s in 0..len {
            let tau = s as f64 * step;
            let mut acc = Complex64::new(0.0, 0.0);
            for i in self.retained() {
                let p = &self.mode_params[i];
                let w = self.shapes[(k, i)] * self.shapes[(l, i)];
                let eta2 = p.eta * p.eta;
                let term = (0.5 * p.c.finv() + gamma_inv) * (p.c * tau).exp()
                    + (0.5 * p.d.finv() + gamma_inv) * (p.d * tau).exp();
                acc += eta2 * term * w;
            }
            values.push(-alpha * acc.re);
        }
        Ok(CorrelationSequence {
            source: format!("angle[{k}]"),
            target: format!("angle[{l}]"),
            sample_period: step,
            first_lag: 0,
            values,
        })
    }

    /// Check the decomposition invariants against the inputs it was built
    /// from; returns the worst deviations `(orthonormality, diagonalization)`.
    pub fn residuals(&self, m_diag: &DVector<f64>, k: &DMatrix<f64>) -> (f64, f64) {
        let m = DMatrix::from_diagonal(m_diag);
        let n = self.n_modes();
        let gram = self.shapes.transpose() * m * &self.shapes;
        let ortho = linalg::max_abs(&(gram - DMatrix::identity(n, n)));
        let lam = DMatrix::from_diagonal(&DVector::from_vec(self.lambdas.clone()));
        let diag = linalg::max_abs(&(self.shapes.transpose() * k * &self.shapes - lam));
        (ortho, diag)
    }
}

/// Model-based impulse response of `target` to a unit impulse at generator
/// bus `source_gen`, evaluated from the modal closed forms.
pub fn impulse_response(
    dec: &ModalDecomposition,
    model: &GridModel,
    source_gen: u32,
    target: &ChannelId,
    step: f64,
    len: usize,
) -> Result<ImpulseResponse> {
    let kind = ResponseKind::of_channel(target);
    let source = model.generator_position(source_gen)?;
    let row = match target {
        ChannelId::GenFreq(id) => {
            let pos = model.generator_position(*id)?;
            RowDVector::from_fn(model.n_generators(), |_, c| if c == pos { 1.0 } else { 0.0 })
        }
        _ => model.delta_row(target)?,
    };
    let samples = dec.response_samples(kind, source, &row, step, len)?;
    Ok(ImpulseResponse {
        kind,
        source: format!("gen:{source_gen}"),
        target: target.to_string(),
        step,
        samples,
        physical: true,
    })
}
