//! Small dense linear-algebra helpers: a cyclic Jacobi eigensolver for
//! symmetric matrices with a deterministic ordering and sign convention, and
//! a few matrix predicates used by model construction.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Eigendecomposition of a real symmetric matrix: `a = vectors * diag(values)
/// * vectors^T`, eigenvalues ascending, eigenvectors orthonormal columns.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Largest absolute entry.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()))
}

/// Largest absolute asymmetry `|a_ij - a_ji|`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Cyclic Jacobi eigensolver for a symmetric matrix.
///
/// Sweeps Givens rotations over the strict upper triangle until the
/// off-diagonal mass is at roundoff level. Eigenvalues are returned in
/// ascending order (stable under ties) and each eigenvector is flipped so
/// that its first component of non-negligible magnitude is positive, making
/// the output reproducible across runs.
pub fn jacobi_eigh(a: &DMatrix<f64>) -> Result<SymEig> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::validation("eigensolver requires a square matrix"));
    }
    let scale = max_abs(a).max(1.0);
    if asymmetry(a) > 1e-9 * scale {
        return Err(Error::validation(format!(
            "matrix is not symmetric: max |a_ij - a_ji| = {:.3e}",
            asymmetry(a)
        )));
    }

    let mut m = a.clone();
    // enforce exact symmetry so rotations stay consistent
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let mut v = DMatrix::<f64>::identity(n, n);

    let off = |m: &DMatrix<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += m[(i, j)] * m[(i, j)];
            }
        }
        s.sqrt()
    };

    let tol = 1e-15 * scale * (n as f64);
    let max_sweeps = 64;
    let mut sweep = 0;
    while off(&m) > tol {
        sweep += 1;
        if sweep > max_sweeps {
            return Err(Error::numerical(format!(
                "Jacobi eigensolver did not converge in {max_sweeps} sweeps (off = {:.3e})",
                off(&m)
            )));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol / (n as f64).max(1.0) {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());

    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (out, &idx) in order.iter().enumerate() {
        values.push(m[(idx, idx)]);
        let mut col: Vec<f64> = (0..n).map(|k| v[(k, idx)]).collect();
        let lead = col.iter().find(|x| x.abs() > 1e-12).copied().unwrap_or(0.0);
        if lead < 0.0 {
            for x in &mut col {
                *x = -*x;
            }
        }
        for k in 0..n {
            vectors[(k, out)] = col[k];
        }
    }
    Ok(SymEig { values, vectors })
}

/// Factor a symmetric PSD matrix as `s * s^T` through its eigendecomposition,
/// clipping eigenvalues in `[-neg_tol, 0)` to zero. Fails if an eigenvalue is
/// more negative than `-neg_tol`.
pub fn psd_factor(q: &DMatrix<f64>, neg_tol: f64) -> Result<DMatrix<f64>> {
    let eig = jacobi_eigh(q)?;
    let n = q.nrows();
    let mut s = eig.vectors;
    for j in 0..n {
        let lam = eig.values[j];
        if lam < -neg_tol {
            return Err(Error::numerical(format!(
                "matrix is not positive semidefinite: eigenvalue {lam:.3e}"
            )));
        }
        let root = lam.max(0.0).sqrt();
        for i in 0..n {
            s[(i, j)] *= root;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diagonal_matrix_is_fixed_point() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -1.0, 2.0]));
        let e = jacobi_eigh(&a).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0, 3.0]);
        // eigenvectors are signed unit columns
        for j in 0..3 {
            let col = e.vectors.column(j);
            assert_abs_diff_eq!(col.norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn two_by_two_known_eigenpairs() {
        // 2*[[1,-1],[-1,1]] has eigenvalues 0 and 4 with eigenvectors
        // [1,1]/sqrt(2) and [1,-1]/sqrt(2)
        let a = DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]);
        let e = jacobi_eigh(&a).unwrap();
        assert_abs_diff_eq!(e.values[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 4.0, epsilon = 1e-14);
        let r = 0.5_f64.sqrt();
        assert_abs_diff_eq!(e.vectors[(0, 0)], r, epsilon = 1e-12);
        assert_abs_diff_eq!(e.vectors[(1, 0)], r, epsilon = 1e-12);
        assert_abs_diff_eq!(e.vectors[(0, 1)], r, epsilon = 1e-12);
        assert_abs_diff_eq!(e.vectors[(1, 1)], -r, epsilon = 1e-12);
    }

    #[test]
    fn reconstructs_random_symmetric_matrix() {
        // deterministic "random" fill
        let n = 8;
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut state = 1234_u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            for j in 0..=i {
                let x = next();
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        let e = jacobi_eigh(&a).unwrap();
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
        let rec = &e.vectors * lam * e.vectors.transpose();
        assert!(max_abs(&(rec - a)) < 1e-12);
        let gram = e.vectors.transpose() * &e.vectors;
        assert!(max_abs(&(gram - DMatrix::identity(n, n))) < 1e-13);
        for w in e.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(jacobi_eigh(&a).is_err());
    }

    #[test]
    fn psd_factor_roundtrip_and_clip() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = psd_factor(&a, 1e-12).unwrap();
        assert!(max_abs(&(&s * s.transpose() - &a)) < 1e-12);

        // tiny negative eigenvalue within tolerance is clipped
        let b = DMatrix::from_row_slice(1, 1, &[-1e-14]);
        let s = psd_factor(&b, 1e-12).unwrap();
        assert_eq!(s[(0, 0)], 0.0);

        // genuinely indefinite matrix is rejected
        let c = DMatrix::from_row_slice(1, 1, &[-1.0]);
        assert!(psd_factor(&c, 1e-12).is_err());
    }
}
