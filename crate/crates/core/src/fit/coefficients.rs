use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Smallest accepted eigenvalue of an LF overlap matrix.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Condition number above which residual solves log a warning.
pub const CONDITION_WARN: f64 = 1e10;

#[derive(Debug, Clone)]
pub struct FidelitySolution {
    /// Coefficients with unit model norm and a real, non-negative overlap
    /// with the target.
    pub coeffs: Vec<Complex64>,
    /// Largest generalized eigenvalue, equal to the fidelity reached.
    pub kappa_max: f64,
}

#[derive(Debug, Clone)]
pub struct ResidualSolution {
    pub coeffs: Vec<f64>,
    /// `<y, y> - d^T Q d`.
    pub residual_sq: f64,
    pub condition: f64,
}

fn closest_pair(m: &DMatrix<f64>) -> (usize, usize) {
    let mut best = (0, 1.min(m.nrows() - 1));
    let mut score = f64::NEG_INFINITY;
    for i in 0..m.nrows() {
        for j in i + 1..m.ncols() {
            let s = m[(i, j)] / (m[(i, i)] * m[(j, j)]).sqrt();
            if s > score {
                score = s;
                best = (i, j);
            }
        }
    }
    best
}

fn singular(m: &DMatrix<f64>) -> Error {
    let (first, second) = closest_pair(m);
    Error::SingularOverlap { first, second }
}

fn check_square(m: &DMatrix<f64>, len: usize) -> Result<()> {
    if m.nrows() != len || m.ncols() != len || len == 0 {
        return Err(Error::InvalidModel(format!(
            "{}x{} matrix for {len} basis functions",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Maximizes `|sum_l d_l b_l|^2` subject to `d^† S d = 1`.
///
/// `b_l = <target|L_l>` and `S` is the real LF overlap matrix. The rank-one
/// matrix `G = conj(b) b^T` and `S` form a generalized eigenproblem, solved
/// by whitening `S`.
pub fn solve_coefficients_fidelity(b: &[Complex64], s: &DMatrix<f64>) -> Result<FidelitySolution> {
    let m = b.len();
    check_square(s, m)?;
    let eig = SymmetricEigen::new(s.clone());
    if eig.eigenvalues.min() < EIGEN_FLOOR {
        return Err(singular(s));
    }
    let mut whiten = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        whiten.column_mut(j).scale_mut(lambda.sqrt().recip());
    }
    let w = whiten.map(|x| Complex64::new(x, 0.0));
    let bc = DVector::from_iterator(m, b.iter().copied());
    let g = bc.map(|x| x.conj()) * bc.transpose();
    let gw = w.transpose() * g * &w;
    let herm = (&gw + gw.adjoint()).scale(0.5);
    let geig = SymmetricEigen::new(herm);
    let top = geig.eigenvalues.imax();
    let u = geig.eigenvectors.column(top).into_owned();
    let mut d = &w * u;
    let omega: Complex64 = d.iter().zip(b).map(|(x, y)| x * y).sum();
    if omega.norm() > 0.0 {
        let phase = omega.conj() / omega.norm();
        d.iter_mut().for_each(|x| *x *= phase);
    }
    Ok(FidelitySolution {
        coeffs: d.iter().copied().collect(),
        kappa_max: geig.eigenvalues[top],
    })
}

/// `b^† S^{-1} b` by Cholesky, the closed form of the largest eigenvalue
/// for a rank-one `G`.
pub fn rank_one_kappa(b: &[Complex64], s: &DMatrix<f64>) -> Result<f64> {
    check_square(s, b.len())?;
    let chol = s.clone().cholesky().ok_or_else(|| singular(s))?;
    let re = chol.solve(&DVector::from_iterator(b.len(), b.iter().map(|x| x.re)));
    let im = chol.solve(&DVector::from_iterator(b.len(), b.iter().map(|x| x.im)));
    Ok(b.iter()
        .enumerate()
        .map(|(i, x)| x.re * re[i] + x.im * im[i])
        .sum())
}

/// Fidelity `|sum d_l b_l|^2 / (d^† S d)` of arbitrary coefficients.
pub fn fidelity_of(coeffs: &[Complex64], b: &[Complex64], s: &DMatrix<f64>) -> f64 {
    let omega: Complex64 = coeffs.iter().zip(b).map(|(d, x)| d * x).sum();
    let mut norm = Complex64::new(0.0, 0.0);
    for i in 0..coeffs.len() {
        for j in 0..coeffs.len() {
            norm += coeffs[i].conj() * s[(i, j)] * coeffs[j];
        }
    }
    omega.norm_sqr() / norm.re
}

/// Least-squares coefficients `Q d = h` and the squared residual.
pub fn solve_coefficients_residual(
    h: &[f64],
    q: &DMatrix<f64>,
    self_norm: f64,
) -> Result<ResidualSolution> {
    let m = h.len();
    check_square(q, m)?;
    let eig = SymmetricEigen::new(q.clone());
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if lo <= hi * 1e-15 {
        return Err(singular(q));
    }
    let condition = hi / lo;
    if condition > CONDITION_WARN {
        log::warn!("squared-LF Gram matrix is ill-conditioned (condition {condition:.3e})");
    }
    let chol = q.clone().cholesky().ok_or_else(|| singular(q))?;
    let d = chol.solve(&DVector::from_column_slice(h));
    let dh: f64 = d.iter().zip(h).map(|(x, y)| x * y).sum();
    Ok(ResidualSolution {
        coeffs: d.iter().copied().collect(),
        residual_sq: self_norm - dh,
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_function() {
        let s = DMatrix::from_element(1, 1, 1.0);
        let b = [Complex64::new(0.3, -0.4)];
        let sol = solve_coefficients_fidelity(&b, &s).unwrap();
        assert_abs_diff_eq!(sol.kappa_max, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(sol.coeffs[0].norm(), 1.0, epsilon = 1e-14);
        let r = solve_coefficients_residual(&[0.3], &DMatrix::from_element(1, 1, 0.6), 1.0).unwrap();
        assert_abs_diff_eq!(r.coeffs[0], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn coincident_functions_are_reported() {
        let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.1, 0.2, 1.0, 1.0, 0.1, 1.0, 1.0]);
        let b = [Complex64::new(0.1, 0.0); 3];
        match solve_coefficients_fidelity(&b, &s) {
            Err(Error::SingularOverlap { first, second }) => assert_eq!((first, second), (1, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch() {
        let s = DMatrix::identity(2, 2);
        assert!(solve_coefficients_fidelity(&[Complex64::new(1.0, 0.0)], &s).is_err());
        assert!(solve_coefficients_residual(&[1.0], &s, 1.0).is_err());
    }
}
