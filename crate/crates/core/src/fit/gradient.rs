//! Decay-rate gradients of the fit objectives.
//!
//! Target overlaps are differentiated by central finite differences (each
//! displaced overlap is one more quantum evaluation); the classical LF
//! kernels are differentiated analytically.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{lf_vector, lf_vector_da, overlap_matrix, sq_overlap_matrix, LfParam};
use crate::error::{Error, Result};
use crate::estimator::OverlapOracle;
use crate::fit::coefficients::{
    solve_coefficients_fidelity, solve_coefficients_residual, FidelitySolution, ResidualSolution,
};

/// Lowest decay rate a finite-difference probe may touch.
pub const FD_FLOOR: f64 = 1e-4;

pub(crate) fn check_distinct(params: &[LfParam]) -> Result<()> {
    for i in 0..params.len() {
        for j in i + 1..params.len() {
            if params[i].coincides(&params[j]) {
                return Err(Error::SingularOverlap { first: i, second: j });
            }
        }
    }
    Ok(())
}

/// Optimal coefficients and fidelity for fixed LF parameters.
pub fn fidelity_solution(params: &[LfParam], oracle: &dyn OverlapOracle) -> Result<(Vec<Complex64>, FidelitySolution)> {
    check_distinct(params)?;
    let b = params
        .iter()
        .map(|p| oracle.complex_overlap(p))
        .collect::<Result<Vec<_>>>()?;
    let s = overlap_matrix(params)?;
    let sol = solve_coefficients_fidelity(&b, &s)?;
    Ok((b, sol))
}

/// Optimal coefficients and squared residual for fixed LF parameters.
pub fn residual_solution(params: &[LfParam], oracle: &dyn OverlapOracle) -> Result<(Vec<f64>, ResidualSolution)> {
    check_distinct(params)?;
    let h = params
        .iter()
        .map(|p| oracle.sq_overlap(p))
        .collect::<Result<Vec<_>>>()?;
    let q = sq_overlap_matrix(params)?;
    let sol = solve_coefficients_residual(&h, &q, oracle.self_norm()?)?;
    Ok((h, sol))
}

/// Largest reachable fidelity at fixed LF parameters.
pub fn fidelity_objective(params: &[LfParam], oracle: &dyn OverlapOracle) -> Result<f64> {
    Ok(fidelity_solution(params, oracle)?.1.kappa_max)
}

/// Smallest reachable squared residual at fixed LF parameters.
pub fn residual_objective(params: &[LfParam], oracle: &dyn OverlapOracle) -> Result<f64> {
    Ok(residual_solution(params, oracle)?.1.residual_sq)
}

fn probe_step(a: f64, fd_step: f64) -> Result<f64> {
    if !(fd_step > 0.0) {
        return Err(Error::InvalidProblem(format!("finite-difference step {fd_step} must be positive")));
    }
    let room = (a - FD_FLOOR) / 2.0;
    if fd_step > room {
        log::warn!("finite-difference step {fd_step} clipped to {room:.3e} near decay rate {a}");
        return Ok(room.max(f64::EPSILON * a));
    }
    Ok(fd_step)
}

fn displaced(p: &LfParam, delta: f64) -> Result<LfParam> {
    p.with_decay_rate(p.decay_rate() + delta)
}

#[derive(Debug, Clone)]
pub struct FidelityGradient {
    pub gradient: Vec<f64>,
    pub solution: FidelitySolution,
}

/// `dF/da_l = d^† (dG/da_l - kappa dS/da_l) d` at the optimal coefficients.
pub fn fidelity_gradient_a(
    params: &[LfParam],
    oracle: &dyn OverlapOracle,
    fd_step: f64,
) -> Result<FidelityGradient> {
    let (b, solution) = fidelity_solution(params, oracle)?;
    let d = &solution.coeffs;
    let kappa = solution.kappa_max;
    let omega: Complex64 = d.iter().zip(&b).map(|(x, y)| x * y).sum();
    let vectors: Vec<Vec<f64>> = params.iter().map(lf_vector).collect();
    let mut gradient = Vec::with_capacity(params.len());
    for (l, p) in params.iter().enumerate() {
        let h = probe_step(p.decay_rate(), fd_step)?;
        let db = (oracle.complex_overlap(&displaced(p, h)?)?
            - oracle.complex_overlap(&displaced(p, -h)?)?)
            / (2.0 * h);
        let dg = 2.0 * (omega.conj() * d[l] * db).re;
        let dl = lf_vector_da(p);
        let mut ds_d = Complex64::new(0.0, 0.0);
        for (j, v) in vectors.iter().enumerate() {
            if j != l {
                let ds: f64 = dl.iter().zip(v).map(|(x, y)| x * y).sum();
                ds_d += ds * d[j];
            }
        }
        let ds = 2.0 * (d[l].conj() * ds_d).re;
        gradient.push(dg - kappa * ds);
    }
    Ok(FidelityGradient { gradient, solution })
}

#[derive(Debug, Clone)]
pub struct ResidualGradient {
    pub gradient: Vec<f64>,
    pub solution: ResidualSolution,
}

/// `d|r|^2/da_l = -2 d_l dh_l/da_l + d^T (dQ/da_l) d` at the optimal
/// coefficients.
pub fn residual_gradient_a(
    params: &[LfParam],
    oracle: &dyn OverlapOracle,
    fd_step: f64,
) -> Result<ResidualGradient> {
    let (_, solution) = residual_solution(params, oracle)?;
    let d = &solution.coeffs;
    let vectors: Vec<Vec<f64>> = params.iter().map(lf_vector).collect();
    let squares: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().map(|x| x * x).collect())
        .collect();
    let mut gradient = Vec::with_capacity(params.len());
    for (l, p) in params.iter().enumerate() {
        let h = probe_step(p.decay_rate(), fd_step)?;
        let dh = (oracle.sq_overlap(&displaced(p, h)?)? - oracle.sq_overlap(&displaced(p, -h)?)?)
            / (2.0 * h);
        let dl = lf_vector_da(p);
        // d(L_l^2)/da = 2 L_l dL_l
        let dy: Vec<f64> = vectors[l].iter().zip(&dl).map(|(x, y)| 2.0 * x * y).collect();
        let mut quad = 0.0;
        for (j, y) in squares.iter().enumerate() {
            let dq: f64 = dy.iter().zip(y).map(|(u, v)| u * v).sum();
            quad += if j == l { 2.0 * dq * d[l] * d[l] } else { 2.0 * dq * d[l] * d[j] };
        }
        gradient.push(-2.0 * d[l] * dh + quad);
    }
    Ok(ResidualGradient { gradient, solution })
}

/// Analytic derivative of the LF overlap matrix with respect to `a_l`.
pub fn overlap_matrix_da(params: &[LfParam], l: usize) -> DMatrix<f64> {
    let m = params.len();
    let dl = lf_vector_da(&params[l]);
    let mut out = DMatrix::zeros(m, m);
    for j in 0..m {
        if j != l {
            let v: f64 = dl.iter().zip(lf_vector(&params[j])).map(|(x, y)| x * y).sum();
            out[(l, j)] = v;
            out[(j, l)] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::lf_state_vector;
    use crate::estimator::{MeasurementBudget, ReadoutTarget, TargetOracle};

    #[test]
    fn gradient_vanishes_at_self_overlap_optimum() {
        let truth = LfParam::new(5, 0.6, 9).unwrap();
        let oracle = TargetOracle::new(
            ReadoutTarget::new(lf_state_vector(&truth).unwrap()),
            MeasurementBudget::exact(),
        )
        .unwrap();
        let g = fidelity_gradient_a(&[truth], &oracle, 1e-4).unwrap();
        assert!(g.gradient[0].abs() < 1e-7, "{:?}", g.gradient);
        let g = residual_gradient_a(&[truth], &oracle, 1e-4).unwrap();
        assert!(g.gradient[0].abs() < 1e-7, "{:?}", g.gradient);
    }

    #[test]
    fn overlap_matrix_derivative_matches_difference() {
        let params = [
            LfParam::new(5, 0.4, 3).unwrap(),
            LfParam::new(5, 0.9, 7).unwrap(),
            LfParam::new(5, 1.3, 20).unwrap(),
        ];
        let h = 1e-6;
        let mut up = params;
        let mut down = params;
        up[1] = up[1].with_decay_rate(0.9 + h).unwrap();
        down[1] = down[1].with_decay_rate(0.9 - h).unwrap();
        let fd = (overlap_matrix(&up).unwrap() - overlap_matrix(&down).unwrap()) / (2.0 * h);
        let an = overlap_matrix_da(&params, 1);
        assert!((fd - an).abs().max() < 1e-8);
    }

    #[test]
    fn step_is_clipped_near_floor() {
        assert!(probe_step(2e-4, 1e-3).unwrap() < 1e-4);
        assert!(probe_step(1.0, 0.0).is_err());
    }
}
