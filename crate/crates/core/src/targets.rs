//! Built-in target states.

use num_complex::Complex64;

use crate::basis::{lf_sq_vector, LfParam};
use crate::error::{Error, Result};
use crate::state::StateVector;

/// Two Gaussian peaks at `x = 1/2` and `x = 1/4` sampled on `x_j = j / N`,
/// normalized.
pub fn psi_ideal(n: u32) -> Result<StateVector> {
    crate::state::check_capacity(n)?;
    let dim = 1usize << n;
    let amps = (0..dim)
        .map(|j| {
            let x = j as f64 / dim as f64;
            let wide = (-(32.0 * (x - 0.5) / 3.0).powi(2)).exp();
            let narrow = 0.4 * (-(16.0 * (x - 0.25)).powi(2)).exp();
            Complex64::new(wide + narrow, 0.0)
        })
        .collect();
    StateVector::normalized(amps)
}

/// State whose probability profile is `sum_l w_l L^2_l`, normalized.
/// Weights must be non-negative.
pub fn squared_lf_target(params: &[LfParam], weights: &[f64]) -> Result<StateVector> {
    if params.is_empty() || params.len() != weights.len() {
        return Err(Error::InvalidProblem("need one weight per peak".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidProblem("peak weights must be non-negative".into()));
    }
    let dim = params[0].dim();
    if params.iter().any(|p| p.dim() != dim) {
        return Err(Error::InvalidProblem("peaks differ in register width".into()));
    }
    let mut profile = vec![0.0; dim];
    for (p, w) in params.iter().zip(weights) {
        for (y, l) in profile.iter_mut().zip(lf_sq_vector(p)) {
            *y += w * l;
        }
    }
    StateVector::normalized(profile.iter().map(|y| Complex64::new(y.sqrt(), 0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_ideal_peaks() {
        let s = psi_ideal(5).unwrap();
        let p = s.probabilities();
        let argmax = (0..32).max_by(|&i, &j| p[i].total_cmp(&p[j])).unwrap();
        assert_eq!(argmax, 16);
        assert!(p[8] > p[4] && p[8] > p[11]);
    }
}
