//! Discrete Slater functions (SF), their Fourier duals the discrete Lorentzian
//! functions (LF), and the overlap kernels between LF states.
//!
//! The grid has `N = 2^n` points. The Slater vector decays as
//! `exp(-a * min(j, N - j))`, so it is even under `j -> N - j` and its DFT is
//! real. Every closed form here is written with `expm1` and half-angle
//! identities so that small decay rates do not lose precision.

use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::StateVector;

/// Smallest accepted decay rate. Below this `1 - exp(-2a)` has too few
/// significant digits for the normalization constants.
pub const MIN_DECAY_RATE: f64 = 1e-6;

/// Largest register width for closed-form evaluation.
pub const MAX_BASIS_QUBITS: u32 = 30;

fn check_decay(a: f64) -> Result<()> {
    if a.is_nan() || a < MIN_DECAY_RATE || a.is_infinite() {
        return Err(Error::DecayRate {
            value: a,
            min: MIN_DECAY_RATE,
        });
    }
    Ok(())
}

fn check_width(n: u32) -> Result<usize> {
    if n == 0 || n > MAX_BASIS_QUBITS {
        return Err(Error::OutOfRange {
            what: "qubit count",
            value: n as u64,
            limit: MAX_BASIS_QUBITS as u64,
        });
    }
    Ok(1usize << n)
}

/// One LF basis function: register width, decay rate and integer center.
#[derive(Debug, Clone, Copy)]
pub struct LfParam {
    n: u32,
    decay_rate: f64,
    center: u64,
}

impl LfParam {
    /// `center` may be negative or exceed `N`; it is reduced mod `N`.
    pub fn new(n: u32, decay_rate: f64, center: i64) -> Result<Self> {
        let dim = check_width(n)? as i64;
        check_decay(decay_rate)?;
        Ok(Self {
            n,
            decay_rate,
            center: center.rem_euclid(dim) as u64,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    pub fn center(&self) -> u64 {
        self.center
    }

    pub fn with_decay_rate(&self, decay_rate: f64) -> Result<Self> {
        Self::new(self.n, decay_rate, self.center as i64)
    }

    pub fn with_center(&self, center: i64) -> Result<Self> {
        Self::new(self.n, self.decay_rate, center)
    }

    /// True when the two functions are numerically the same basis element.
    pub fn coincides(&self, other: &Self) -> bool {
        self.n == other.n
            && self.center == other.center
            && (self.decay_rate - other.decay_rate).abs() < 1e-9
    }
}

impl PartialEq for LfParam {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.center == other.center
            && self.decay_rate.to_bits() == other.decay_rate.to_bits()
    }
}

impl Eq for LfParam {}

impl Hash for LfParam {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.n.hash(state);
        self.decay_rate.to_bits().hash(state);
        self.center.hash(state);
    }
}

/// Normalization of the two-sided Slater vector.
pub fn slater_norm(n: u32, a: f64) -> Result<f64> {
    let dim = check_width(n)? as f64;
    check_decay(a)?;
    let num = -(-2.0 * a).exp_m1();
    let den = (1.0 + (-2.0 * a).exp()) * -(-dim * a).exp_m1();
    Ok((num / den).sqrt())
}

/// Normalization of the one-sided vector `sum_j exp(-a j) |j>` used as the
/// phase-estimation ancilla input.
pub fn one_sided_norm(n: u32, a: f64) -> Result<f64> {
    let dim = check_width(n)? as f64;
    check_decay(a)?;
    Ok((-(-2.0 * a).exp_m1() / -(-2.0 * a * dim).exp_m1()).sqrt())
}

pub fn slater_amplitude(n: u32, a: f64, j: u64) -> Result<f64> {
    let dim = check_width(n)? as u64;
    if j >= dim {
        return Err(Error::OutOfRange {
            what: "grid index",
            value: j,
            limit: dim,
        });
    }
    let dist = j.min(dim - j) as f64;
    Ok(slater_norm(n, a)? * (-a * dist).exp())
}

pub fn slater_vector(n: u32, a: f64) -> Result<Vec<f64>> {
    let dim = check_width(n)?;
    let c = slater_norm(n, a)?;
    Ok((0..dim)
        .map(|j| c * (-a * j.min(dim - j) as f64).exp())
        .collect())
}

struct LfTerms {
    prefactor: f64,
    half_decay: f64,
}

impl LfTerms {
    fn new(n: u32, a: f64) -> Result<Self> {
        let dim = check_width(n)? as f64;
        Ok(Self {
            prefactor: slater_norm(n, a)? / dim.sqrt() * -(-2.0 * a).exp_m1(),
            half_decay: (-a * dim / 2.0).exp(),
        })
    }
}

fn parity_sign(k: u64) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `1 - 2 exp(-a) cos(theta) + exp(-2a)` without cancellation.
fn lf_denominator(a: f64, theta: f64) -> f64 {
    let em1 = (-a).exp_m1();
    em1 * em1 + 4.0 * (-a).exp() * (theta / 2.0).sin().powi(2)
}

fn reduce(k: i64, dim: usize) -> u64 {
    k.rem_euclid(dim as i64) as u64
}

/// LF amplitude at grid index `k` (taken mod `N`) for a function centered at 0.
pub fn lf_amplitude(n: u32, a: f64, k: i64) -> Result<f64> {
    let dim = check_width(n)?;
    check_decay(a)?;
    let terms = LfTerms::new(n, a)?;
    Ok(lf_amplitude_with(&terms, a, dim, reduce(k, dim)))
}

fn lf_amplitude_with(terms: &LfTerms, a: f64, dim: usize, k: u64) -> f64 {
    let theta = 2.0 * PI * k as f64 / dim as f64;
    terms.prefactor * (1.0 - parity_sign(k) * terms.half_decay) / lf_denominator(a, theta)
}

/// Derivative of [`lf_amplitude`] with respect to the decay rate.
pub fn lf_amplitude_da(n: u32, a: f64, k: i64) -> Result<f64> {
    let dim = check_width(n)?;
    let value = lf_amplitude(n, a, k)?;
    let k = reduce(k, dim);
    let nf = dim as f64;
    let e2 = (-2.0 * a).exp();
    let one_minus_e2 = -(-2.0 * a).exp_m1();
    let one_minus_en = -(-nf * a).exp_m1();
    let dlog_norm =
        e2 / one_minus_e2 + e2 / (1.0 + e2) - 0.5 * nf * (-nf * a).exp() / one_minus_en;
    let dlog_num = 2.0 * e2 / one_minus_e2;
    let half = (-a * nf / 2.0).exp();
    let parity = parity_sign(k);
    let dlog_parity = parity * 0.5 * nf * half / (1.0 - parity * half);
    let theta = 2.0 * PI * k as f64 / nf;
    let den = lf_denominator(a, theta);
    let dden = 2.0 * (-a).exp() * theta.cos() - 2.0 * e2;
    Ok(value * (dlog_norm + dlog_num + dlog_parity - dden / den))
}

/// Real amplitudes of the LF centered at `param.center()`.
pub fn lf_vector(param: &LfParam) -> Vec<f64> {
    let dim = param.dim();
    let a = param.decay_rate;
    let terms = LfTerms::new(param.n, a).expect("validated parameter");
    let centered: Vec<f64> = (0..dim as u64)
        .map(|k| lf_amplitude_with(&terms, a, dim, k))
        .collect();
    let c = param.center as usize;
    (0..dim).map(|k| centered[(k + dim - c) % dim]).collect()
}

/// Elementwise derivative of [`lf_vector`] with respect to the decay rate.
pub fn lf_vector_da(param: &LfParam) -> Vec<f64> {
    let dim = param.dim();
    let c = param.center as i64;
    (0..dim as i64)
        .map(|k| lf_amplitude_da(param.n, param.decay_rate, k - c).expect("validated parameter"))
        .collect()
}

pub fn lf_state_vector(param: &LfParam) -> Result<StateVector> {
    crate::state::check_capacity(param.n)?;
    StateVector::from_real(&lf_vector(param))
}

/// Squared LF profile; sums to one.
pub fn lf_sq_vector(param: &LfParam) -> Vec<f64> {
    lf_vector(param).into_iter().map(|x| x * x).collect()
}

/// `cosh(x) - cos(phi)` without cancellation.
fn cosh_minus_cos(x: f64, phi: f64) -> f64 {
    2.0 * (x / 2.0).sinh().powi(2) + 2.0 * (phi / 2.0).sin().powi(2)
}

/// Closed-form overlap `<L; a, center | L; a2, 0>`.
pub fn lf_overlap(n: u32, a: f64, a2: f64, center: i64) -> Result<f64> {
    let dim = check_width(n)?;
    let k = reduce(center, dim);
    let s = a + a2;
    let phi = 2.0 * PI * k as f64 / dim as f64;
    let tail = parity_sign(k) * (-s * dim as f64 / 2.0).exp();
    Ok(slater_norm(n, a)? * slater_norm(n, a2)? * (1.0 - tail) * s.sinh()
        / cosh_minus_cos(s, phi))
}

/// `sum_k L^2_{k - shift}(a) L^2_k(a2)`, evaluated term by term.
pub fn lf_sq_overlap(n: u32, a: f64, a2: f64, shift: i64) -> Result<f64> {
    let dim = check_width(n)?;
    let nf = dim as f64;
    let c1 = slater_norm(n, a)?;
    let c2 = slater_norm(n, a2)?;
    let pref = (c1 * c2 * a.sinh() * a2.sinh() / nf).powi(2);
    let h1 = (-a * nf / 2.0).exp();
    let h2 = (-a2 * nf / 2.0).exp();
    let shift = reduce(shift, dim);
    let mut sum = 0.0;
    for k in 0..dim as u64 {
        let km = (k + dim as u64 - shift) % dim as u64;
        let t1 = (1.0 - parity_sign(km) * h1) / cosh_minus_cos(a, 2.0 * PI * km as f64 / nf);
        let t2 = (1.0 - parity_sign(k) * h2) / cosh_minus_cos(a2, 2.0 * PI * k as f64 / nf);
        sum += (t1 * t2).powi(2);
    }
    Ok(pref * sum)
}

/// Linear combination of LF states, `sum_l d_l |L; a_l, k_l>`.
///
/// Coefficients are complex; amplitude fits only use the real parts.
#[derive(Debug, Clone, PartialEq)]
pub struct LcLfModel {
    coeffs: Vec<Complex64>,
    params: Vec<LfParam>,
}

impl LcLfModel {
    pub fn new(coeffs: Vec<Complex64>, params: Vec<LfParam>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidModel("model needs at least one LF".into()));
        }
        if coeffs.len() != params.len() {
            return Err(Error::InvalidModel(format!(
                "{} coefficients for {} basis functions",
                coeffs.len(),
                params.len()
            )));
        }
        let n = params[0].n;
        if params.iter().any(|p| p.n != n) {
            return Err(Error::InvalidModel(
                "basis functions have different qubit counts".into(),
            ));
        }
        Ok(Self { coeffs, params })
    }

    pub fn from_real(coeffs: &[f64], params: Vec<LfParam>) -> Result<Self> {
        Self::new(
            coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
            params,
        )
    }

    pub fn n(&self) -> u32 {
        self.params[0].n
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn real_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.re).collect()
    }

    pub fn params(&self) -> &[LfParam] {
        &self.params
    }

    pub fn centers(&self) -> Vec<u64> {
        self.params.iter().map(|p| p.center).collect()
    }

    pub fn decay_rates(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.decay_rate).collect()
    }

    /// Amplitudes of `sum_l d_l |L_l>` (not renormalized).
    pub fn amplitudes(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.params[0].dim()];
        for (d, p) in self.coeffs.iter().zip(&self.params) {
            for (o, l) in out.iter_mut().zip(lf_vector(p)) {
                *o += d * l;
            }
        }
        out
    }

    /// `sum_l Re(d_l) L^2_l`, the model of a probability profile.
    pub fn sq_profile(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.params[0].dim()];
        for (d, p) in self.coeffs.iter().zip(&self.params) {
            for (o, y) in out.iter_mut().zip(lf_sq_vector(p)) {
                *o += d.re * y;
            }
        }
        out
    }
}

/// Real symmetric LF overlap matrix `S_{lm} = <L_l|L_m>`.
pub fn overlap_matrix(params: &[LfParam]) -> Result<nalgebra::DMatrix<f64>> {
    let m = params.len();
    let mut s = nalgebra::DMatrix::identity(m, m);
    for i in 0..m {
        for j in i + 1..m {
            let (pi, pj) = (&params[i], &params[j]);
            let v = lf_overlap(
                pi.n,
                pi.decay_rate,
                pj.decay_rate,
                pi.center as i64 - pj.center as i64,
            )?;
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    Ok(s)
}

/// Real symmetric squared-LF Gram matrix `Q_{lm} = <y_l, y_m>`.
pub fn sq_overlap_matrix(params: &[LfParam]) -> Result<nalgebra::DMatrix<f64>> {
    let m = params.len();
    let mut q = nalgebra::DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let (pi, pj) = (&params[i], &params[j]);
            let v = lf_sq_overlap(
                pi.n,
                pi.decay_rate,
                pj.decay_rate,
                pi.center as i64 - pj.center as i64,
            )?;
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    Ok(q)
}
