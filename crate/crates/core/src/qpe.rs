//! Phase estimation with a one-sided Slater ancilla input.
//!
//! Each eigenvalue `E_j` contributes a peak at `t0 E_j` on the `N`-point
//! phase grid whose shape is `|alpha(t0 E_j - k)|^2`, close to a Lorentzian
//! of half width `eta = a N / (2 pi)` when `a` is small.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::basis::{one_sided_norm, LfParam};
use crate::error::{Error, Result};
use crate::estimator::{
    estimate_sq_overlap, MeasurementBudget, OverlapEstimate, ReadoutTarget, TargetOracle,
};
use crate::fit::{fit_amplitude, AmplitudeFitProblem, FitSettings, FitTrace};
use crate::simulator::circuit::{Circuit, CircuitOp, RegisterUnitary};
use crate::simulator::prep::{one_sided_slater_circuit, slater_circuit};
use crate::simulator::readout::push_swap_test;
use crate::state::{check_capacity, StateVector};

/// Spectrum and weights of the input state plus the phase-register setup.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProblem {
    eigenvalues: Vec<f64>,
    weights: Vec<f64>,
    scale: f64,
    n: u32,
    n_system: u32,
    decay_rate: f64,
}

impl SpectralProblem {
    /// `weights` are `|c_j|^2`. Fewer than `2^n_system` pairs are padded
    /// with zero weight. Weights off unit sum by more than 1e-6 are
    /// renormalized with a warning.
    pub fn new(
        eigenvalues: Vec<f64>,
        weights: Vec<f64>,
        scale: f64,
        n: u32,
        n_system: u32,
        decay_rate: f64,
    ) -> Result<Self> {
        one_sided_norm(n, decay_rate)?;
        if eigenvalues.len() != weights.len() || eigenvalues.is_empty() {
            return Err(Error::InvalidProblem(
                "need one weight per eigenvalue and at least one pair".into(),
            ));
        }
        if n_system > 16 || eigenvalues.len() > 1usize << n_system {
            return Err(Error::InvalidProblem(format!(
                "{} eigenvalues do not fit a {n_system}-qubit system register",
                eigenvalues.len()
            )));
        }
        if eigenvalues.iter().any(|e| !e.is_finite()) || !scale.is_finite() {
            return Err(Error::InvalidProblem("eigenvalues and scale must be finite".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidProblem("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidProblem("weights sum to zero".into()));
        }
        if (total - 1.0).abs() > 1e-6 {
            log::warn!("spectral weights sum to {total}; renormalizing");
        }
        let mut eigenvalues = eigenvalues;
        let mut weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        eigenvalues.resize(1 << n_system, 0.0);
        weights.resize(1 << n_system, 0.0);
        Ok(Self {
            eigenvalues,
            weights,
            scale,
            n,
            n_system,
            decay_rate,
        })
    }

    /// Same as [`new`](Self::new) with the decay rate given as the
    /// Lorentzian half width `eta` in grid units.
    pub fn with_eta(
        eigenvalues: Vec<f64>,
        weights: Vec<f64>,
        scale: f64,
        n: u32,
        n_system: u32,
        eta: f64,
    ) -> Result<Self> {
        let dim = (1u64 << n.min(62)) as f64;
        Self::new(eigenvalues, weights, scale, n, n_system, 2.0 * PI * eta / dim)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn n_system(&self) -> u32 {
        self.n_system
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    pub fn eta(&self) -> f64 {
        self.decay_rate * self.dim() as f64 / (2.0 * PI)
    }

    /// Peak positions `t0 E_j` of the weighted eigenvalues.
    pub fn peak_positions(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(e, _)| self.scale * e)
            .collect()
    }
}

/// Scale placing the largest positive eigenvalue at `0.9 N`, so a positive
/// spectrum starting near `E_max / 8` spans the central 80% of the grid.
pub fn default_scale(eigenvalues: &[f64], n: u32) -> Result<f64> {
    let top = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) {
        return Err(Error::InvalidProblem(
            "automatic scale needs a positive eigenvalue".into(),
        ));
    }
    Ok(0.9 * (1u64 << n) as f64 / top)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistogramSource {
    Exact,
    Sampled { shots: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpeHistogram {
    pub probabilities: Vec<f64>,
    pub source: HistogramSource,
}

/// `1 - exp(-a + i phi)` without cancellation at small `a`, `phi`.
fn one_minus_exp(a: f64, phi: f64) -> Complex64 {
    let decay = (-a).exp();
    Complex64::new(
        -(-a).exp_m1() + 2.0 * decay * (phi / 2.0).sin().powi(2),
        -decay * phi.sin(),
    )
}

/// Amplitude of phase-register outcome offset `x` from the peak.
pub fn alpha_lf(x: f64, n: u32, a: f64) -> Result<Complex64> {
    let norm = one_sided_norm(n, a)?;
    let dim = (1usize << n) as f64;
    let num = one_minus_exp(a * dim, 2.0 * PI * x);
    let den = one_minus_exp(a, 2.0 * PI * x / dim);
    Ok(norm / dim.sqrt() * num / den)
}

/// `P_k = sum_j |c_j|^2 |alpha(t0 E_j - k)|^2`.
pub fn qpe_exact_histogram(problem: &SpectralProblem) -> Result<QpeHistogram> {
    let dim = problem.dim();
    let mut p = vec![0.0; dim];
    for (e, w) in problem.eigenvalues.iter().zip(&problem.weights) {
        if *w == 0.0 {
            continue;
        }
        let x0 = problem.scale * e;
        for (k, pk) in p.iter_mut().enumerate() {
            *pk += w * alpha_lf(x0 - k as f64, problem.n, problem.decay_rate)?.norm_sqr();
        }
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    Ok(QpeHistogram {
        probabilities: p,
        source: HistogramSource::Exact,
    })
}

/// Signed distance on the `dim`-point circle, in `(-dim/2, dim/2]`.
fn circular_offset(x: f64, dim: f64) -> f64 {
    let r = x.rem_euclid(dim);
    if r > dim / 2.0 {
        r - dim
    } else {
        r
    }
}

/// Lorentzian approximation `sum_j |c_j|^2 eta / (d_jk^2 + eta^2)`,
/// normalized over the grid.
pub fn lorentzian_histogram(problem: &SpectralProblem) -> Vec<f64> {
    let dim = problem.dim() as f64;
    let eta = problem.eta();
    let mut p: Vec<f64> = (0..problem.dim())
        .map(|k| {
            problem
                .eigenvalues
                .iter()
                .zip(&problem.weights)
                .map(|(e, w)| {
                    let d = circular_offset(problem.scale * e - k as f64, dim);
                    w * eta / (d * d + eta * eta)
                })
                .sum()
        })
        .collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

fn system_state(problem: &SpectralProblem) -> Result<StateVector> {
    StateVector::from_real(&problem.weights.iter().map(|w| w.sqrt()).collect::<Vec<_>>())
}

fn push_controlled_powers(c: &mut Circuit, problem: &SpectralProblem, anc0: u32, sys0: u32) -> Result<()> {
    let dim = problem.dim() as f64;
    let system: Vec<u32> = (sys0..sys0 + problem.n_system).collect();
    for m in 0..problem.n {
        let power = (1u64 << m) as f64;
        let phases = problem
            .eigenvalues
            .iter()
            .map(|e| {
                let turns = (problem.scale * e * power / dim).rem_euclid(1.0);
                Complex64::from_polar(1.0, 2.0 * PI * turns)
            })
            .collect();
        c.push(CircuitOp::Controlled {
            controls: vec![anc0 + m],
            register: system.clone(),
            unitary: std::sync::Arc::new(RegisterUnitary::Diagonal(phases)),
        })?;
    }
    Ok(())
}

/// Phase-estimation circuit with the phase register on qubits `0..n` and
/// the system register above it.
pub fn qpe_circuit(problem: &SpectralProblem, with_inverse_qft: bool) -> Result<Circuit> {
    let n = problem.n;
    check_capacity(n + problem.n_system)?;
    let mut c = Circuit::new(n + problem.n_system)?;
    c.append_shifted(&one_sided_slater_circuit(n, problem.decay_rate)?, 0)?;
    c.push(CircuitOp::unitary(
        (n..n + problem.n_system).collect(),
        RegisterUnitary::prepare(&system_state(problem)?),
    ))?;
    push_controlled_powers(&mut c, problem, 0, n)?;
    if with_inverse_qft {
        c.push(CircuitOp::InverseQft {
            register: (0..n).collect(),
        })?;
    }
    Ok(c)
}

pub fn qpe_output_state(problem: &SpectralProblem) -> Result<StateVector> {
    qpe_circuit(problem, true)?.prepare()
}

/// Phase-register marginal of the simulated circuit.
pub fn qpe_circuit_histogram(problem: &SpectralProblem) -> Result<QpeHistogram> {
    Ok(QpeHistogram {
        probabilities: qpe_output_state(problem)?.low_marginal(problem.n)?,
        source: HistogramSource::Exact,
    })
}

/// Draws `shots` phase-register outcomes from an exact histogram.
pub fn sample_histogram(hist: &QpeHistogram, shots: u64, rng: &mut impl Rng) -> Result<QpeHistogram> {
    if shots == 0 {
        return Err(Error::InvalidProblem("shot count must be at least 1".into()));
    }
    let dist = rand::distr::weighted::WeightedIndex::new(&hist.probabilities)
        .map_err(|e| Error::InvalidProblem(format!("histogram: {e}")))?;
    let mut counts = vec![0u64; hist.probabilities.len()];
    for _ in 0..shots {
        counts[rng.sample(&dist)] += 1;
    }
    Ok(QpeHistogram {
        probabilities: counts.iter().map(|&c| c as f64 / shots as f64).collect(),
        source: HistogramSource::Sampled { shots },
    })
}

/// The phase-estimation output as a readout target over the phase register.
pub fn qpe_readout_target(problem: &SpectralProblem) -> Result<ReadoutTarget> {
    ReadoutTarget::with_readout(qpe_output_state(problem)?, problem.n)
}

/// `h = sum_k P_k L^2_{k - k_c}` from the SWAP test on the CNOT-doubled
/// phase register.
pub fn qpe_swap_overlap(
    problem: &SpectralProblem,
    lf: &LfParam,
    budget: &MeasurementBudget,
) -> Result<OverlapEstimate> {
    estimate_sq_overlap(&qpe_readout_target(problem)?, lf, budget)
}

/// Ancilla-0 probability of the uncopied SWAP test between an LF register
/// and the phase register. With `with_qfts = false` both inverse QFTs are
/// dropped (the LF register then holds the shifted Slater state and the
/// phase register its pre-transform state).
pub fn direct_swap_probability(problem: &SpectralProblem, lf: &LfParam, with_qfts: bool) -> Result<f64> {
    let n = problem.n;
    if lf.n() != n {
        return Err(Error::QubitMismatch {
            left: lf.n(),
            right: n,
        });
    }
    let total = 2 * n + problem.n_system + 1;
    check_capacity(total)?;
    let mut c = Circuit::new(total)?;
    let mut lf_prep = slater_circuit(n, lf.decay_rate())?;
    let dim = lf.dim() as f64;
    for m in 0..n {
        let turns = (lf.center() as f64 * (1u64 << m) as f64 / dim).fract();
        lf_prep.push(CircuitOp::PhaseZ {
            qubit: m,
            angle: 2.0 * PI * turns,
        })?;
    }
    if with_qfts {
        lf_prep.push(CircuitOp::InverseQft {
            register: (0..n).collect(),
        })?;
    }
    c.append_shifted(&lf_prep, 0)?;
    c.append_shifted(&qpe_circuit(problem, with_qfts)?, n)?;
    let anc = total - 1;
    let lf_reg: Vec<u32> = (0..n).collect();
    let phase_reg: Vec<u32> = (n..2 * n).collect();
    push_swap_test(&mut c, anc, &lf_reg, &phase_reg)?;
    c.prepare()?.prob_zero(anc)
}

/// LF decay rate whose squared profile has the same half width as a
/// phase-estimation peak of decay rate `a`.
pub fn matched_lf_decay_rate(a: f64) -> f64 {
    a / (2f64.sqrt() - 1.0).sqrt()
}

#[derive(Debug, Clone)]
pub struct SpectrumFitConfig {
    /// Register width of the LF model; defaults to the phase register.
    pub lf_qubits: Option<u32>,
    pub initial_centers: Vec<i64>,
    /// Defaults to the half-width match of the phase-estimation peaks.
    pub lf_decay_rate: Option<f64>,
    pub settings: FitSettings,
    pub budget: MeasurementBudget,
}

/// Amplitude readout of the phase-estimation histogram.
pub fn fit_spectrum(problem: &SpectralProblem, config: &SpectrumFitConfig) -> Result<FitTrace> {
    let n_lf = config.lf_qubits.unwrap_or(problem.n);
    let a = config
        .lf_decay_rate
        .unwrap_or_else(|| matched_lf_decay_rate(problem.decay_rate));
    let initial = config
        .initial_centers
        .iter()
        .map(|&c| LfParam::new(n_lf, a, c))
        .collect::<Result<Vec<_>>>()?;
    let oracle = TargetOracle::new(qpe_readout_target(problem)?, config.budget.clone())?;
    fit_amplitude(
        &AmplitudeFitProblem {
            initial,
            settings: config.settings.clone(),
        },
        &oracle,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn alpha_at_zero_is_geometric_sum() {
        let (n, a) = (6, 0.2);
        let dim = 64.0;
        let expected = one_sided_norm(n, a).unwrap() / 8.0 * (-(-a * dim).exp_m1()) / -(-a).exp_m1();
        let got = alpha_lf(0.0, n, a).unwrap();
        assert_abs_diff_eq!(got.re, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn histogram_is_normalized() {
        let p = SpectralProblem::new(vec![1.0, 2.5], vec![0.3, 0.7], 8.0, 5, 1, 0.1).unwrap();
        let h = qpe_exact_histogram(&p).unwrap();
        assert_abs_diff_eq!(h.probabilities.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(h.probabilities.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn weights_are_padded_and_renormalized() {
        let p = SpectralProblem::new(vec![1.0, 2.0, 3.0], vec![1.0, 1.0, 2.0], 1.0, 4, 2, 0.3).unwrap();
        assert_eq!(p.weights().len(), 4);
        assert_abs_diff_eq!(p.weights()[2], 0.5, epsilon = 1e-15);
        assert!(SpectralProblem::new(vec![1.0], vec![-1.0], 1.0, 4, 0, 0.3).is_err());
        assert!(SpectralProblem::new(vec![1.0; 3], vec![1.0; 3], 1.0, 4, 1, 0.3).is_err());
    }

    #[test]
    fn eta_round_trip() {
        let p = SpectralProblem::with_eta(vec![1.0], vec![1.0], 3.0, 6, 0, 1.5).unwrap();
        assert_abs_diff_eq!(p.eta(), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn circular_offsets() {
        assert_eq!(circular_offset(30.0, 32.0), -2.0);
        assert_eq!(circular_offset(-3.0, 32.0), -3.0);
        assert_eq!(circular_offset(16.0, 32.0), 16.0);
    }

    #[test]
    fn sampled_histogram_counts() {
        let p = SpectralProblem::new(vec![1.0], vec![1.0], 4.0, 4, 0, 0.2).unwrap();
        let h = qpe_exact_histogram(&p).unwrap();
        let mut rng = crate::rng::stream(3, &[]);
        let s = sample_histogram(&h, 1000, &mut rng).unwrap();
        assert_abs_diff_eq!(s.probabilities.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_eq!(s.source, HistogramSource::Sampled { shots: 1000 });
    }

    #[test]
    fn default_scale_places_top_eigenvalue() {
        let t0 = default_scale(&[1.0, 4.0], 5).unwrap();
        assert_abs_diff_eq!(t0 * 4.0, 28.8, epsilon = 1e-12);
        assert!(default_scale(&[-1.0], 5).is_err());
    }
}
