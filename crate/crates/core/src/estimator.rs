//! Overlap estimates under three measurement models, and the accounting of
//! quantum evaluations.
//!
//! The estimator computes the ancilla-0 probability of each readout circuit
//! (analytically from reduced-state identities, or by simulating the circuit)
//! and then either returns it exactly, samples it with a finite number of
//! shots, or estimates it by phase estimation on the amplitude-amplification
//! iterate.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, OnceLock};

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use crate::basis::{lf_sq_vector, lf_vector, LfParam};
use crate::error::{Error, Result};
use crate::rng;
use crate::simulator::amplify::{swap_test_preparation, switch_test_preparation, GroverIterate};
use crate::simulator::circuit::{Circuit, CircuitOp, RegisterUnitary};
use crate::simulator::readout::{push_swap_test, top_qubits};
use crate::state::{check_capacity, coarsen, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementMode {
    Exact,
    Shots,
    #[serde(rename = "aa")]
    AaEnhanced,
}

/// How a shot budget is shared between the two SWITCH-test phase settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShotSplit {
    /// Half of the shots at each setting.
    #[default]
    Total,
    /// The full shot count at each setting.
    PerSetting,
}

/// Where the exact circuit probabilities come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbabilityEngine {
    /// Reduced-state identities (fast, any width).
    #[default]
    Analytic,
    /// Full statevector simulation of the readout circuit.
    Circuit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBudget {
    pub mode: MeasurementMode,
    pub shots: u64,
    pub shot_split: ShotSplit,
    /// Phase-register width for amplitude-amplified estimation.
    pub aa_bits: u32,
    /// Independent phase-estimation runs whose median is reported.
    pub aa_repetitions: u32,
    pub seed: u64,
    pub engine: ProbabilityEngine,
}

impl Default for MeasurementBudget {
    fn default() -> Self {
        Self {
            mode: MeasurementMode::Exact,
            shots: 1000,
            shot_split: ShotSplit::Total,
            aa_bits: 6,
            aa_repetitions: 7,
            seed: 0,
            engine: ProbabilityEngine::Analytic,
        }
    }
}

impl MeasurementBudget {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn shots(shots: u64, seed: u64) -> Self {
        Self {
            mode: MeasurementMode::Shots,
            shots,
            seed,
            ..Self::default()
        }
    }

    pub fn amplified(bits: u32, seed: u64) -> Self {
        Self {
            mode: MeasurementMode::AaEnhanced,
            aa_bits: bits,
            seed,
            ..Self::default()
        }
    }

    pub fn with_engine(mut self, engine: ProbabilityEngine) -> Self {
        self.engine = engine;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            MeasurementMode::Shots if self.shots == 0 => {
                Err(Error::InvalidProblem("shot count must be at least 1".into()))
            }
            MeasurementMode::Shots
                if self.shot_split == ShotSplit::Total && self.shots < 2 =>
            {
                Err(Error::InvalidProblem(
                    "splitting shots between two settings needs at least 2".into(),
                ))
            }
            MeasurementMode::AaEnhanced if self.aa_bits == 0 || self.aa_bits > 16 => Err(
                Error::InvalidProblem(format!("phase register width {} not in 1..=16", self.aa_bits)),
            ),
            MeasurementMode::AaEnhanced if self.aa_repetitions == 0 => {
                Err(Error::InvalidProblem("need at least one phase-estimation run".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapEstimate {
    /// Real overlaps carry a zero imaginary part.
    pub value: Complex64,
    pub shots_used: u64,
    pub mode: MeasurementMode,
}

impl OverlapEstimate {
    fn real(value: f64, shots_used: u64, mode: MeasurementMode) -> Self {
        Self {
            value: Complex64::new(value, 0.0),
            shots_used,
            mode,
        }
    }
}

/// A prepared state whose lowest `readout` qubits carry the distribution
/// being read out. Any higher qubits are spectators.
#[derive(Debug, Clone)]
pub struct ReadoutTarget {
    state: StateVector,
    readout: u32,
    distribution: Vec<f64>,
}

impl ReadoutTarget {
    pub fn new(state: StateVector) -> Self {
        let readout = state.num_qubits();
        Self::with_readout(state, readout).expect("full register is a valid readout")
    }

    pub fn with_readout(state: StateVector, readout: u32) -> Result<Self> {
        let distribution = state.low_marginal(readout)?;
        if readout == 0 {
            return Err(Error::InvalidProblem("readout register is empty".into()));
        }
        Ok(Self {
            state,
            readout,
            distribution,
        })
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn readout_qubits(&self) -> u32 {
        self.readout
    }

    /// `|c_k|^2` over the readout register.
    pub fn distribution(&self) -> &[f64] {
        &self.distribution
    }

    fn require_plain(&self) -> Result<()> {
        if self.readout != self.state.num_qubits() {
            return Err(Error::InvalidProblem(
                "complex overlaps need the whole target register".into(),
            ));
        }
        Ok(())
    }
}

const KIND_COMPLEX: u64 = 1;
const KIND_SQ: u64 = 2;
const KIND_SELF: u64 = 3;

fn stream_for(budget: &MeasurementBudget, kind: u64, lf: Option<&LfParam>) -> rand_chacha::ChaCha8Rng {
    match lf {
        Some(p) => rng::stream(
            budget.seed,
            &[kind, p.n() as u64, p.decay_rate().to_bits(), p.center()],
        ),
        None => rng::stream(budget.seed, &[kind]),
    }
}

fn sample_fraction(rng: &mut impl Rng, shots: u64, p: f64) -> Result<f64> {
    let dist = Binomial::new(shots, p.clamp(0.0, 1.0))
        .map_err(|e| Error::InvalidProblem(format!("binomial sampling: {e}")))?;
    Ok(dist.sample(rng) as f64 / shots as f64)
}

/// Exact probability distribution of the phase register after phase
/// estimation with `bits` qubits on a two-level rotation `m` acting on
/// `initial`.
pub fn phase_register_distribution(
    m: &Matrix2<Complex64>,
    initial: [f64; 2],
    bits: u32,
) -> Result<Vec<f64>> {
    let sys = bits;
    let mut c = Circuit::new(bits + 1)?;
    let init = StateVector::from_real(&initial)?;
    c.push(CircuitOp::unitary(vec![sys], RegisterUnitary::prepare(&init)))?;
    let mut power = *m;
    for q in 0..bits {
        c.push(CircuitOp::Hadamard { qubit: q })?;
        let dense = nalgebra::DMatrix::from_iterator(2, 2, power.iter().copied());
        c.push(CircuitOp::Controlled {
            controls: vec![q],
            register: vec![sys],
            unitary: std::sync::Arc::new(RegisterUnitary::Dense(dense)),
        })?;
        power = power * power;
    }
    c.push(CircuitOp::InverseQft {
        register: (0..bits).collect(),
    })?;
    c.prepare()?.low_marginal(bits)
}

/// Iterate restricted to the (good, bad) plane for good-state probability `p`.
pub fn canonical_rotation(p: f64) -> Matrix2<Complex64> {
    let theta = p.clamp(0.0, 1.0).sqrt().asin();
    let (s, c) = (2.0 * theta).sin_cos();
    Matrix2::new(
        Complex64::new(c, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(c, 0.0),
    )
}

/// Median of `repetitions` phase-estimation readouts of a good-state
/// probability.
fn amplified_probability(
    m: &Matrix2<Complex64>,
    p: f64,
    bits: u32,
    repetitions: u32,
    rng: &mut impl Rng,
) -> Result<f64> {
    let p = p.clamp(0.0, 1.0);
    let dist = phase_register_distribution(m, [p.sqrt(), (1.0 - p).sqrt()], bits)?;
    let mut samples: Vec<f64> = (0..repetitions)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let k = dist
                .iter()
                .position(|&q| {
                    acc += q;
                    acc > u
                })
                .unwrap_or(dist.len() - 1);
            (PI * k as f64 / (1u64 << bits) as f64).sin().powi(2)
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    Ok(samples[samples.len() / 2])
}

/// Turns an exact good-state probability into an estimate of it.
fn measure_probability(
    p: f64,
    budget: &MeasurementBudget,
    shots: u64,
    rotation: impl FnOnce() -> Result<Matrix2<Complex64>>,
    rng: &mut impl Rng,
) -> Result<f64> {
    match budget.mode {
        MeasurementMode::Exact => Ok(p),
        MeasurementMode::Shots => sample_fraction(rng, shots, p),
        MeasurementMode::AaEnhanced => {
            amplified_probability(&rotation()?, p, budget.aa_bits, budget.aa_repetitions, rng)
        }
    }
}

fn circuit_rotation(
    engine: ProbabilityEngine,
    p: f64,
    prep: impl FnOnce() -> Result<crate::simulator::Preparation>,
) -> Result<Matrix2<Complex64>> {
    match engine {
        ProbabilityEngine::Analytic => Ok(canonical_rotation(p)),
        ProbabilityEngine::Circuit => {
            let spectrum = GroverIterate::new(&prep()?)?.spectrum()?;
            Ok(spectrum.restricted.unwrap_or_else(|| canonical_rotation(p)))
        }
    }
}

/// `<target|L>` from SWITCH tests at phases 0 and pi/2.
pub fn estimate_complex_overlap(
    target: &ReadoutTarget,
    lf: &LfParam,
    budget: &MeasurementBudget,
) -> Result<OverlapEstimate> {
    target.require_plain()?;
    let n = target.state.num_qubits();
    if n != lf.n() {
        return Err(Error::QubitMismatch {
            left: n,
            right: lf.n(),
        });
    }
    let (p_re, p_im) = match budget.engine {
        ProbabilityEngine::Analytic => {
            let l = lf_vector(lf);
            let ip: Complex64 = target
                .state
                .amplitudes()
                .iter()
                .zip(l)
                .map(|(c, x)| c.conj() * x)
                .sum();
            ((1.0 + ip.re) / 2.0, (1.0 - ip.im) / 2.0)
        }
        ProbabilityEngine::Circuit => {
            check_capacity(n + 1)?;
            let p = |phi| -> Result<f64> {
                let prep = switch_test_preparation(lf, &target.state, phi)?;
                prep.circuit.prepare()?.prob_zero(prep.ancilla)
            };
            (p(0.0)?, p(FRAC_PI_2)?)
        }
    };
    let (s_re, s_im) = match budget.shot_split {
        ShotSplit::Total => (budget.shots - budget.shots / 2, budget.shots / 2),
        ShotSplit::PerSetting => (budget.shots, budget.shots),
    };
    let mut rng = stream_for(budget, KIND_COMPLEX, Some(lf));
    let engine = budget.engine;
    let q_re = measure_probability(
        p_re,
        budget,
        s_re,
        || circuit_rotation(engine, p_re, || switch_test_preparation(lf, &target.state, 0.0)),
        &mut rng,
    )?;
    let q_im = measure_probability(
        p_im,
        budget,
        s_im,
        || circuit_rotation(engine, p_im, || switch_test_preparation(lf, &target.state, FRAC_PI_2)),
        &mut rng,
    )?;
    let shots_used = match budget.mode {
        MeasurementMode::Exact => 0,
        MeasurementMode::Shots => s_re + s_im,
        MeasurementMode::AaEnhanced => 2 * budget.aa_repetitions as u64,
    };
    Ok(OverlapEstimate {
        value: Complex64::new(
            (2.0 * q_re - 1.0).clamp(-1.0, 1.0),
            (1.0 - 2.0 * q_im).clamp(-1.0, 1.0),
        ),
        shots_used,
        mode: budget.mode,
    })
}

/// `sum_k |c_k|^2 L^2_{k - k_c}` on the common most-significant qubits.
pub fn exact_sq_overlap(target: &ReadoutTarget, lf: &LfParam) -> f64 {
    let y = lf_sq_vector(lf);
    let n_t = target.readout;
    let n_l = lf.n();
    let width = n_t.min(n_l);
    let p = coarsen(&target.distribution, n_t - width);
    let q = coarsen(&y, n_l - width);
    p.iter().zip(&q).map(|(a, b)| a * b).sum()
}

fn shots_for(budget: &MeasurementBudget) -> u64 {
    match budget.mode {
        MeasurementMode::Exact => 0,
        MeasurementMode::Shots => budget.shots,
        MeasurementMode::AaEnhanced => budget.aa_repetitions as u64,
    }
}

/// Squared-overlap readout from the SWAP test on the CNOT-doubled target.
///
/// When the LF and target readout widths differ, the wider side is averaged
/// over its least significant qubits.
pub fn estimate_sq_overlap(
    target: &ReadoutTarget,
    lf: &LfParam,
    budget: &MeasurementBudget,
) -> Result<OverlapEstimate> {
    let p0 = match budget.engine {
        ProbabilityEngine::Analytic => (1.0 + exact_sq_overlap(target, lf)) / 2.0,
        ProbabilityEngine::Circuit => {
            let prep = swap_test_preparation(lf, &target.state, target.readout)?;
            prep.circuit.prepare()?.prob_zero(prep.ancilla)?
        }
    };
    let mut rng = stream_for(budget, KIND_SQ, Some(lf));
    let engine = budget.engine;
    let q = measure_probability(
        p0,
        budget,
        budget.shots,
        || circuit_rotation(engine, p0, || swap_test_preparation(lf, &target.state, target.readout)),
        &mut rng,
    )?;
    Ok(OverlapEstimate::real(
        (2.0 * q - 1.0).clamp(-1.0, 1.0),
        shots_for(budget),
        budget.mode,
    ))
}

fn self_norm_preparation(target: &ReadoutTarget) -> Result<crate::simulator::Preparation> {
    let n_t = target.state.num_qubits();
    let r = target.readout;
    let block = n_t + r;
    let anc = 2 * block;
    let mut c = Circuit::new(anc + 1)?;
    for copy in 0..2 {
        let base = copy * block;
        c.push(CircuitOp::unitary(
            (base..base + n_t).collect(),
            RegisterUnitary::prepare(&target.state),
        ))?;
        for m in 0..r {
            c.push(CircuitOp::Cnot {
                control: base + m,
                target: base + n_t + m,
            })?;
        }
    }
    push_swap_test(&mut c, anc, &top_qubits(n_t, r, r), &top_qubits(block + n_t, r, r))?;
    Ok(crate::simulator::Preparation {
        circuit: c,
        ancilla: anc,
    })
}

/// `<y, y> = sum_k |c_k|^4` from a SWAP test between two doubled copies.
pub fn estimate_target_self_norm(
    target: &ReadoutTarget,
    budget: &MeasurementBudget,
) -> Result<OverlapEstimate> {
    let p0 = match budget.engine {
        ProbabilityEngine::Analytic => {
            (1.0 + target.distribution.iter().map(|p| p * p).sum::<f64>()) / 2.0
        }
        ProbabilityEngine::Circuit => {
            let prep = self_norm_preparation(target)?;
            prep.circuit.prepare()?.prob_zero(prep.ancilla)?
        }
    };
    let mut rng = stream_for(budget, KIND_SELF, None);
    let engine = budget.engine;
    let q = measure_probability(
        p0,
        budget,
        budget.shots,
        || circuit_rotation(engine, p0, || self_norm_preparation(target)),
        &mut rng,
    )?;
    Ok(OverlapEstimate::real(
        (2.0 * q - 1.0).clamp(-1.0, 1.0),
        shots_for(budget),
        budget.mode,
    ))
}

/// Amplitude-amplified estimate of the SWAP-test good-state probability
/// `P_0 = (1 + h) / 2` with `bits` phase qubits. Returns `P_0`; use
/// [`estimate_sq_overlap`] with an amplified budget for `h` itself.
pub fn aa_enhanced_estimate(
    target: &ReadoutTarget,
    lf: &LfParam,
    bits: u32,
    repetitions: u32,
    seed: u64,
) -> Result<OverlapEstimate> {
    let budget = MeasurementBudget {
        aa_repetitions: repetitions,
        ..MeasurementBudget::amplified(bits, seed)
    };
    budget.validate()?;
    let h = estimate_sq_overlap(target, lf, &budget)?;
    Ok(OverlapEstimate::real(
        (1.0 + h.value.re) / 2.0,
        h.shots_used,
        MeasurementMode::AaEnhanced,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EvalKind {
    Complex,
    Squared,
}

/// Evaluation cache and cost counters shared by a fit.
///
/// `m_iter` counts distinct quantum evaluations; re-queries are served from
/// the cache. Safe to share across threads.
#[derive(Debug, Default)]
pub struct CostLedger {
    cache: Mutex<HashMap<(EvalKind, LfParam), OverlapEstimate>>,
    self_norm: OnceLock<OverlapEstimate>,
    n_iter: AtomicU64,
    shots: AtomicU64,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    fn lookup(
        &self,
        key: (EvalKind, LfParam),
        compute: impl FnOnce() -> Result<OverlapEstimate>,
    ) -> Result<OverlapEstimate> {
        if let Some(hit) = self.cache.lock().expect("ledger lock").get(&key) {
            return Ok(*hit);
        }
        let fresh = compute()?;
        let mut cache = self.cache.lock().expect("ledger lock");
        let stored = *cache.entry(key).or_insert_with(|| {
            self.shots.fetch_add(fresh.shots_used, Ordering::Relaxed);
            fresh
        });
        Ok(stored)
    }

    /// Distinct LF parameter sets evaluated on the quantum side.
    pub fn m_iter(&self) -> usize {
        self.cache.lock().expect("ledger lock").len()
    }

    pub fn n_iter(&self) -> u64 {
        self.n_iter.load(Ordering::Relaxed)
    }

    pub fn record_iteration(&self) {
        self.n_iter.fetch_add(1, Ordering::Relaxed);
    }

    pub fn shots_used(&self) -> u64 {
        self.shots.load(Ordering::Relaxed)
    }
}

/// Source of the quantum overlaps a fit consumes.
pub trait OverlapOracle: Sync {
    /// `<target|L>`.
    fn complex_overlap(&self, lf: &LfParam) -> Result<Complex64>;
    /// `sum_k |c_k|^2 L^2_{k - k_c}`.
    fn sq_overlap(&self, lf: &LfParam) -> Result<f64>;
    /// `sum_k |c_k|^4`.
    fn self_norm(&self) -> Result<f64>;
    fn ledger(&self) -> &CostLedger;
}

/// Oracle backed by a simulated target and a measurement budget.
#[derive(Debug)]
pub struct TargetOracle {
    target: ReadoutTarget,
    budget: MeasurementBudget,
    ledger: CostLedger,
}

impl TargetOracle {
    pub fn new(target: ReadoutTarget, budget: MeasurementBudget) -> Result<Self> {
        budget.validate()?;
        Ok(Self {
            target,
            budget,
            ledger: CostLedger::new(),
        })
    }

    pub fn target(&self) -> &ReadoutTarget {
        &self.target
    }

    pub fn budget(&self) -> &MeasurementBudget {
        &self.budget
    }
}

impl OverlapOracle for TargetOracle {
    fn complex_overlap(&self, lf: &LfParam) -> Result<Complex64> {
        self.ledger
            .lookup((EvalKind::Complex, *lf), || {
                estimate_complex_overlap(&self.target, lf, &self.budget)
            })
            .map(|e| e.value)
    }

    fn sq_overlap(&self, lf: &LfParam) -> Result<f64> {
        self.ledger
            .lookup((EvalKind::Squared, *lf), || {
                estimate_sq_overlap(&self.target, lf, &self.budget)
            })
            .map(|e| e.value.re)
    }

    fn self_norm(&self) -> Result<f64> {
        if let Some(hit) = self.ledger.self_norm.get() {
            return Ok(hit.value.re);
        }
        let fresh = estimate_target_self_norm(&self.target, &self.budget)?;
        let stored = self.ledger.self_norm.get_or_init(|| {
            self.ledger.shots.fetch_add(fresh.shots_used, Ordering::Relaxed);
            fresh
        });
        Ok(stored.value.re)
    }

    fn ledger(&self) -> &CostLedger {
        &self.ledger
    }
}
