//! Trial execution.

use std::time::Instant;

use lfreadout::basis::LfParam;
use lfreadout::estimator::{MeasurementMode, OverlapOracle, ReadoutTarget, TargetOracle};
use lfreadout::fit::{
    fidelity_solution, fit_amplitude, fit_state, AmplitudeFitProblem, FidelityFitProblem, FitTrace,
    IterationRecord,
};
use lfreadout::qpe::{fit_spectrum, qpe_readout_target, SpectrumFitConfig};
use lfreadout::{rng, LcLfModel, StateVector};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rayon::prelude::*;

use crate::config::{ExperimentKind, Group, LoadedConfig};
use crate::error::{CliError, CliResult};

/// Outcome of one trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub group: usize,
    pub trial: u64,
    pub seed: u64,
    /// Loss as seen by the optimizer, from estimated overlaps.
    pub objective: f64,
    /// Loss of the returned model against the exact target.
    pub exact_loss: f64,
    /// Infidelity of direct amplitude estimation with the same shot count.
    pub direct_infidelity: Option<f64>,
    pub m_iter: usize,
    pub n_iter: u64,
    pub configurations: usize,
    pub shots_used: u64,
    pub converged: bool,
    pub centers: Vec<u64>,
    pub decay_rates: Vec<f64>,
    pub coefficients: Vec<Complex64>,
    pub trace: Vec<IterationRecord>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub groups: Vec<Group>,
    pub records: Vec<TrialRecord>,
}

/// What each group is scored against.
enum Reference {
    State(StateVector),
    Distribution(Vec<f64>),
}

fn infidelity(model: &LcLfModel, target: &StateVector) -> CliResult<f64> {
    let state = StateVector::normalized(model.amplitudes())?;
    Ok((1.0 - state.fidelity(target)?).max(0.0))
}

/// `|y - p|^2 / |y|^2` for a modelled probability profile `p`.
pub fn relative_residual(model: &[f64], target: &[f64]) -> f64 {
    if model.len() != target.len() {
        return f64::NAN;
    }
    let num: f64 = model.iter().zip(target).map(|(p, y)| (y - p).powi(2)).sum();
    let den: f64 = target.iter().map(|y| y * y).sum();
    num / den
}

/// Infidelity of `sqrt(p_hat)` with exact phases, `p_hat` from `shots`
/// computational-basis samples.
pub fn direct_infidelity(target: &StateVector, shots: u64, seed: u64) -> CliResult<f64> {
    let probs = target.probabilities();
    let dist = WeightedIndex::new(&probs)
        .map_err(|e| lfreadout::Error::InvalidProblem(format!("sampling target: {e}")))?;
    let mut r = rng::stream(seed, &[0xd1, target.num_qubits() as u64]);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..shots {
        counts[r.sample(&dist)] += 1;
    }
    let overlap: f64 = probs
        .iter()
        .zip(&counts)
        .map(|(p, &c)| (p * c as f64 / shots as f64).sqrt())
        .sum();
    Ok((1.0 - overlap * overlap).max(0.0))
}

fn reference_for(cfg: &LoadedConfig, group: &Group) -> CliResult<Reference> {
    Ok(match cfg.config.kind {
        ExperimentKind::QpeSpectrum => {
            Reference::Distribution(qpe_readout_target(&cfg.spectral_problem()?)?.distribution().to_vec())
        }
        ExperimentKind::AmplitudeReadout => Reference::Distribution(cfg.target_state(group.n)?.probabilities()),
        ExperimentKind::StateReadout | ExperimentKind::ScalingBench => Reference::State(cfg.target_state(group.n)?),
    })
}

fn from_trace(trace: FitTrace, reference: &Reference) -> CliResult<TrialRecord> {
    let exact_loss = match reference {
        Reference::State(s) => infidelity(&trace.model, s)?,
        Reference::Distribution(y) => relative_residual(&trace.model.sq_profile(), y),
    };
    Ok(TrialRecord {
        group: 0,
        trial: 0,
        seed: 0,
        objective: trace.relative_loss,
        exact_loss,
        direct_infidelity: None,
        m_iter: trace.m_iter,
        n_iter: trace.n_iter,
        configurations: trace.configurations,
        shots_used: trace.shots_used,
        converged: trace.converged,
        centers: trace.model.centers(),
        decay_rates: trace.model.decay_rates(),
        coefficients: trace.model.coeffs().to_vec(),
        trace: trace.records,
        seconds: 0.0,
    })
}

fn fixed_params_trial(params: Vec<LfParam>, target: &StateVector, oracle: &TargetOracle) -> CliResult<TrialRecord> {
    let (_, sol) = fidelity_solution(&params, oracle)?;
    let objective = (1.0 - sol.kappa_max).max(0.0);
    let model = LcLfModel::new(sol.coeffs, params)?;
    Ok(TrialRecord {
        group: 0,
        trial: 0,
        seed: 0,
        objective,
        exact_loss: infidelity(&model, target)?,
        direct_infidelity: None,
        m_iter: oracle.ledger().m_iter(),
        n_iter: 0,
        configurations: 1,
        shots_used: oracle.ledger().shots_used(),
        converged: true,
        centers: model.centers(),
        decay_rates: model.decay_rates(),
        coefficients: model.coeffs().to_vec(),
        trace: Vec::new(),
        seconds: 0.0,
    })
}

fn run_trial(cfg: &LoadedConfig, group: &Group, reference: &Reference, seed: u64) -> CliResult<TrialRecord> {
    let c = &cfg.config;
    let budget = c.budget.with_seed(seed);
    let settings = c.fit.settings(group.n, seed);
    let mut record = match (c.kind, reference) {
        (ExperimentKind::QpeSpectrum, _) => {
            let rate = c.model.decay_rates.as_ref().map(|r| r[0]);
            let trace = fit_spectrum(
                &cfg.spectral_problem()?,
                &SpectrumFitConfig {
                    lf_qubits: c.model.n,
                    initial_centers: group.centers.clone(),
                    lf_decay_rate: rate,
                    settings,
                    budget,
                },
            )?;
            from_trace(trace, reference)?
        }
        (_, Reference::Distribution(_)) => {
            let oracle = TargetOracle::new(ReadoutTarget::new(cfg.target_state(group.n)?), budget)?;
            let problem = AmplitudeFitProblem {
                initial: c.initial_params(group)?,
                settings,
            };
            from_trace(fit_amplitude(&problem, &oracle)?, reference)?
        }
        (ExperimentKind::ScalingBench, Reference::State(target)) => {
            let oracle = TargetOracle::new(ReadoutTarget::new(target.clone()), budget)?;
            let mut r = fixed_params_trial(c.initial_params(group)?, target, &oracle)?;
            r.direct_infidelity = Some(direct_infidelity(target, c.budget.shots, seed)?);
            r
        }
        (_, Reference::State(target)) => {
            let oracle = TargetOracle::new(ReadoutTarget::new(target.clone()), budget)?;
            let problem = FidelityFitProblem {
                initial: c.initial_params(group)?,
                settings,
            };
            let mut r = from_trace(fit_state(&problem, &oracle)?, reference)?;
            if c.budget.mode == MeasurementMode::Shots {
                r.direct_infidelity = Some(direct_infidelity(target, c.budget.shots, seed)?);
            }
            r
        }
    };
    record.seed = seed;
    Ok(record)
}

/// Runs every trial of every group. Trials execute in parallel; each has its
/// own seed, so the records do not depend on scheduling.
pub fn run_experiment(cfg: &LoadedConfig) -> CliResult<RunResult> {
    let groups = cfg.groups()?;
    let references = groups
        .iter()
        .map(|g| reference_for(cfg, g))
        .collect::<CliResult<Vec<_>>>()?;
    let jobs: Vec<(usize, u64)> = (0..groups.len())
        .flat_map(|g| (0..cfg.config.trials).map(move |t| (g, t)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(g, trial)| {
            let seed = rng::derive_seed(cfg.config.seed, &[g as u64, trial]);
            let start = Instant::now();
            let mut r = run_trial(cfg, &groups[g], &references[g], seed)?;
            r.group = g;
            r.trial = trial;
            r.seconds = start.elapsed().as_secs_f64();
            log::debug!("group {} trial {trial}: loss {:.3e}", groups[g].label, r.exact_loss);
            Ok::<_, CliError>(r)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(RunResult { groups, records })
}
