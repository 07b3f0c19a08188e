//! Full readout loops: Metropolis moves on the centers, coefficient solves,
//! and optional gradient steps on the decay rates.

use std::collections::HashSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{LcLfModel, LfParam};
use crate::error::{Error, Result};
use crate::estimator::OverlapOracle;
use crate::fit::gradient::{
    fidelity_gradient_a, fidelity_solution, residual_gradient_a, residual_solution,
};
use crate::fit::metropolis::{metropolis_centers, AnnealingSchedule, IterationRecord, SearchObjective};
use crate::rng;

/// Decay rates are kept at or above this during gradient steps.
pub const WIDTH_FLOOR: f64 = 1e-3;

const INITIAL_STEP: f64 = 0.1;
const MAX_HALVINGS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub schedule: AnnealingSchedule,
    pub max_iterations: u64,
    /// Stop once infidelity (or relative squared residual) drops below this.
    pub threshold: f64,
    pub update_widths: bool,
    pub fd_step: f64,
    pub seed: u64,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            schedule: AnnealingSchedule::default(),
            max_iterations: 1000,
            threshold: 0.01,
            update_widths: true,
            fd_step: 1e-4,
            seed: 0,
        }
    }
}

impl FitSettings {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidProblem(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::InvalidProblem("finite-difference step must be positive".into()));
        }
        Ok(())
    }
}

/// State readout: maximize fidelity against the target behind the oracle.
#[derive(Debug, Clone)]
pub struct FidelityFitProblem {
    pub initial: Vec<LfParam>,
    pub settings: FitSettings,
}

/// Amplitude readout: minimize the squared residual between the target's
/// probability profile and a combination of squared LFs.
#[derive(Debug, Clone)]
pub struct AmplitudeFitProblem {
    pub initial: Vec<LfParam>,
    pub settings: FitSettings,
}

#[derive(Debug, Clone)]
pub struct FitTrace {
    pub records: Vec<IterationRecord>,
    pub model: LcLfModel,
    /// Infidelity for state readout, squared residual for amplitude readout.
    pub loss: f64,
    /// Loss divided by `<y, y>` for amplitude readout; equal to `loss` otherwise.
    pub relative_loss: f64,
    pub converged: bool,
    pub m_iter: usize,
    pub n_iter: u64,
    /// Distinct center vectors evaluated, counting the initial one.
    pub configurations: usize,
    pub shots_used: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Readout {
    Fidelity,
    Residual,
}

struct Search<'a> {
    oracle: &'a dyn OverlapOracle,
    readout: Readout,
    n: u32,
    widths: Vec<f64>,
    settings: &'a FitSettings,
    scale: f64,
    visited: HashSet<Vec<u64>>,
}

impl Search<'_> {
    fn params(&self, centers: &[u64], widths: &[f64]) -> Result<Option<Vec<LfParam>>> {
        let params = centers
            .iter()
            .zip(widths)
            .map(|(&c, &a)| LfParam::new(self.n, a, c as i64))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..params.len() {
            for j in i + 1..params.len() {
                if params[i].coincides(&params[j]) {
                    return Ok(None);
                }
            }
        }
        Ok(Some(params))
    }

    fn loss(&self, params: &[LfParam]) -> Result<f64> {
        match self.readout {
            Readout::Fidelity => Ok(1.0 - fidelity_solution(params, self.oracle)?.1.kappa_max),
            Readout::Residual => Ok(residual_solution(params, self.oracle)?.1.residual_sq),
        }
    }

    /// Gradient step on the widths with backtracking; keeps the old widths
    /// unless the loss improves.
    fn width_step(&mut self, centers: &[u64], loss: f64) -> Result<f64> {
        let Some(params) = self.params(centers, &self.widths)? else {
            return Ok(loss);
        };
        let descent: Vec<f64> = match self.readout {
            Readout::Fidelity => fidelity_gradient_a(&params, self.oracle, self.settings.fd_step)?
                .gradient
                .into_iter()
                .collect(),
            Readout::Residual => residual_gradient_a(&params, self.oracle, self.settings.fd_step)?
                .gradient
                .into_iter()
                .map(|g| -g)
                .collect(),
        };
        let norm = descent.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !(norm > 1e-12) {
            return Ok(loss);
        }
        let mut step = INITIAL_STEP;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = self
                .widths
                .iter()
                .zip(&descent)
                .map(|(a, g)| (a + step * g / norm).max(WIDTH_FLOOR))
                .collect();
            if let Some(p) = self.params(centers, &trial)? {
                let trial_loss = self.loss(&p)?;
                if trial_loss < loss {
                    self.widths = trial;
                    return Ok(trial_loss);
                }
            }
            step /= 2.0;
        }
        Ok(loss)
    }
}

impl SearchObjective for Search<'_> {
    fn evaluate(&mut self, centers: &[u64]) -> Result<Option<f64>> {
        self.visited.insert(centers.to_vec());
        match self.params(centers, &self.widths)? {
            Some(p) => self.loss(&p).map(Some),
            None => Ok(None),
        }
    }

    fn refine(&mut self, centers: &[u64], loss: f64) -> Result<f64> {
        self.oracle.ledger().record_iteration();
        if self.settings.update_widths {
            self.width_step(centers, loss)
        } else {
            Ok(loss)
        }
    }

    fn converged(&self, loss: f64) -> bool {
        loss / self.scale < self.settings.threshold
    }

    fn m_iter(&self) -> usize {
        self.oracle.ledger().m_iter()
    }

    fn decay_rates(&self) -> Vec<f64> {
        self.widths.clone()
    }
}

fn check_initial(initial: &[LfParam]) -> Result<u32> {
    let first = initial
        .first()
        .ok_or_else(|| Error::InvalidModel("model needs at least one LF".into()))?;
    if initial.iter().any(|p| p.n() != first.n()) {
        return Err(Error::InvalidModel("basis functions have different qubit counts".into()));
    }
    crate::fit::gradient::check_distinct(initial)?;
    Ok(first.n())
}

fn run(
    readout: Readout,
    initial: &[LfParam],
    settings: &FitSettings,
    oracle: &dyn OverlapOracle,
) -> Result<FitTrace> {
    settings.validate()?;
    let n = check_initial(initial)?;
    let scale = match readout {
        Readout::Fidelity => 1.0,
        Readout::Residual => {
            let y = oracle.self_norm()?;
            if !(y > 0.0) {
                return Err(Error::InvalidProblem("target profile has zero norm".into()));
            }
            y
        }
    };
    let mut search = Search {
        oracle,
        readout,
        n,
        widths: initial.iter().map(LfParam::decay_rate).collect(),
        settings,
        scale,
        visited: HashSet::new(),
    };
    let centers: Vec<u64> = initial.iter().map(LfParam::center).collect();
    let mut chain_rng = rng::stream(settings.seed, &[0x6d65_7472]);
    let outcome = metropolis_centers(
        &mut search,
        &centers,
        1u64 << n,
        &settings.schedule,
        settings.max_iterations,
        &mut chain_rng,
    )?;
    let params = search
        .params(&outcome.best_centers, &outcome.best_decay_rates)?
        .ok_or_else(|| Error::InvalidProblem("best configuration repeats a basis function".into()))?;
    let (coeffs, loss) = match readout {
        Readout::Fidelity => {
            let (_, sol) = fidelity_solution(&params, oracle)?;
            (sol.coeffs, 1.0 - sol.kappa_max)
        }
        Readout::Residual => {
            let (_, sol) = residual_solution(&params, oracle)?;
            (
                sol.coeffs.iter().map(|&d| Complex64::new(d, 0.0)).collect(),
                sol.residual_sq,
            )
        }
    };
    let ledger = oracle.ledger();
    Ok(FitTrace {
        model: LcLfModel::new(coeffs, params)?,
        loss,
        relative_loss: loss / scale,
        converged: outcome.converged,
        m_iter: ledger.m_iter(),
        n_iter: ledger.n_iter(),
        configurations: search.visited.len(),
        shots_used: ledger.shots_used(),
        records: outcome.records,
    })
}

/// Fidelity-based state readout.
pub fn fit_state(problem: &FidelityFitProblem, oracle: &dyn OverlapOracle) -> Result<FitTrace> {
    run(Readout::Fidelity, &problem.initial, &problem.settings, oracle)
}

/// Residual-based readout of the squared amplitudes.
pub fn fit_amplitude(problem: &AmplitudeFitProblem, oracle: &dyn OverlapOracle) -> Result<FitTrace> {
    run(Readout::Residual, &problem.initial, &problem.settings, oracle)
}
