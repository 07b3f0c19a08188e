//! Annealed Metropolis search over integer peak centers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inverse temperature `beta0 ln(1 + k)` and step bound
/// `max(ceil(alpha0 - alpha1 / k), 1)` at iteration `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealingSchedule {
    pub beta0: f64,
    pub alpha0: f64,
    pub alpha1: f64,
}

impl Default for AnnealingSchedule {
    fn default() -> Self {
        Self {
            beta0: 100.0,
            alpha0: 1.0,
            alpha1: 15.0,
        }
    }
}

impl AnnealingSchedule {
    /// Defaults for an `n`-qubit register: `alpha0 = 2^(n-5)`, `beta0` 100 at
    /// `n <= 5` and 150 above.
    pub fn for_width(n: u32) -> Self {
        Self {
            beta0: if n <= 5 { 100.0 } else { 150.0 },
            alpha0: 2f64.powi(n as i32 - 5),
            alpha1: 15.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta0 > 0.0) || !self.beta0.is_finite() {
            return Err(Error::InvalidProblem(format!("beta0 must be positive, got {}", self.beta0)));
        }
        if !self.alpha0.is_finite() || !self.alpha1.is_finite() {
            return Err(Error::InvalidProblem("step schedule must be finite".into()));
        }
        Ok(())
    }

    pub fn beta(&self, k: u64) -> f64 {
        self.beta0 * (1.0 + k as f64).ln()
    }

    pub fn max_step(&self, k: u64) -> u64 {
        let raw = (self.alpha0 - self.alpha1 / k.max(1) as f64).ceil();
        if raw >= 1.0 {
            raw as u64
        } else {
            1
        }
    }
}

/// `min(1, exp(beta * gain))` acceptance.
pub fn accept(gain: f64, beta: f64, rng: &mut impl Rng) -> bool {
    if gain >= 0.0 {
        return true;
    }
    rng.random::<f64>() < (beta * gain).exp()
}

/// Moves one uniformly chosen center by a signed step of magnitude at most
/// `max_step`, wrapping mod `dim`.
pub fn propose(centers: &[u64], dim: u64, max_step: u64, rng: &mut impl Rng) -> Vec<u64> {
    let l = rng.random_range(0..centers.len());
    let magnitude = rng.random_range(1..=max_step) % dim;
    let mut next = centers.to_vec();
    next[l] = if rng.random::<bool>() {
        (next[l] + magnitude) % dim
    } else {
        (next[l] + dim - magnitude) % dim
    };
    next
}

/// What the search optimizes. Losses are minimized.
pub trait SearchObjective {
    /// Loss at `centers` with the current decay rates, or `None` when the
    /// configuration is invalid (two identical basis functions).
    fn evaluate(&mut self, centers: &[u64]) -> Result<Option<f64>>;

    /// Hook after each step at the chain's current centers; may update
    /// internal parameters and return the new loss there.
    fn refine(&mut self, _centers: &[u64], loss: f64) -> Result<f64> {
        Ok(loss)
    }

    fn converged(&self, loss: f64) -> bool;

    /// Distinct quantum evaluations so far.
    fn m_iter(&self) -> usize;

    fn decay_rates(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: u64,
    /// Loss at the chain's current state.
    pub loss: f64,
    pub best_loss: f64,
    pub accepted: bool,
    pub centers: Vec<u64>,
    pub decay_rates: Vec<f64>,
    pub m_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub records: Vec<IterationRecord>,
    pub best_centers: Vec<u64>,
    pub best_decay_rates: Vec<f64>,
    pub best_loss: f64,
    pub converged: bool,
}

/// Runs the chain from `initial` until the objective reports convergence or
/// `max_iterations` steps have been taken. Iteration 0 records the start.
pub fn metropolis_centers(
    objective: &mut impl SearchObjective,
    initial: &[u64],
    dim: u64,
    schedule: &AnnealingSchedule,
    max_iterations: u64,
    rng: &mut impl Rng,
) -> Result<SearchOutcome> {
    schedule.validate()?;
    let mut centers = initial.to_vec();
    let mut loss = objective.evaluate(&centers)?.ok_or_else(|| {
        Error::InvalidProblem("initial centers repeat a basis function".into())
    })?;
    loss = objective.refine(&centers, loss)?;
    let mut best = (loss, centers.clone(), objective.decay_rates());
    let mut records = vec![IterationRecord {
        iteration: 0,
        loss,
        best_loss: loss,
        accepted: true,
        centers: centers.clone(),
        decay_rates: objective.decay_rates(),
        m_iter: objective.m_iter(),
    }];
    let mut converged = objective.converged(loss);
    let mut k = 0;
    while !converged && k < max_iterations {
        k += 1;
        let candidate = propose(&centers, dim, schedule.max_step(k), rng);
        let mut accepted = false;
        if let Some(cand_loss) = objective.evaluate(&candidate)? {
            if accept(loss - cand_loss, schedule.beta(k), rng) {
                centers = candidate;
                loss = cand_loss;
                accepted = true;
            }
        }
        loss = objective.refine(&centers, loss)?;
        if loss < best.0 {
            best = (loss, centers.clone(), objective.decay_rates());
        }
        records.push(IterationRecord {
            iteration: k,
            loss,
            best_loss: best.0,
            accepted,
            centers: centers.clone(),
            decay_rates: objective.decay_rates(),
            m_iter: objective.m_iter(),
        });
        converged = objective.converged(best.0);
    }
    Ok(SearchOutcome {
        records,
        best_centers: best.1,
        best_decay_rates: best.2,
        best_loss: best.0,
        converged,
    })
}
