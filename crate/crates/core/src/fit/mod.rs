//! Classical optimizers over LF expansions.

pub mod coefficients;
pub mod driver;
pub mod gradient;
pub mod metropolis;

pub use coefficients::{
    fidelity_of, rank_one_kappa, solve_coefficients_fidelity, solve_coefficients_residual,
    FidelitySolution, ResidualSolution,
};
pub use driver::{
    fit_amplitude, fit_state, AmplitudeFitProblem, FidelityFitProblem, FitSettings, FitTrace, WIDTH_FLOOR,
};
pub use gradient::{
    fidelity_gradient_a, fidelity_objective, fidelity_solution, residual_gradient_a, residual_objective,
    residual_solution, FidelityGradient, ResidualGradient,
};
pub use metropolis::{metropolis_centers, AnnealingSchedule, IterationRecord, SearchObjective};
