//! Overlap-based readout of quantum states using discrete Lorentzian function
//! (LF) expansions.
//!
//! The crate is organised bottom-up:
//!
//! - [`basis`]: closed-form Slater/LF amplitudes and overlap kernels.
//! - [`simulator`]: dense statevector engine and the readout circuits.
//! - [`estimator`]: overlap estimates under exact, shot-sampled and
//!   amplitude-amplified measurement, with evaluation accounting.
//! - [`fit`]: fidelity and residual optimizers over LF expansions.
//! - [`qpe`]: phase estimation with a Slater-state ancilla input.
//! - [`io`]: text formats for target amplitudes and spectral problems.

pub mod basis;
pub mod error;
pub mod estimator;
pub mod fit;
pub mod io;
pub mod qpe;
pub mod rng;
pub mod simulator;
pub mod state;
pub mod targets;

pub use basis::{LcLfModel, LfParam};
pub use error::{Error, Result};
pub use state::StateVector;

/// Largest statevector the simulator will allocate.
pub const MAX_QUBITS: u32 = 22;
