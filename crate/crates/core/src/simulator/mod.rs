//! Dense statevector simulation of the readout circuits.

pub mod amplify;
pub mod circuit;
pub mod prep;
pub mod readout;

pub use amplify::{aa_operator_spectrum, AaSpectrum, GroverIterate, Preparation};
pub use circuit::{apply, Circuit, CircuitOp, RegisterUnitary};
pub use prep::{build_doubled_target, prepare_shifted_lf, prepare_slater};
pub use readout::{swap_test, swap_test_states, switch_test};
pub use crate::state::StateVector;
