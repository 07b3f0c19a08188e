use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("decay rate must be at least {min}, got {value}")]
    DecayRate { value: f64, min: f64 },

    #[error("{what} out of range: {value} (limit {limit})")]
    OutOfRange {
        what: &'static str,
        value: u64,
        limit: u64,
    },

    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: u32, right: u32 },

    #[error("{qubits} qubits exceeds the simulator capacity of {max}")]
    Capacity { qubits: u32, max: u32 },

    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("invalid circuit operation: {0}")]
    InvalidOp(String),

    #[error("overlap matrix is singular: basis functions {first} and {second} are (nearly) identical")]
    SingularOverlap { first: usize, second: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}
