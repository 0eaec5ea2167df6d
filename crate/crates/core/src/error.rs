use thiserror::Error;

pub type Result<T> = std::result::Result<T, QsvdError>;

#[derive(Debug, Error)]
pub enum QsvdError {
    #[error("invalid bipartition: n_qubits = {n_qubits}, n_a = {n_a} (both halves need at least one qubit)")]
    InvalidBipartition { n_qubits: usize, n_a: usize },

    #[error("amplitude vector length {0} is not a power of two >= 4")]
    BadLength(usize),

    #[error("amplitude vector has zero norm")]
    ZeroVector,

    #[error("state norm {0} is not within 1e-6 of 1; pass renormalize = true to accept it")]
    NotNormalized(f64),

    #[error("qubit index {qubit} out of range for a {n_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("two-qubit gate needs distinct qubits, got {0} twice")]
    RepeatedQubit(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parameter vector has length {got}, expected {expected}")]
    ParamLength { expected: usize, got: usize },

    #[error("shots must be at least 1")]
    ZeroShots,

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("coincidence weight {weight:.6} is below 0.5; the circuit is not trained (cost {cost:.3e})")]
    Untrained { weight: f64, cost: f64 },

    #[error("circuit cost {cost:.3e} exceeds tolerance {tolerance:.3e}; refusing to run the protocol")]
    CostAboveTolerance { cost: f64, tolerance: f64 },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("malformed state file: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
