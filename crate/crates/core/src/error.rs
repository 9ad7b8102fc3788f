use thiserror::Error;

/// Failures reported by the simulator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operator is not Hermitian (max |H - H^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported qubit count: {0}")]
    UnsupportedCount(String),

    #[error("degenerate geometry: qubits {0} and {1} coincide")]
    DegenerateGeometry(usize, usize),

    #[error("pulse width must be non-negative, got {0:e} s")]
    NegativeWidth(f64),

    #[error("qubit index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("invalid exchange-sequence file, line {line}: {reason}")]
    SequenceFileInvalid { line: usize, reason: String },

    #[error("gate synthesis failed: {0}")]
    SynthesisFailed(String),

    #[error("repetition count must be at least 1")]
    NonPositiveRepetitions,

    #[error("{ops} elementary operations do not fit into {intervals} intervals")]
    TooFewIntervals { ops: usize, intervals: usize },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("incomplete series: {0}")]
    IncompleteSeries(String),

    #[error("incomplete grid: {0}")]
    IncompleteGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge")]
    EigenNoConvergence,
}

pub type Result<T> = std::result::Result<T, Error>;
