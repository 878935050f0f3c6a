use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid machine: {0}")]
    InvalidMachine(String),

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("enumeration needs {required} table entries, cap is {cap}")]
    EnumerationCapExceeded { required: u128, cap: usize },

    #[error("mixed-state construction exceeded {cap} beliefs")]
    BeliefCapExceeded { cap: usize },

    #[error("mixed-state construction found {0} recurrent components")]
    AmbiguousRecurrence(usize),

    #[error("no synchronizing word of length {horizon} for forward state `{state}`")]
    NotSynchronized { horizon: usize, state: String },

    #[error("negative probability {0:e}")]
    NegativeProbability(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("trace is not one (got {0})")]
    NotUnitTrace(f64),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Kraus operators are not complete (defect {0:e})")]
    NotTracePreserving(f64),

    #[error("support of the first state is not contained in the second")]
    SupportViolation,

    #[error("Petz recovery failed on the output support (defect {0:e})")]
    SingularOutput(f64),

    #[error("generic combination stays degenerate (spectral gap {0:e})")]
    DegenerateGeneric(f64),

    #[error("machine is not unifilar")]
    NotUnifilar,

    #[error("not a forward epsilon-machine: {0}")]
    NotEpsilonMachine(String),

    #[error("not a reverse epsilon-machine: {0}")]
    NotReverseEpsilonMachine(String),

    #[error("operation expects a {expected} q-machine")]
    WrongKind { expected: &'static str },

    #[error("q-machine invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid Renyi order {0}")]
    InvalidAlpha(f64),

    #[error("verdicts disagree: {0}")]
    VerdictMismatch(String),

    #[error("machines disagree on word probabilities (max deviation {0:e})")]
    ProcessMismatch(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Malformed or invalid input data.
    InvalidInput,
    /// Input is valid but violates an operation's structural precondition.
    Precondition,
    /// Numerical failure inside the library.
    Internal,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            InvalidMachine(_) | UnknownSymbol(_) | NegativeProbability(_) | InvalidDistribution(_)
            | InvalidPartition(_) | NotHermitian(_) | NotPositive(_) | NotUnitTrace(_)
            | DimensionMismatch { .. } | NotTracePreserving(_) | InvalidAlpha(_) | Parse(_) | Io(_)
            | Json(_) => ErrorCategory::InvalidInput,
            EnumerationCapExceeded { .. } | BeliefCapExceeded { .. } | NotSynchronized { .. }
            | SupportViolation | SingularOutput(_) | NotUnifilar | NotEpsilonMachine(_)
            | NotReverseEpsilonMachine(_) | WrongKind { .. } => ErrorCategory::Precondition,
            NonConvergence { .. } | AmbiguousRecurrence(_) | DegenerateGeneric(_) | InvariantViolation(_)
            | VerdictMismatch(_) | ProcessMismatch(_) => ErrorCategory::Internal,
        }
    }

    /// Process exit code: 1 internal, 2 invalid input, 3 precondition.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            ErrorCategory::Internal => 1,
            ErrorCategory::InvalidInput => 2,
            ErrorCategory::Precondition => 3,
        }
    }
}
