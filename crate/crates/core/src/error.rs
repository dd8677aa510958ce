use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: deviation {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },
    #[error("matrix is not positive semidefinite: eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },
    #[error("{routine} did not converge within {sweeps} sweeps")]
    ConvergenceFailure { routine: &'static str, sweeps: usize },
    #[error("invalid matrix shape: {0}")]
    InvalidShape(String),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("state vector is not normalized: norm {norm:.12}")]
    NotNormalized { norm: f64 },
    #[error("density matrix trace {trace:.12} differs from 1")]
    TraceNotUnit { trace: f64 },
    #[error("rank {rank} is outside 1..={dim}")]
    BadRank { rank: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("POVM elements do not sum to identity (deviation {deviation:.3e})")]
    IncompletePovm { deviation: f64 },
    #[error("channel is not trace preserving (deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },
    #[error("state left the physical set by {drift:.3e}; integration step too large")]
    StepTooLarge { drift: f64 },
    #[error("amplitude shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid node pair: {0}")]
    InvalidPair(String),
    #[error("need at least 2 non-source nodes, found {found}")]
    TooFewNodes { found: usize },
    #[error("unknown link `{0}`")]
    UnknownLink(String),
    #[error("need at least {required} link(s), found {found}")]
    TooFewLinks { required: usize, found: usize },
    #[error("tensor diagram error: {0}")]
    DanglingBondMismatch(String),
    #[error("{field}: {message}")]
    Spec { field: String, message: String },
}

impl Error {
    pub(crate) fn spec(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Spec {
            field: field.into(),
            message: message.into(),
        }
    }
}
