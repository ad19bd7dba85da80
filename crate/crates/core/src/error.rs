use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is singular to working precision (rcond {rcond:e})")]
    Singular { rcond: f64 },

    /// X(t) in the Hamiltonian flow lost invertibility, which means the
    /// propagated value is not finite.
    #[error("finiteness violation in mode {mode}{}: X(t) has rcond {rcond:e}",
        .step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    Finiteness {
        mode: usize,
        step: Option<usize>,
        rcond: f64,
    },

    #[error("index {index} out of range for {len} forms")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("witness set is empty")]
    EmptyWitnesses,

    #[error("subset is empty")]
    EmptySubset,

    #[error("brute force would enumerate {subsets} subsets (limit {limit})")]
    BudgetExceeded { subsets: u128, limit: u128 },

    #[error("placement cannot provide {requested} basis functions: {reason}")]
    Placement { requested: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            got,
        }
    }
}
