use thiserror::Error;

/// Errors raised by the factorization library.
#[derive(Debug, Error)]
pub enum DbfError {
    #[error("entry at ({row}, {col}) is {value}, expected +1 or -1")]
    NotSign { row: usize, col: usize, value: f64 },

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("declared shape overflows addressable memory")]
    ShapeOverflow,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible budget: floor needs {floor_bits} bits but target allows {budget_bits:.1} (deficit {deficit:.1} bits)")]
    InfeasibleBudget {
        floor_bits: u64,
        budget_bits: f64,
        deficit: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DbfError>;

pub(crate) fn shape_err(msg: impl Into<String>) -> DbfError {
    DbfError::Shape(msg.into())
}
