use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("form is not homogeneous: expected degree {expected}, found a term of degree {found}")]
    Inhomogeneous { expected: u32, found: u32 },

    #[error("variable x{index} is out of range for a form in {n_vars} variables")]
    VariableOutOfRange { index: usize, n_vars: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("the zero polynomial is not accepted here")]
    ZeroForm,

    #[error("pencil vector must not be all zero")]
    ZeroPencil,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An interval comparison could not be decided at the working precision.
    #[error("precision failure: {0}")]
    Precision(String),

    #[error("column cap exceeded: more than {cap} columns; shrink theta or P")]
    ColumnCap { cap: usize },

    #[error("enumeration cap exceeded: {what} needs {needed} points, cap is {cap}")]
    EnumerationCap { what: String, needed: String, cap: String },

    #[error("degenerate system: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
