use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty matrix")]
    EmptyMatrix,

    #[error("non-finite entry at {0}")]
    NonFinite(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("gram determinant {value:e} is negative beyond round-off (scale {scale:e})")]
    NegativeGramDeterminant { value: f64, scale: f64 },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid coefficient vector: {0}")]
    InvalidCoefficients(String),

    #[error("enumeration budget exceeded: {required} items required, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },

    #[error("invalid reduction: {0}")]
    InvalidReduction(String),

    #[error("source vectors do not span the ambient space (rank {rank} of {ambient})")]
    NotSpanning { rank: usize, ambient: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("code length k={k} is below U*n={required}")]
    CodeTooShort { k: usize, required: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero codeword produced at level {0}")]
    ZeroCodeword(usize),

    #[error("not enough usable points for a fit: {usable} (need at least 2 with distinct N)")]
    InsufficientFitData { usable: usize },

    #[error("curve grids differ: {0}")]
    GridMismatch(String),

    #[error("schema violation at {field}: {message}")]
    Schema { field: String, message: String },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
