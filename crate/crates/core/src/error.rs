use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("Cholesky factorization failed after exhausting the jitter ladder")]
    FactorizationFailure,

    #[error("covariance matrix is singular")]
    SingularCovariance,

    #[error("codebook with {size} entries exceeds the cap of {cap}")]
    CodebookTooLarge { size: u128, cap: usize },

    #[error("invalid PAM order {0}: must be a power of two and at least 2")]
    InvalidPamOrder(usize),

    #[error("codebook index {index} out of range (codebook size {size})")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("transmit factors are degenerate (zero combining denominator)")]
    DegenerateFactors,

    #[error("invalid power allocation: {0}")]
    InvalidAllocation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration field '{field}': {message}")]
    InvalidConfig { field: String, message: String },

    #[error("quadratic fit is rank deficient")]
    DegenerateFit,

    #[error("block {block} at power point {point}: {source}")]
    Block {
        point: usize,
        block: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
