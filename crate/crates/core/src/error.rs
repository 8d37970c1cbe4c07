use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the library.
///
/// Variants split into validation failures (bad input, bad files) and
/// numerical failures (factorizations, quadrature, divergence); see
/// [`Error::is_numerical`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is rank deficient: numerical rank {rank} < {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("auxiliary function is not invertible: {0}")]
    NotInvertible(String),

    #[error("non-finite iterate at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("problem too large for brute force: {0}")]
    TooLarge(String),

    #[error("problem has no noise variance")]
    MissingNoiseVariance,

    #[error("invalid configuration: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::RankDeficient { .. }
                | Error::QuadratureFailure(_)
                | Error::NotInvertible(_)
                | Error::NonFiniteIterate { .. }
                | Error::DegenerateWeights(_)
        )
    }

    /// Process exit code used by the CLI: 3 for numerical failures, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            3
        } else {
            2
        }
    }
}
