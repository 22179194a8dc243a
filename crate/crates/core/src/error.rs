use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor shapes are incompatible for the requested operation.
    #[error("dimension mismatch in {context}: {lhs:?} vs {rhs:?}")]
    DimensionMismatch {
        context: String,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    /// Input outside the operation's domain (empty tensor, bad index, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative numerical procedure failed to reach its tolerance.
    #[error("numerical error in {context}: achieved {achieved:e}, required {required:e}")]
    Numerical {
        context: String,
        achieved: f64,
        required: f64,
    },

    /// A configured resource budget (memory, dense size limit) was exceeded.
    #[error("resource limit exceeded{}: {what}", iteration.map(|i| format!(" at iteration {i}")).unwrap_or_default())]
    Resource {
        what: String,
        iteration: Option<usize>,
    },

    /// LAPACK / BLAS backend failure.
    #[error("linear algebra backend failure: {0}")]
    Linalg(String),

    /// Invalid configuration (bad field values, missing reference, ...).
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub fn dims(context: impl Into<String>, lhs: &[usize], rhs: &[usize]) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        }
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
