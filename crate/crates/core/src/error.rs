use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    #[error("circulant embedding is not nonnegative: minimal eigenvalue {min_eigenvalue:e}")]
    Embedding { min_eigenvalue: f64 },

    /// A point fell outside the tabulated window of a field.
    #[error("window error: {value} lies outside [{lo}, {hi}]")]
    Window { value: f64, lo: f64, hi: f64 },

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("singular integral: {0}")]
    SingularIntegral(String),

    #[error("quadrature did not converge: estimated error {error:e} on [{a}, {b}]")]
    Quadrature { a: f64, b: f64, error: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
