use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("design matrix is rank deficient; use a penalized estimator")]
    SingularDesign,

    #[error("matrix powers left the representable range")]
    Overflow,

    #[error("{0} did not converge")]
    NonConvergence(&'static str),

    #[error("model is not stationary (spectral radius {rho:.6})")]
    NotStationary { rho: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("all penalty weights are infinite")]
    AllWeightsInfinite,

    #[error("{selected} variables selected with only {t} observations")]
    TooManySelected { selected: usize, t: usize },

    #[error("dataset carries no innovations")]
    MissingInnovations,

    #[error("sub-Gram matrix over the true support is singular")]
    SingularSubGram,

    #[error("restricted eigenvalue is zero")]
    ZeroKappa,

    #[error("unknown experiment/dimension combination: {0}")]
    UnknownCombination(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
