use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input outside the mathematical domain of a function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// Structurally invalid argument (wrong size, empty list, bad parameter).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A numerical routine failed (e.g. eigen-solver did not converge).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The correlation matrix is too close to singular for the series engine.
    #[error("ill-conditioned correlation matrix: det = {det:e} (threshold {threshold:e})")]
    IllConditioned { det: f64, threshold: f64 },

    /// The truncated multi-index series did not settle before the degree cap.
    #[error(
        "series did not converge by degree {cap}: last partial sums {previous:e} -> {last:e}"
    )]
    Convergence { cap: usize, previous: f64, last: f64 },

    /// Invalid configuration value; names the offending field.
    #[error("invalid config field `{field}`: {detail}")]
    Config { field: String, detail: String },
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { func, detail: detail.into() }
    }

    pub(crate) fn config(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Config { field: field.into(), detail: detail.into() }
    }
}
