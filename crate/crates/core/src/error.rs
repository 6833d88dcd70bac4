use thiserror::Error;

/// Errors produced by the model, builders, solvers and propagators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit: {what} (requested {requested}, limit {limit})")]
    Resource {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("eigensolver failed in sector M={sector} (2j={two_j}): {reason}")]
    Numeric { two_j: u32, sector: i32, reason: String },

    #[error("defective chain: lambda_N coincides with lambda_{index} inside the recursion")]
    DefectiveChain { index: usize },

    #[error("density matrix is not positive: eigenvalue {eigenvalue:.3e} below {threshold:.1e}")]
    Positivity { eigenvalue: f64, threshold: f64 },

    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
