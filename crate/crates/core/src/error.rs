use thiserror::Error;

/// Errors raised by model construction, the solvers and the estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive semidefinite (minimum eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("link ({l},{k}): {source}")]
    Link {
        l: usize,
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fixed point did not converge after {iterations} sweeps (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("ill-conditioned matrix: {0}")]
    Conditioning(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("stochastic optimizer diverged: {0}")]
    Divergence(String),
}

impl Error {
    /// Attaches a 1-based link location to an error.
    pub fn at_link(self, l: usize, k: usize) -> Self {
        Error::Link {
            l: l + 1,
            k: k + 1,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
