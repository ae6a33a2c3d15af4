use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular factorization ({context}): relative residual {residual:e}")]
    SingularFactorization { context: String, residual: f64 },

    #[error(
        "extension block of interface {interface:?} is singular at omega' = {omega:e} rad/s; \
         choose a different extension frequency"
    )]
    SingularExtension { interface: (usize, usize), omega: f64 },

    #[error(
        "reduced system is singular at omega = {omega:e} rad/s (pivot ratio {pivot_ratio:e}); \
         the Galerkin projection lost inf-sup stability"
    )]
    ReducedSingular { omega: f64, pivot_ratio: f64 },

    #[error("eigen iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("dense decomposition failed: {0}")]
    Dense(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }

    /// True for failures caused by the numerics rather than the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularFactorization { .. }
                | Error::SingularExtension { .. }
                | Error::ReducedSingular { .. }
                | Error::NoConvergence { .. }
                | Error::Dense(_)
        )
    }
}
