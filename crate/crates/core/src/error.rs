use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid level index {index} for a {levels}-level site")]
    InvalidLevel { index: usize, levels: usize },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("singular parameter: {0}")]
    SingularParameter(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integrator step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {0} steps")]
    TooManySteps(usize),

    #[error("quadrature did not converge (estimated error {error:.3e}, tolerance {tolerance:.3e})")]
    Quadrature { error: f64, tolerance: f64 },

    #[error("series truncation: {0}")]
    Truncation(String),

    #[error("positivity violated: minimum eigenvalue {min_eigenvalue:.3e} at t = {t:.6e}")]
    Positivity { min_eigenvalue: f64, t: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("empty time window [{start}, {end}]")]
    EmptyWindow { start: f64, end: f64 },

    #[error("{0} self-test checks failed")]
    SelfTest(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors that come from bad user input rather than from a numerical failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidParameter(_)
                | Error::SingularParameter(_)
                | Error::InvalidDimension(_)
                | Error::InvalidLevel { .. }
                | Error::Io { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
