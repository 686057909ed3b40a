use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("derivative order {requested} unavailable (model provides up to {available})")]
    OrderUnavailable { requested: usize, available: usize },
    #[error("degenerate spectral density: {0}")]
    DegenerateDensity(String),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("matrix is not positive semi-definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("cluster separation {eta} is below 1")]
    SeparationTooSmall { eta: f64 },
    #[error("size {n} exceeds the cap {max}")]
    SizeCap { n: usize, max: usize },
    #[error("partitions are over different ground sets ({0} vs {1})")]
    GroundSetMismatch(usize, usize),
    #[error("1 - κ(z)² is numerically zero at z = {z}")]
    NearSingular { z: f64 },
    #[error("quadrature did not converge (estimate {estimate:e}, error {error:e})")]
    QuadratureNotConverged { estimate: f64, error: f64 },
    #[error("circulant embedding failed: {0}")]
    EmbeddingFailure(String),
    #[error("simulation window too small: {0}")]
    WindowTooSmall(String),
    #[error("intervals overlap or leave the window: {0}")]
    IntervalsOverlap(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Coarse failure class, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Domain,
    Numerics,
    Config,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::DegenerateConfiguration(_)
            | Error::SeparationTooSmall { .. }
            | Error::WindowTooSmall(_)
            | Error::IntervalsOverlap(_)
            | Error::OrderUnavailable { .. }
            | Error::SizeCap { .. }
            | Error::GroundSetMismatch(..)
            | Error::DegenerateDensity(_) => ErrorCategory::Domain,
            Error::NotPsd { .. }
            | Error::NearSingular { .. }
            | Error::QuadratureNotConverged { .. }
            | Error::EmbeddingFailure(_) => ErrorCategory::Numerics,
            Error::InvalidInput(_) => ErrorCategory::Config,
        }
    }
}
