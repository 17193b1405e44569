use thiserror::Error;

use crate::series::SeriesError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mode q={q} at frequency {frequency} is not below the bath cutoff {omega_c}")]
    CutoffViolation {
        q: usize,
        frequency: f64,
        omega_c: f64,
    },
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("vertex list carries net charge {0}")]
    Neutrality(i32),
    #[error("integration did not converge: {0}")]
    Integration(String),
    #[error("truncation failure: {0}")]
    Truncation(String),
    #[error("grid resolution insufficient: value moved by {deviation:e} on doubling to {grid}")]
    Resolution { grid: usize, deviation: f64 },
    #[error("Hilbert space dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

impl Error {
    /// Whether the failure comes from numerics (truncation, quadrature,
    /// resolution) rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Integration(_) | Error::Truncation(_) | Error::Resolution { .. } => true,
            Error::Series(e) => matches!(
                e,
                SeriesError::Truncation { .. }
                    | SeriesError::WindowTooLarge { .. }
                    | SeriesError::NonFinite(_)
                    | SeriesError::Divergence(_)
            ),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
