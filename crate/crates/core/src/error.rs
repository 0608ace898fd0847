use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("quadrature did not converge: estimated error {estimate:.3e} (target {target:.3e}) after {panels} panels")]
    Quadrature {
        estimate: f64,
        target: f64,
        panels: usize,
    },

    #[error("oracle grid too coarse: bin spacing {spacing:.4e} exceeds {limit:.4e}")]
    GridTooCoarse { spacing: f64, limit: f64 },

    #[error("finite-difference step {step:.3e} exceeds {limit:.3e}")]
    StepTooLarge { step: f64, limit: f64 },

    #[error("unidentifiable: {0}")]
    Unidentifiable(String),
}

impl Error {
    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Quadrature { .. } | Error::Unidentifiable(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
