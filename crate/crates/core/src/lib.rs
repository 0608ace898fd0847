//! Frequency-resolved two-photon interference and time-delay estimation.
//!
//! Two photons with a common spectrum and a relative delay meet on a
//! balanced beam splitter; detectors record both the exit channel and the
//! frequency of each photon. This crate provides the detection
//! probabilities, the Fisher information those measurements carry about the
//! delay, a brute-force discrete-mode verifier, and a Monte Carlo sampler
//! with a maximum-likelihood estimator.

pub mod error;
pub mod fisher;
pub mod interference;
pub mod oracle;
pub mod quadrature;
pub mod simulation;
pub mod spectrum;

pub use error::{Error, Result};
pub use interference::{Channel, DetectionEvent, ExperimentBuilder, ExperimentConfig};
pub use spectrum::{GaussianSpectrum, Spectrum, SpectrumKind, TabulatedSpectrum};
