//! Zeros of stationary centered Gaussian processes on the real line.
//!
//! The crate evaluates the k-point intensities of the zero set through
//! divided-difference Kac–Rice formulas, the two-point excess function and
//! the variance constant, and provides a circulant-embedding simulator for
//! Monte Carlo cross-checks.
//!
//! Correlation functions are assumed normalized: `κ(0) = 1`, `κ''(0) = -1`.

pub mod correlation_models;
pub mod ddouble;
pub mod divided_differences;
pub mod error;
pub mod gaussian_conditioning;
pub mod kac_rice_densities;
pub mod pair_correlation_variance;
pub mod partitions_combinatorics;
pub mod process_simulation;
pub mod quadrature;
pub mod rng;

pub use correlation_models::{CorrelationModel, SpectralDensity};
pub use ddouble::DD;
pub use error::{Error, ErrorCategory, Result};
pub use gaussian_conditioning::{KacRiceContext, MonteCarloSpec};
pub use kac_rice_densities::{DensityResult, VanishingConstant};
pub use pair_correlation_variance::{QuadratureSpec, TestFunction};
pub use partitions_combinatorics::IndexPartition;
pub use process_simulation::{SimulationSpec, ZeroSample};
