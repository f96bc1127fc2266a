//! Pooled-quantile efficient estimation for linear quantile regression.
//!
//! Fits the classical check-loss estimator at a grid of quantile levels,
//! estimates the conditional density through the derivative of the
//! coefficient path, assembles the pooled information system across levels,
//! and applies a single Newton-type correction along the estimated efficient
//! score. The corrected estimator (EFF) pools information across all grid
//! levels; a single-level variant (SEF) corrects with each level's own score;
//! the uncorrected fit (TQE) is the baseline. Simulation designs, a Monte
//! Carlo harness, pairs-bootstrap inference, and brute-force oracles round
//! out the library.
//!
//! Everything numeric is generic over [`Scalar`] (`f32`/`f64`); the aliases
//! below fix `f64`, which is what the command line uses.
//!
//! ```
//! use qreff_core::{estimator, sim, Dataset, FitConfig, QuantileGrid};
//!
//! let data: Dataset = sim::generate(sim::SimModel::M1, 400, 7);
//! let grid = QuantileGrid::new(vec![0.5, 0.7])?;
//! let report = estimator::estimate(&data, &grid, &FitConfig::default())?;
//! // corrected slope at the median, with its estimated variance bound
//! let eff = report.eff(0, 1);
//! let bound = report.sigma2_hat(0, 1);
//! assert!((eff - 1.0).abs() < 0.5 && bound > 0.0);
//! # Ok::<(), qreff_core::Error>(())
//! ```

pub mod data;
pub mod density;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod normal;
pub mod oracle;
pub mod pinball;
pub mod scalar;
pub mod score;
pub mod sim;

pub use error::Error;
pub use estimator::EstimatorKind;
pub use oracle::OracleReport;
pub use scalar::Scalar;
pub use sim::SimModel;

/// Default precision used by the CLI and the concrete aliases.
pub type Real = f64;

pub type Dataset = data::Dataset<Real>;
pub type QuantileGrid = data::QuantileGrid<Real>;
pub type CoefficientSet = data::CoefficientSet<Real>;
pub type FitConfig = data::FitConfig<Real>;
pub type BandwidthRule = data::BandwidthRule<Real>;
pub type PinballFit = pinball::PinballFit<Real>;
pub type DensityEstimates = density::DensityEstimates<Real>;
pub type ScoreSystem = score::ScoreSystem<Real>;
pub type EstimateReport = estimator::EstimateReport<Real>;
pub type BootstrapReport = estimator::BootstrapReport<Real>;
pub type MonteCarloSummary = sim::MonteCarloSummary<Real>;
pub type Mat = linalg::Mat<Real>;
