//! Cumulative INAR(∞) count processes (discrete-time Hawkes processes):
//! simulation, conditional least-squares estimation, sandwich-covariance
//! inference and Monte Carlo evaluation.
//!
//! ```
//! use inar_core::{estimate, model::ModelParams, simulate};
//!
//! let params = ModelParams::geometric(100.0, 0.25).unwrap();
//! let mut rng = simulate::RngStream::new(42, 1);
//! let path = simulate::simulate_path(&params, 1000, &mut rng).unwrap();
//! let fit = estimate::fit(&path, 10).unwrap();
//! assert!((fit.mu_hat - 100.0).abs() < 30.0);
//! ```

// `!(x >= t)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimate;
pub mod formats;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod simulate;

pub use error::{Error, Result};
pub use estimate::{DesignSystem, EstimateResult, ThetaVector};
pub use model::ModelParams;
pub use montecarlo::{McConfig, McSummary};
pub use simulate::{CountPath, RngStream};
