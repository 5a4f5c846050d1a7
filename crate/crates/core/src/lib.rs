//! Transfer learning in linear regression with partially shared features.
//!
//! The crate simulates a source and a target regression task that share a
//! block of common features and each carry their own task-specific block,
//! fits them with minimum-norm and least-squares solvers, evaluates the
//! closed-form expected errors, and checks the two against each other by
//! Monte Carlo.
//!
//! ```
//! use partial_transfer::model::{extend_truth, GroundTruth, LearnerConfig, Sacrifice};
//! use partial_transfer::theory::{transferring_error, ScenarioParams};
//!
//! let gt = GroundTruth::zeros(5, 5, 5, 1.0, 1.0);
//! let cfg = LearnerConfig::new(5, 5, 5, 100, 50);
//! let truth = extend_truth(&gt, &cfg, &Sacrifice::none()).unwrap();
//! let lco = transferring_error(&ScenarioParams::from_truth(&truth, &cfg)).unwrap();
//! assert!((lco.value().unwrap() - 5.0 / 89.0).abs() < 1e-12);
//! ```

pub mod config;
pub mod error;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod pipeline;
pub mod theory;

pub use error::{Error, Result};
