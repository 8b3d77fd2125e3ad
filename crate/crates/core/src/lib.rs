//! Simulation and verification lab for the stable-regenerative double-stable
//! model.
//!
//! * [`renewal`]: the inter-renewal law, exact renewal tables and samplers,
//! * [`process`]: the truncated series representation, the tail process and
//!   the limiting point process,
//! * [`estimators`]: reductions over replications and the exact oracles,
//! * [`replicate`]: deterministic parallel replication.

pub mod error;
pub mod estimators;
pub mod process;
pub mod renewal;
pub mod replicate;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
