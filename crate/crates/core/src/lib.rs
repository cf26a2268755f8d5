//! Deterministic equivalents and capacity-achieving input covariances for
//! large MIMO multiple-access channels with two-sided correlation and
//! line-of-sight components, with Monte-Carlo validation.

pub mod channel;
pub mod detequiv;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod optimizer;
pub mod scenario;

pub use error::{Error, Result};
