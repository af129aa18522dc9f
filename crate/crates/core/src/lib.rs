//! Discrete-time quantum walks on the line: lazy three-state walks, normal
//! two-state walks, and their classical counterparts.
//!
//! - [`coin`] builds validated coin operators.
//! - [`walk`] evolves states in position space and provides a path-sum oracle.
//! - [`spectral`] analyses the momentum-space evolution operator.
//! - [`metrics`] computes moments, occupancy metrics and entanglement.
//! - [`classical`] holds classical random-walk baselines.

pub mod classical;
pub mod coin;
pub mod distribution;
pub mod error;
pub mod metrics;
pub mod spectral;
pub mod walk;

pub use coin::CoinOperator;
pub use distribution::ProbabilityDistribution;
pub use error::{Result, WalkError};
pub use walk::{ShiftKind, WalkSpec, WalkState};
