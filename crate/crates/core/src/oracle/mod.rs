//! Independent verification oracles.
//!
//! Two checks that share no code path with the analytic solvers: a
//! dense-grid quadratic-program optimizer that converges to the decay rate
//! from above as the constraint grid refines, and a Monte Carlo simulator
//! of the many-sources system that estimates overflow probabilities
//! directly from the queue representation.

mod grid;
mod mc;

pub use grid::{grid_qp_decay, GridOracleConfig, GridOracleResult};
pub use mc::{mc_decay_fit, mc_overflow, DecaySlope, McConfig, McEstimate};

use crate::priority::PrioritySystem;
use crate::tandem::TandemSystem;

/// A system either oracle can verify.
#[derive(Debug, Clone, Copy)]
pub enum SystemRef<'a> {
    Tandem(&'a TandemSystem),
    Priority(&'a PrioritySystem),
}
