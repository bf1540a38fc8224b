//! Exponential decay rates of buffer-overflow probabilities for FIFO,
//! tandem and priority queues fed by many i.i.d. Gaussian sources.
//!
//! Under the many-sources scaling (`n` sources, service rates and buffers
//! proportional to `n`), overflow probabilities decay exponentially in `n`.
//! This crate computes the decay rates: exactly for the single FIFO queue,
//! and as certified lower bounds for the second queue of a two-node tandem
//! and for the low-priority class of a strict-priority link, together with
//! regime classification, tightness verification, most-probable overflow
//! paths, and two independent numerical oracles.
//!
//! Module map:
//! - [`variance`]: catalog of source variance functions and validation.
//! - [`gauss`]: finite-dimensional Gaussian rate-function minimization.
//! - [`numerics`]: deterministic scalar optimizers and the inf-sup search.
//! - [`fifo`]: single-node decay rate and most-probable path.
//! - [`tandem`]: tandem lower bound, critical rate, tightness, paths.
//! - [`priority`]: priority lower bound and comparison bounds.
//! - [`oracle`]: dense-grid QP and Monte Carlo verification.

pub mod error;
pub mod fifo;
pub mod gauss;
pub mod numerics;
pub mod oracle;
pub mod priority;
pub mod tandem;
pub mod variance;

pub use error::{Error, Result};
pub use fifo::{fifo_decay, fifo_mpp, FifoResult, Regime, SampledPath};
pub use priority::{priority_brownian, priority_decay, PriorityReport, PrioritySystem};
pub use tandem::{
    c1_critical, first_order_residuals, k_func, multi_constraint_bound, reduce_tandem,
    tandem_decay, tandem_mpp, tightness_check, upsilon, upsilon_decomposition, DecayReport,
    TandemSystem, Tightness, TightnessReport,
};
pub use variance::{
    mg_general_variance, validate_model, SourceModel, ValidationReport, VarianceKind, VarianceModel,
};
