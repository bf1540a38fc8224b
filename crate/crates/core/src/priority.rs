//! Two-class strict-priority queue: lower bound on the decay rate of
//! low-priority buffer overflow.
//!
//! The total queue behaves like a FIFO queue at the full link rate, and the
//! high-priority queue ignores the low class entirely; differencing the two
//! gives the low-priority backlog, exactly as the two-node tandem analysis
//! differences total and first queue. The resulting bound is
//!
//! ```text
//! J_p ≥ inf_{t>0} sup_{s ∈ (0,t]} Υ_p(s,t)
//! ```
//!
//! where `Υ_p(s,t)` is the joint Gaussian cost of pushing `b + ct` through
//! the link over `(−t,0]` while high-priority traffic alone covers
//! `b + c(t−s)` over `(−t,−s]` together with the whole low-priority load.
//! Unlike the tandem case, means cannot be centered away here; `Υ_p` is
//! evaluated as a two-dimensional quadrant problem with explicit means.
//!
//! Two weaker published bounds are computed for comparison: restricting the
//! inner supremum to `s = t` (the empty-buffer heuristic) and replacing it
//! by an infimum. They are ordered below the main bound by construction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fifo::{fifo_decay, Regime};
use crate::gauss::{quadrant_rate, QuadrantProblem};
use crate::numerics::{maximize_scalar, minimize_scalar, HiPolicy, DEFAULT_REL_TOL};
use crate::variance::{SourceModel, VarianceKind, VarianceModel};

use nalgebra::{DMatrix, DVector};

/// Sample count for the universally-quantified regime test.
const REGIME_GRID: usize = 512;

/// A strict-priority link shared by two independent Gaussian classes.
#[derive(Debug, Clone)]
pub struct PrioritySystem {
    pub buffer: f64,
    pub link_rate: f64,
    pub high: SourceModel,
    pub low: SourceModel,
}

impl PrioritySystem {
    pub fn new(buffer: f64, link_rate: f64, high: SourceModel, low: SourceModel) -> Result<Self> {
        if !(buffer > 0.0) {
            return Err(Error::param("b", format!("buffer threshold must be positive, got {buffer}")));
        }
        if !(link_rate > 0.0) {
            return Err(Error::param("c", format!("link rate must be positive, got {link_rate}")));
        }
        let mu = high.mean_rate + low.mean_rate;
        if mu >= link_rate {
            return Err(Error::Unstable(format!(
                "aggregate mean rate {mu} reaches the link rate {link_rate}"
            )));
        }
        Ok(Self { buffer, link_rate, high, low })
    }

    /// Fold `nα` low-priority sources into `n` by scaling the low class.
    pub fn with_low_count_ratio(buffer: f64, link_rate: f64, high: SourceModel, low: SourceModel, alpha: f64) -> Result<Self> {
        let scaled = SourceModel {
            variance: low.variance.scaled(alpha)?,
            mean_rate: low.mean_rate * alpha,
        };
        Self::new(buffer, link_rate, high, scaled)
    }

    pub fn total_mean(&self) -> f64 {
        self.high.mean_rate + self.low.mean_rate
    }

    /// Aggregate source seen by the total queue.
    pub fn aggregate(&self) -> SourceModel {
        SourceModel {
            variance: VarianceModel::sum(self.high.variance.clone(), self.low.variance.clone()),
            mean_rate: self.total_mean(),
        }
    }
}

/// Report of [`priority_decay`].
#[derive(Debug, Clone, Serialize)]
pub struct PriorityReport {
    /// Main lower bound on the decay rate (`inf sup`).
    pub decay_bound: f64,
    pub regime: Regime,
    pub t_star: f64,
    /// Inner optimizer in regime B; `None` in regime A.
    pub s_star: Option<f64>,
    /// Comparison bound restricting the inner optimization to `s = t`.
    pub equal_time_bound: f64,
    /// Comparison bound replacing the inner supremum by an infimum.
    pub double_inf_bound: f64,
    /// Closed form when both classes are Brownian.
    pub closed_form: Option<f64>,
    /// FIFO decay rate of the total queue at the full link rate.
    pub fifo_value: f64,
    pub fifo_t: f64,
}

/// `k_p(s,t) = E(A_h(s) | A_h(t) + A_ℓ(t) = b + ct)`, in original units.
pub fn kp_func(psys: &PrioritySystem, s: f64, t: f64) -> f64 {
    let vh = &psys.high.variance;
    let v_t = vh.value(t) + psys.low.variance.value(t);
    let mu = psys.total_mean();
    psys.high.mean_rate * s
        + vh.gamma(s, t) / v_t * (psys.buffer + (psys.link_rate - mu) * t)
}

/// Joint cost of the overflow requirement at `(s,t)`, `0 < s ≤ t`.
pub fn upsilon_p(psys: &PrioritySystem, s: f64, t: f64) -> Result<f64> {
    if !(s > 0.0 && s <= t) {
        return Err(Error::param("s", format!("need 0 < s <= t, got s = {s}, t = {t}")));
    }
    let vh = &psys.high.variance;
    let vl = &psys.low.variance;
    let (mu_h, mu_l) = (psys.high.mean_rate, psys.low.mean_rate);
    let (b, c) = (psys.buffer, psys.link_rate);
    let vl_t = vl.value(t);
    let mean = DVector::from_row_slice(&[(mu_h + mu_l) * t, mu_h * (t - s) + mu_l * t]);
    let cov = DMatrix::from_row_slice(
        2,
        2,
        &[
            vh.value(t) + vl_t,
            vh.gamma(t - s, t) + vl_t,
            vh.gamma(t - s, t) + vl_t,
            vh.value(t - s) + vl_t,
        ],
    );
    let thresholds = DVector::from_row_slice(&[b + c * t, b + c * (t - s)]);
    Ok(quadrant_rate(&QuadrantProblem::new(mean, cov, thresholds)?)?.value)
}

/// Regime test: does `k_p(s, t_F) < cs` hold for every `s ∈ (0, t_F]`?
/// Sampled on a grid plus the analytic `s → 0` limit.
fn empty_buffer_regime(psys: &PrioritySystem, t_fifo: f64) -> bool {
    let c = psys.link_rate;
    let vh = &psys.high.variance;
    let v_t = vh.value(t_fifo) + psys.low.variance.value(t_fifo);
    let mu = psys.total_mean();
    let level = psys.buffer + (c - mu) * t_fifo;
    // s -> 0 limit of k_p(s,t)/s via the derivative of Γ_h(·,t)
    let dvh0 = vh.dv_at_zero();
    if dvh0.is_infinite() {
        return false;
    }
    let limit = psys.high.mean_rate + 0.5 * (vh.dv(t_fifo) + dvh0) * level / v_t;
    if limit >= c {
        return false;
    }
    for i in 1..=REGIME_GRID {
        let s = t_fifo * i as f64 / REGIME_GRID as f64;
        if kp_func(psys, s, t_fifo) >= c * s {
            return false;
        }
    }
    true
}

/// Solve the priority system: regime, main bound and the two comparison
/// bounds, plus the Brownian closed form when it applies.
pub fn priority_decay(psys: &PrioritySystem) -> Result<PriorityReport> {
    let agg = psys.aggregate();
    let fifo = fifo_decay(psys.buffer, psys.link_rate, &agg)?;
    let regime_a = empty_buffer_regime(psys, fifo.t_star);

    let ups = |s: f64, t: f64| upsilon_p(psys, s, t).unwrap_or(f64::INFINITY);

    let (decay_bound, regime, t_star, s_star) = if regime_a {
        (fifo.decay_rate, Regime::A, fifo.t_star, None)
    } else {
        let inner = |t: f64| -> f64 {
            maximize_scalar(|s| ups(s, t), 0.0, t, DEFAULT_REL_TOL)
                .map(|r| r.value)
                .unwrap_or(f64::INFINITY)
        };
        let outer = minimize_scalar(inner, 0.0, HiPolicy::Expand, DEFAULT_REL_TOL)?;
        let at_t = maximize_scalar(|s| ups(s, outer.arg), 0.0, outer.arg, DEFAULT_REL_TOL)?;
        (at_t.value, Regime::B, outer.arg, Some(at_t.arg))
    };

    let equal_time = minimize_scalar(|t| ups(t, t), 0.0, HiPolicy::Expand, DEFAULT_REL_TOL)?;
    let double_inf = minimize_scalar(
        |t| {
            minimize_scalar(|s| ups(s, t), 0.0, HiPolicy::Fixed(t), DEFAULT_REL_TOL)
                .map(|r| r.value)
                .unwrap_or(f64::INFINITY)
        },
        0.0,
        HiPolicy::Expand,
        DEFAULT_REL_TOL,
    )?;

    let closed_form = priority_brownian(psys).ok();

    Ok(PriorityReport {
        decay_bound,
        regime,
        t_star,
        s_star,
        equal_time_bound: equal_time.value,
        double_inf_bound: double_inf.value,
        closed_form,
        fifo_value: fifo.decay_rate,
        fifo_t: fifo.t_star,
    })
}

/// Closed-form decay rate when both classes are Brownian
/// (`v_h(t) = λ_h t`, `v_ℓ(t) = λ_ℓ t`).
///
/// With `Ξ = sqrt(μ_ℓ² + (λ_ℓ/λ_h)(c−μ_h)²)`, the empty-buffer regime
/// applies iff `(λ_h−λ_ℓ)c ≤ λ_h(μ_h+2μ_ℓ) − λ_ℓμ_h`, giving
/// `J = 2b(c−μ)/λ`; otherwise `J = b(Ξ−μ_ℓ)/λ_ℓ`. The two branches agree
/// on the boundary.
pub fn priority_brownian(psys: &PrioritySystem) -> Result<f64> {
    let (lh, ll) = match (psys.high.variance.kind(), psys.low.variance.kind()) {
        (VarianceKind::Brownian { sigma2: lh }, VarianceKind::Brownian { sigma2: ll }) => (*lh, *ll),
        _ => {
            return Err(Error::param("model", "closed form requires Brownian variance for both classes"));
        }
    };
    let (mu_h, mu_l) = (psys.high.mean_rate, psys.low.mean_rate);
    let (b, c) = (psys.buffer, psys.link_rate);
    let lam = lh + ll;
    let mu = mu_h + mu_l;
    if (lh - ll) * c <= lh * (mu_h + 2.0 * mu_l) - ll * mu_h {
        Ok(2.0 * b * (c - mu) / lam)
    } else {
        let xi = (mu_l * mu_l + ll / lh * (c - mu_h) * (c - mu_h)).sqrt();
        Ok(b * (xi - mu_l) / ll)
    }
}
