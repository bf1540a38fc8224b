//! Single-node FIFO queue: decay rate and most-probable overflow path.
//!
//! For `n` i.i.d. Gaussian sources with mean rate `μ` and variance function
//! `v`, served at rate `nc` with threshold `nb`, the overflow probability
//! decays exponentially with rate
//!
//! ```text
//! J = inf_{t>0} (b + (c−μ)t)² / (2 v(t)).
//! ```
//!
//! The optimizing `t` is the most likely duration of the busy period that
//! precedes overflow, and the conditional shape of the input given overflow
//! is the one-constraint Gaussian conditional mean sampled by [`fifo_mpp`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauss::ConditionalPath;
use crate::numerics::{minimize_scalar, HiPolicy, DEFAULT_REL_TOL};
use crate::variance::SourceModel;

/// Which overflow geometry produced a path or report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// Single binding constraint; the upstream queue does not reshape traffic.
    A,
    /// Two binding constraints; the upstream queue delays traffic.
    B,
}

/// Decay rate of a FIFO queue and its optimizing horizon.
#[derive(Debug, Clone, Serialize)]
pub struct FifoResult {
    /// `J`, in original (uncentered) units.
    pub decay_rate: f64,
    /// Optimizing horizon `t` (the busy-period length).
    pub t_star: f64,
    /// Alternate horizons whose cost ties within tolerance.
    pub ties: Vec<f64>,
}

/// A discretized most-probable path in original units.
///
/// `f[i]` is the cumulative traffic position at time `r[i] ≤ 0` relative to
/// the overflow epoch (`f(0) = 0`), `g[i]` the analytic input rate.
#[derive(Debug, Clone, Serialize)]
pub struct SampledPath {
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub regime: Regime,
    /// Times of the pinned constraints (`t*`, and `s*` in regime B).
    pub constraint_times: Vec<f64>,
}

/// Decay rate of a FIFO queue with buffer `b` and service rate `c`.
pub fn fifo_decay(b: f64, c: f64, source: &SourceModel) -> Result<FifoResult> {
    if !(b > 0.0) {
        return Err(Error::param("b", format!("buffer threshold must be positive, got {b}")));
    }
    let cc = c - source.mean_rate;
    if cc <= 0.0 {
        return Err(Error::Unstable(format!(
            "service rate {c} does not exceed mean input rate {}",
            source.mean_rate
        )));
    }
    let v = &source.variance;
    let cost = |t: f64| {
        // the closed forms lose all significance as t → 0 and can round to
        // a tiny negative variance; the true cost diverges there
        let vt = v.value(t);
        if vt <= 0.0 {
            return f64::INFINITY;
        }
        let num = b + cc * t;
        num * num / (2.0 * vt)
    };
    let opt = minimize_scalar(cost, 0.0, HiPolicy::Expand, DEFAULT_REL_TOL)?;
    Ok(FifoResult { decay_rate: opt.value, t_star: opt.arg, ties: opt.ties })
}

/// Sample the most probable cumulative path and its input rate on
/// `[−t*, 0]`, in original units.
pub fn fifo_mpp(b: f64, c: f64, source: &SourceModel, result: &FifoResult, grid: usize) -> Result<SampledPath> {
    if grid < 2 {
        return Err(Error::param("grid", format!("need at least 2 samples, got {grid}")));
    }
    let cc = c - source.mean_rate;
    let mu = source.mean_rate;
    let t_star = result.t_star;
    let v = &source.variance;
    let level = b + cc * t_star;
    let path = ConditionalPath::new(v, &[(t_star, level)])?;
    let scale = level / (2.0 * v.value(t_star));

    let mut r = Vec::with_capacity(grid);
    let mut f = Vec::with_capacity(grid);
    let mut g = Vec::with_capacity(grid);
    for i in 0..grid {
        let ri = -t_star * (1.0 - i as f64 / (grid - 1) as f64);
        r.push(ri);
        f.push(path.value(ri) + mu * ri);
        g.push(scale * (v.dv(ri + t_star) + v.dv(-ri)) + mu);
    }
    Ok(SampledPath { r, f, g, regime: Regime::A, constraint_times: vec![t_star] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variance::VarianceModel;
    use approx::assert_relative_eq;

    fn brownian_source() -> SourceModel {
        SourceModel::centered(VarianceModel::brownian(1.0).unwrap())
    }

    #[test]
    fn brownian_closed_form() {
        // J = 2bc at t = b/c
        let r = fifo_decay(0.5, 1.0, &brownian_source()).unwrap();
        assert_relative_eq!(r.decay_rate, 1.0, epsilon = 1e-9);
        assert_relative_eq!(r.t_star, 0.5, epsilon = 1e-7);
    }

    #[test]
    fn fbm_closed_form() {
        let h = 0.75;
        let src = SourceModel::centered(VarianceModel::fbm(1.0, h).unwrap());
        let r = fifo_decay(1.0, 1.0, &src).unwrap();
        let j = 0.5 * (1.0 / (1.0 - h)).powf(2.0 - 2.0 * h) * (1.0 / h).powf(2.0 * h);
        assert_relative_eq!(r.t_star, h / (1.0 - h), epsilon = 1e-6);
        assert_relative_eq!(r.decay_rate, j, max_relative = 1e-10);
    }

    #[test]
    fn cost_at_reported_horizon_matches_rate() {
        let src = SourceModel::new(VarianceModel::mg_exp(0.125, 2.0).unwrap(), 0.25).unwrap();
        let r = fifo_decay(0.5, 1.0, &src).unwrap();
        let cc = 1.0 - 0.25;
        let num = 0.5 + cc * r.t_star;
        let direct = num * num / (2.0 * src.variance.value(r.t_star));
        assert_relative_eq!(r.decay_rate, direct, max_relative = 1e-10);
    }

    #[test]
    fn vanishing_buffer_sends_rate_to_zero() {
        let r = fifo_decay(1e-9, 1.0, &brownian_source()).unwrap();
        assert!(r.decay_rate < 1e-6);
    }

    #[test]
    fn unstable_rate_is_rejected() {
        let src = SourceModel::new(VarianceModel::brownian(1.0).unwrap(), 1.5).unwrap();
        assert!(matches!(fifo_decay(0.5, 1.0, &src), Err(Error::Unstable(_))));
    }

    #[test]
    fn mpp_endpoints_in_original_units() {
        let src = SourceModel::new(VarianceModel::mg_exp(0.125, 2.0).unwrap(), 0.25).unwrap();
        let (b, c) = (0.5, 1.0);
        let r = fifo_decay(b, c, &src).unwrap();
        let p = fifo_mpp(b, c, &src, &r, 257).unwrap();
        assert_eq!(*p.f.last().unwrap(), 0.0);
        assert_relative_eq!(p.f[0], -(b + c * r.t_star), max_relative = 1e-9);
    }

    #[test]
    fn brownian_rate_path_is_flat_at_twice_service() {
        let (b, c) = (0.5, 1.0);
        let src = brownian_source();
        let r = fifo_decay(b, c, &src).unwrap();
        let p = fifo_mpp(b, c, &src, &r, 64).unwrap();
        for &gi in &p.g {
            assert_relative_eq!(gi, 2.0 * c, epsilon = 1e-7);
        }
    }

    #[test]
    fn smooth_models_enter_and_leave_at_service_rate() {
        // v'(0) = 0 forces g(0) = g(-t*) = c after centering
        let src = SourceModel::new(VarianceModel::mg_exp(0.125, 2.0).unwrap(), 0.25).unwrap();
        let c = 1.0;
        let r = fifo_decay(0.5, c, &src).unwrap();
        let p = fifo_mpp(0.5, c, &src, &r, 101).unwrap();
        assert_relative_eq!(p.g[0], c, epsilon = 1e-6);
        assert_relative_eq!(*p.g.last().unwrap(), c, epsilon = 1e-6);
    }

    #[test]
    fn rate_path_symmetric_about_midpoint() {
        let src = SourceModel::centered(VarianceModel::fbm(1.0, 0.75).unwrap());
        let r = fifo_decay(1.0, 1.0, &src).unwrap();
        let p = fifo_mpp(1.0, 1.0, &src, &r, 129).unwrap();
        let n = p.g.len();
        for i in 0..n {
            assert_relative_eq!(p.g[i], p.g[n - 1 - i], epsilon = 1e-9);
        }
    }

    #[test]
    fn path_and_rate_are_consistent() {
        let src = SourceModel::new(VarianceModel::mg_exp(0.125, 2.0).unwrap(), 0.25).unwrap();
        let r = fifo_decay(0.5, 1.0, &src).unwrap();
        let p = fifo_mpp(0.5, 1.0, &src, &r, 2049).unwrap();
        let h = p.r[1] - p.r[0];
        for i in 1..p.r.len() - 1 {
            let fd = (p.f[i + 1] - p.f[i - 1]) / (2.0 * h);
            assert_relative_eq!(fd, p.g[i], epsilon = 1e-4 * (1.0 + p.g[i].abs()));
        }
    }
}
