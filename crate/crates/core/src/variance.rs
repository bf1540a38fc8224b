//! Variance functions of stationary-increment Gaussian traffic sources.
//!
//! A centered source is fully described by its variance function `v(t)`,
//! the variance of the traffic generated in any window of length `t`.
//! The covariance of the cumulative process follows from stationarity:
//!
//! ```text
//! Γ(s,t) = (v(t) − v(|t−s|) + v(s)) / 2
//! ```
//!
//! The catalog covers Brownian motion (`v(t) = σ²t`), fractional Brownian
//! motion (`v(t) = σ²t^{2H}`) and the Gaussian counterparts of M/G/∞ session
//! traffic for exponential, hyperexponential and Pareto session lengths,
//! plus a generic M/G/∞ kind driven by a numeric tail function. For the
//! M/G/∞ family with session arrival rate `λ`, mean session length `δ` and
//! session-length tail `P(D > t)`:
//!
//! ```text
//! v''(t) = 2λ ∫_t^∞ P(D > s) ds,    v'(0) = 0,    v''(0) = 2λδ
//! ```
//!
//! which integrates to `v(t) = 2λ ∫_0^t (t−w)(δ − T(w)) dw` with
//! `T(w) = ∫_0^w P(D > s) ds`. The generic kind evaluates this reduction
//! by quadrature; the named kinds use their closed forms.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative endpoint used by geometric validation grids.
const GROWTH_MARGIN: f64 = 0.01;

/// How `v'` and `v''` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    /// Closed-form derivatives of the model kind.
    Analytic,
    /// Central differences of `v` with step `h = max(1,t)·ε^{1/3}`.
    NumericFallback,
}

#[derive(Debug, Clone)]
pub enum VarianceKind {
    Brownian {
        sigma2: f64,
    },
    Fbm {
        sigma2: f64,
        hurst: f64,
    },
    MgExp {
        lambda: f64,
        delta: f64,
    },
    MgHyper {
        lambda: f64,
        delta: f64,
        p1: f64,
        nu1: f64,
        /// Second phase rate, `p2 / (δ − p1/ν1)`.
        nu2: f64,
    },
    MgPareto {
        lambda: f64,
        delta: f64,
        /// Tail exponent `(1+δ)/δ`.
        alpha: f64,
    },
    MgGeneral {
        lambda: f64,
        delta: f64,
        table: Arc<TailTable>,
    },
    /// Variance of a sum of independent sources.
    Sum(Box<VarianceModel>, Box<VarianceModel>),
}

/// A variance function with derivatives and covariance evaluation.
///
/// Evaluators are immutable after construction and safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct VarianceModel {
    kind: VarianceKind,
    mode: DerivativeMode,
}

impl VarianceModel {
    pub fn brownian(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::param("sigma2", format!("must be positive, got {sigma2}")));
        }
        Ok(Self::analytic(VarianceKind::Brownian { sigma2 }))
    }

    /// Fractional Brownian motion. `H ≤ 1/2` is constructible, but then
    /// `v'(0+) = +∞` and the analytic rate-path formulas do not apply;
    /// callers can detect this via [`VarianceModel::dv_at_zero`].
    pub fn fbm(sigma2: f64, hurst: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::param("sigma2", format!("must be positive, got {sigma2}")));
        }
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::param("hurst", format!("must lie in (0,1), got {hurst}")));
        }
        Ok(Self::analytic(VarianceKind::Fbm { sigma2, hurst }))
    }

    pub fn mg_exp(lambda: f64, delta: f64) -> Result<Self> {
        check_mg(lambda, delta)?;
        Ok(Self::analytic(VarianceKind::MgExp { lambda, delta }))
    }

    pub fn mg_hyper(lambda: f64, delta: f64, p1: f64, nu1: f64) -> Result<Self> {
        check_mg(lambda, delta)?;
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(Error::param("p1", format!("must lie in (0,1), got {p1}")));
        }
        if !(nu1 > 0.0) || !nu1.is_finite() {
            return Err(Error::param("nu1", format!("must be positive, got {nu1}")));
        }
        let denom = delta - p1 / nu1;
        if denom <= 0.0 {
            return Err(Error::param(
                "nu1",
                format!("nu2 = p2/(delta - p1/nu1) must be positive; delta - p1/nu1 = {denom}"),
            ));
        }
        let nu2 = (1.0 - p1) / denom;
        Ok(Self::analytic(VarianceKind::MgHyper { lambda, delta, p1, nu1, nu2 }))
    }

    pub fn mg_pareto(lambda: f64, delta: f64) -> Result<Self> {
        check_mg(lambda, delta)?;
        if (delta - 1.0).abs() < 1e-9 || (delta - 0.5).abs() < 1e-9 {
            return Err(Error::param("delta", "delta = 1 and delta = 1/2 are excluded for the Pareto kind"));
        }
        let alpha = (1.0 + delta) / delta;
        Ok(Self::analytic(VarianceKind::MgPareto { lambda, delta, alpha }))
    }

    /// M/G/∞ source with a numeric session-length tail `P(D > t)`.
    ///
    /// The tail must be nonincreasing with `tail(0) = 1` and integrate to
    /// `delta` (checked within 1%). The variance is tabulated by quadrature
    /// up to `horizon` (default `max(64·δ, 64)`) and continued quadratically
    /// beyond it.
    pub fn mg_general<F>(lambda: f64, delta: f64, tail: F, horizon: Option<f64>) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        check_mg(lambda, delta)?;
        let horizon = horizon.unwrap_or_else(|| (64.0 * delta).max(64.0));
        if !(horizon > 0.0) {
            return Err(Error::param("horizon", format!("must be positive, got {horizon}")));
        }
        let table = TailTable::build(&tail, delta, horizon)?;
        Ok(Self::analytic(VarianceKind::MgGeneral {
            lambda,
            delta,
            table: Arc::new(table),
        }))
    }

    /// Variance of the sum of two independent sources.
    pub fn sum(a: VarianceModel, b: VarianceModel) -> Self {
        Self::analytic(VarianceKind::Sum(Box::new(a), Box::new(b)))
    }

    fn analytic(kind: VarianceKind) -> Self {
        Self { kind, mode: DerivativeMode::Analytic }
    }

    /// Same model with derivatives forced to the numeric fallback.
    pub fn with_numeric_derivatives(mut self) -> Self {
        self.mode = DerivativeMode::NumericFallback;
        self
    }

    pub fn kind(&self) -> &VarianceKind {
        &self.kind
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        self.mode
    }

    /// Scale the variance function by `alpha > 0` (used to fold `nα`
    /// sources of one class into `n` rescaled sources).
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
        }
        let kind = match &self.kind {
            VarianceKind::Brownian { sigma2 } => VarianceKind::Brownian { sigma2: sigma2 * alpha },
            VarianceKind::Fbm { sigma2, hurst } => VarianceKind::Fbm { sigma2: sigma2 * alpha, hurst: *hurst },
            VarianceKind::MgExp { lambda, delta } => VarianceKind::MgExp { lambda: lambda * alpha, delta: *delta },
            VarianceKind::MgHyper { lambda, delta, p1, nu1, nu2 } => VarianceKind::MgHyper {
                lambda: lambda * alpha,
                delta: *delta,
                p1: *p1,
                nu1: *nu1,
                nu2: *nu2,
            },
            VarianceKind::MgPareto { lambda, delta, alpha: a } => VarianceKind::MgPareto {
                lambda: lambda * alpha,
                delta: *delta,
                alpha: *a,
            },
            VarianceKind::MgGeneral { lambda, delta, table } => VarianceKind::MgGeneral {
                lambda: lambda * alpha,
                delta: *delta,
                table: table.clone(),
            },
            VarianceKind::Sum(a, b) => VarianceKind::Sum(
                Box::new(a.scaled(alpha)?),
                Box::new(b.scaled(alpha)?),
            ),
        };
        Ok(Self { kind, mode: self.mode })
    }

    /// `v(t)` for `t ≥ 0`.
    pub fn value(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0, "variance function evaluated at negative time {t}");
        match &self.kind {
            VarianceKind::Brownian { sigma2 } => sigma2 * t,
            VarianceKind::Fbm { sigma2, hurst } => sigma2 * t.powf(2.0 * hurst),
            VarianceKind::MgExp { lambda, delta } => {
                2.0 * lambda * delta.powi(3) * (t / delta - 1.0 + (-t / delta).exp())
            }
            VarianceKind::MgHyper { lambda, p1, nu1, nu2, .. } => {
                let p2 = 1.0 - p1;
                2.0 * lambda * (p1 / nu1.powi(3)) * (nu1 * t - 1.0 + (-nu1 * t).exp())
                    + 2.0 * lambda * (p2 / nu2.powi(3)) * (nu2 * t - 1.0 + (-nu2 * t).exp())
            }
            VarianceKind::MgPareto { lambda, alpha, .. } => {
                let a = *alpha;
                2.0 * lambda / ((3.0 - a) * (2.0 - a) * (1.0 - a))
                    * (1.0 - (t + 1.0).powf(3.0 - a) + (3.0 - a) * t)
            }
            VarianceKind::MgGeneral { lambda, delta, table } => {
                let (tt, u, vv) = table.cumulants(t);
                let _ = tt;
                lambda * (delta * t * t - 2.0 * t * u + 2.0 * vv)
            }
            VarianceKind::Sum(a, b) => a.value(t) + b.value(t),
        }
    }

    /// `v'(t)`; honors the derivative mode.
    pub fn dv(&self, t: f64) -> f64 {
        match self.mode {
            DerivativeMode::Analytic => self.dv_analytic(t),
            DerivativeMode::NumericFallback => self.dv_numeric(t),
        }
    }

    /// `v''(t)`; honors the derivative mode.
    pub fn ddv(&self, t: f64) -> f64 {
        match self.mode {
            DerivativeMode::Analytic => self.ddv_analytic(t),
            DerivativeMode::NumericFallback => self.ddv_numeric(t),
        }
    }

    fn dv_analytic(&self, t: f64) -> f64 {
        match &self.kind {
            VarianceKind::Brownian { sigma2 } => *sigma2,
            VarianceKind::Fbm { sigma2, hurst } => 2.0 * hurst * sigma2 * t.powf(2.0 * hurst - 1.0),
            VarianceKind::MgExp { lambda, delta } => {
                2.0 * lambda * delta * delta * (1.0 - (-t / delta).exp())
            }
            VarianceKind::MgHyper { lambda, p1, nu1, nu2, .. } => {
                let p2 = 1.0 - p1;
                2.0 * lambda * (p1 / (nu1 * nu1)) * (1.0 - (-nu1 * t).exp())
                    + 2.0 * lambda * (p2 / (nu2 * nu2)) * (1.0 - (-nu2 * t).exp())
            }
            VarianceKind::MgPareto { lambda, alpha, .. } => {
                let a = *alpha;
                2.0 * lambda / ((2.0 - a) * (1.0 - a)) * (1.0 - (t + 1.0).powf(2.0 - a))
            }
            VarianceKind::MgGeneral { lambda, delta, table } => {
                let (_, u, _) = table.cumulants(t);
                2.0 * lambda * (delta * t - u)
            }
            VarianceKind::Sum(a, b) => a.dv_analytic(t) + b.dv_analytic(t),
        }
    }

    fn ddv_analytic(&self, t: f64) -> f64 {
        match &self.kind {
            VarianceKind::Brownian { .. } => 0.0,
            VarianceKind::Fbm { sigma2, hurst } => {
                // 2H(2H-1) t^{2H-2}: diverges at 0 for H != 1/2, with the
                // sign of 2H-1; the powf limit encodes that naturally.
                2.0 * hurst * (2.0 * hurst - 1.0) * sigma2 * t.powf(2.0 * hurst - 2.0)
            }
            VarianceKind::MgExp { lambda, delta } => 2.0 * lambda * delta * (-t / delta).exp(),
            VarianceKind::MgHyper { lambda, p1, nu1, nu2, .. } => {
                let p2 = 1.0 - p1;
                2.0 * lambda * (p1 / nu1) * (-nu1 * t).exp()
                    + 2.0 * lambda * (p2 / nu2) * (-nu2 * t).exp()
            }
            VarianceKind::MgPareto { lambda, alpha, .. } => {
                2.0 * lambda / (alpha - 1.0) * (t + 1.0).powf(1.0 - alpha)
            }
            VarianceKind::MgGeneral { lambda, delta, table } => {
                let (tt, _, _) = table.cumulants(t);
                2.0 * lambda * (delta - tt)
            }
            VarianceKind::Sum(a, b) => a.ddv_analytic(t) + b.ddv_analytic(t),
        }
    }

    fn dv_numeric(&self, t: f64) -> f64 {
        let h = t.max(1.0) * f64::EPSILON.cbrt();
        if t >= h {
            (self.value(t + h) - self.value(t - h)) / (2.0 * h)
        } else {
            // second-order forward stencil near zero
            (-3.0 * self.value(t) + 4.0 * self.value(t + h) - self.value(t + 2.0 * h)) / (2.0 * h)
        }
    }

    fn ddv_numeric(&self, t: f64) -> f64 {
        let h = t.max(1.0) * f64::EPSILON.cbrt();
        if t >= h {
            (self.value(t + h) - 2.0 * self.value(t) + self.value(t - h)) / (h * h)
        } else {
            (2.0 * self.value(t) - 5.0 * self.value(t + h) + 4.0 * self.value(t + 2.0 * h)
                - self.value(t + 3.0 * h))
                / (h * h)
        }
    }

    /// `v'(0+)`. Infinite for fBm with `H < 1/2`.
    pub fn dv_at_zero(&self) -> f64 {
        match &self.kind {
            VarianceKind::Sum(a, b) => a.dv_at_zero() + b.dv_at_zero(),
            _ => self.dv_analytic(0.0),
        }
    }

    /// `v''(0+)`. Infinite for fBm with `H ≠ 1/2`; `2λδ` for M/G/∞ kinds.
    pub fn ddv_at_zero(&self) -> f64 {
        match &self.kind {
            VarianceKind::Sum(a, b) => a.ddv_at_zero() + b.ddv_at_zero(),
            _ => self.ddv_analytic(0.0),
        }
    }

    /// Covariance `Γ(s,t) = (v(t) − v(|t−s|) + v(s))/2` of the cumulative
    /// process at two nonnegative times.
    pub fn gamma(&self, s: f64, t: f64) -> f64 {
        debug_assert!(s >= 0.0 && t >= 0.0);
        0.5 * (self.value(t) - self.value((t - s).abs()) + self.value(s))
    }
}

fn check_mg(lambda: f64, delta: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::param("delta", format!("must be positive, got {delta}")));
    }
    Ok(())
}

/// A Gaussian source: variance function plus mean rate. All user-facing
/// rates are in original (uncentered) units.
#[derive(Debug, Clone)]
pub struct SourceModel {
    pub variance: VarianceModel,
    pub mean_rate: f64,
}

impl SourceModel {
    pub fn new(variance: VarianceModel, mean_rate: f64) -> Result<Self> {
        if !mean_rate.is_finite() || mean_rate < 0.0 {
            return Err(Error::param("mean_rate", format!("must be finite and nonnegative, got {mean_rate}")));
        }
        Ok(Self { variance, mean_rate })
    }

    /// Centered source with the same variance function.
    pub fn centered(variance: VarianceModel) -> Self {
        Self { variance, mean_rate: 0.0 }
    }
}

/// Variance of an M/G/∞ source evaluated directly from a numeric tail,
/// `v(t) = 2λ ∫_0^t (t−w)(δ − T(w)) dw`.
///
/// Checks that the tail is a proper nonincreasing survival function and
/// that its integral matches `delta` within 1%.
pub fn mg_general_variance<F>(lambda: f64, tail: F, delta: f64, t: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if t < 0.0 {
        return Err(Error::param("t", format!("must be nonnegative, got {t}")));
    }
    let model = VarianceModel::mg_general(lambda, delta, tail, Some((t.max(delta) * 4.0).max(64.0)))?;
    Ok(model.value(t))
}

/// Cumulative integrals of a session-length tail on a uniform grid.
///
/// Stores, at step `h`, the node values of
/// `T(w) = ∫_0^w tail`, `U(w) = ∫_0^w T`, `V(w) = ∫_0^w x·T(x) dx`,
/// together with the per-cell quadratic coefficients of the tail so that
/// values between nodes are smooth (exact for a locally quadratic tail).
pub struct TailTable {
    h: f64,
    horizon: f64,
    t_nodes: Vec<f64>,
    u_nodes: Vec<f64>,
    v_nodes: Vec<f64>,
    /// Per-cell (a, b, c) of tail(kh + x) ≈ a + bx + cx².
    cells: Vec<(f64, f64, f64)>,
}

impl std::fmt::Debug for TailTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TailTable")
            .field("h", &self.h)
            .field("horizon", &self.horizon)
            .field("cells", &self.cells.len())
            .finish()
    }
}

impl TailTable {
    fn build<F: Fn(f64) -> f64>(tail: &F, delta: f64, horizon: f64) -> Result<Self> {
        let t0 = tail(0.0);
        if (t0 - 1.0).abs() > 1e-6 {
            return Err(Error::param("tail", format!("tail(0) must be 1, got {t0}")));
        }
        let h = (delta.min(1.0) / 512.0).min(horizon / 64.0);
        let n_cells = (horizon / h).ceil() as usize;
        let mut t_nodes = Vec::with_capacity(n_cells + 1);
        let mut u_nodes = Vec::with_capacity(n_cells + 1);
        let mut v_nodes = Vec::with_capacity(n_cells + 1);
        let mut cells = Vec::with_capacity(n_cells);
        t_nodes.push(0.0);
        u_nodes.push(0.0);
        v_nodes.push(0.0);
        let mut f_lo = t0;
        for k in 0..n_cells {
            let w = k as f64 * h;
            let f_mid = tail(w + 0.5 * h);
            let f_hi = tail(w + h);
            if f_mid > f_lo + 1e-12 || f_hi > f_mid + 1e-12 {
                return Err(Error::param(
                    "tail",
                    format!("tail must be nonincreasing; increases near t = {w}"),
                ));
            }
            if f_hi < -1e-12 {
                return Err(Error::param("tail", format!("tail must be nonnegative; tail({}) = {f_hi}", w + h)));
            }
            // quadratic through (0,f_lo), (h/2,f_mid), (h,f_hi)
            let b = (4.0 * f_mid - 3.0 * f_lo - f_hi) / h;
            let c = (2.0 * f_lo - 4.0 * f_mid + 2.0 * f_hi) / (h * h);
            cells.push((f_lo, b, c));
            let tk = t_nodes[k];
            let uk = u_nodes[k];
            let vk = v_nodes[k];
            let dt = cell_t(f_lo, b, c, h);
            let du = h * tk + cell_u(f_lo, b, c, h);
            let dv = w * du + h * h * tk / 2.0 + cell_xp(f_lo, b, c, h);
            t_nodes.push(tk + dt);
            u_nodes.push(uk + du);
            v_nodes.push(vk + dv);
            f_lo = f_hi;
        }
        let table = Self { h, horizon: n_cells as f64 * h, t_nodes, u_nodes, v_nodes, cells };

        // δ-consistency: extend the tail integral geometrically beyond the
        // table until the remainder stabilizes, then compare with delta.
        let mut total = *table.t_nodes.last().unwrap();
        let mut lo = table.horizon;
        let mut seg = table.horizon.max(1.0);
        let cap = 1e9 * delta.max(1.0);
        loop {
            let add = simpson(tail, lo, lo + seg, 64);
            total += add;
            lo += seg;
            seg *= 2.0;
            if add < 1e-4 * delta {
                break;
            }
            if lo > cap {
                return Err(Error::Quadrature { residual: add });
            }
        }
        let rel = (total - delta).abs() / delta;
        if rel > 0.01 {
            return Err(Error::param(
                "delta",
                format!("tail integrates to {total:.6}, inconsistent with delta = {delta} (relative error {rel:.3})"),
            ));
        }
        Ok(table)
    }

    /// `(T(t), U(t), V(t))`, continued quadratically beyond the horizon
    /// (constant `T`, i.e. constant `v''`).
    fn cumulants(&self, t: f64) -> (f64, f64, f64) {
        if t <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        if t >= self.horizon {
            let n = self.cells.len();
            let tw = self.t_nodes[n];
            let uw = self.u_nodes[n];
            let vw = self.v_nodes[n];
            let d = t - self.horizon;
            let u = uw + tw * d;
            let v = vw + self.horizon * tw * d + tw * d * d / 2.0;
            return (tw, u, v);
        }
        let k = ((t / self.h) as usize).min(self.cells.len() - 1);
        let (a, b, c) = self.cells[k];
        let w = k as f64 * self.h;
        let x = t - w;
        let tk = self.t_nodes[k];
        let p = a * x + b * x * x / 2.0 + c * x * x * x / 3.0;
        let t_val = tk + p;
        let du = x * tk + cell_u(a, b, c, x);
        let u_val = self.u_nodes[k] + du;
        let v_val = self.v_nodes[k] + w * du + x * x * tk / 2.0 + cell_xp(a, b, c, x);
        (t_val, u_val, v_val)
    }
}

/// `∫_0^x p(u) du` for `p(u) = a + bu + cu²` evaluated at `x`.
fn cell_t(a: f64, b: f64, c: f64, x: f64) -> f64 {
    a * x + b * x * x / 2.0 + c * x * x * x / 3.0
}

/// `∫_0^x P(u) du` where `P(u) = ∫_0^u p`.
fn cell_u(a: f64, b: f64, c: f64, x: f64) -> f64 {
    a * x * x / 2.0 + b * x * x * x / 6.0 + c * x * x * x * x / 12.0
}

/// `∫_0^x u·P(u) du`.
fn cell_xp(a: f64, b: f64, c: f64, x: f64) -> f64 {
    a * x.powi(3) / 3.0 + b * x.powi(4) / 8.0 + c * x.powi(5) / 15.0
}

fn simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, cells: usize) -> f64 {
    let h = (hi - lo) / cells as f64;
    let mut acc = 0.0;
    for k in 0..cells {
        let a = lo + k as f64 * h;
        acc += h / 6.0 * (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h));
    }
    acc
}

/// Outcome of one validation check: the worst margin and where it occurred.
/// Margins are oriented so that nonnegative means the check passed there.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CheckResult {
    pub pass: bool,
    pub worst_t: f64,
    pub worst_margin: f64,
}

/// Numeric validation of the standing model assumptions on a sampled grid.
/// Failures are reported as data, not errors; solvers keep going.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationReport {
    /// `v(0) = 0` and `v > 0` on the grid.
    pub positive: CheckResult,
    /// `v` strictly increasing on the grid.
    pub increasing: CheckResult,
    /// `√v` concave on the grid (divided differences nonincreasing).
    pub sqrt_concave: CheckResult,
    /// `v(t)/t^α → 0` for some `α < 2`: fitted log-log tail slope below 2.
    pub subquadratic_growth: CheckResult,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.positive.pass && self.increasing.pass && self.sqrt_concave.pass && self.subquadratic_growth.pass
    }
}

/// Evaluate the four model checks on a mixed linear/geometric grid over
/// `(0, horizon]`.
pub fn validate_model(model: &VarianceModel, horizon: f64, grid_size: usize) -> Result<ValidationReport> {
    if !(horizon > 0.0) {
        return Err(Error::param("horizon", format!("must be positive, got {horizon}")));
    }
    if grid_size < 16 {
        return Err(Error::param("grid_size", format!("must be at least 16, got {grid_size}")));
    }
    let mut grid: Vec<f64> = (1..=grid_size).map(|i| horizon * i as f64 / grid_size as f64).collect();
    // geometric points probe the short-time behavior; stop well above the
    // scale where the closed forms lose significance to cancellation
    for j in 1..grid_size.min(13) {
        grid.push(horizon * 0.5f64.powi(j as i32));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();

    let vals: Vec<f64> = grid.iter().map(|&t| model.value(t)).collect();

    // check 1: v(0) = 0, v > 0
    let v0 = model.value(0.0);
    let mut positive = CheckResult { pass: v0.abs() <= 1e-9, worst_t: 0.0, worst_margin: f64::INFINITY };
    for (&t, &v) in grid.iter().zip(&vals) {
        if v < positive.worst_margin {
            positive.worst_t = t;
            positive.worst_margin = v;
        }
        if v <= 0.0 {
            positive.pass = false;
        }
    }

    // check 2: strictly increasing
    let mut increasing = CheckResult { pass: true, worst_t: grid[0], worst_margin: f64::INFINITY };
    for i in 0..grid.len() - 1 {
        let dv = vals[i + 1] - vals[i];
        if dv < increasing.worst_margin {
            increasing.worst_margin = dv;
            increasing.worst_t = grid[i + 1];
        }
        if dv <= 0.0 {
            increasing.pass = false;
        }
    }

    // check 3: sqrt(v) concave: divided differences must not increase
    let sq: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut slopes = Vec::with_capacity(grid.len() - 1);
    for i in 0..grid.len() - 1 {
        slopes.push((sq[i + 1] - sq[i]) / (grid[i + 1] - grid[i]));
    }
    let scale = slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let tol = 1e-9 * scale.max(1e-300);
    let mut sqrt_concave = CheckResult { pass: true, worst_t: grid[0], worst_margin: -f64::INFINITY };
    for i in 0..slopes.len() - 1 {
        let jump = slopes[i + 1] - slopes[i];
        if jump > sqrt_concave.worst_margin {
            sqrt_concave.worst_margin = jump;
            sqrt_concave.worst_t = grid[i + 1];
        }
        if jump > tol {
            sqrt_concave.pass = false;
        }
    }

    // check 4: sub-quadratic growth, fitted on the top of the grid
    let hi = vals[grid.len() - 1];
    let t_hi = grid[grid.len() - 1];
    let mid_idx = grid
        .iter()
        .position(|&t| t >= t_hi / 4.0)
        .unwrap_or(grid.len() / 2)
        .min(grid.len() - 2);
    let slope_fit = (hi.ln() - vals[mid_idx].ln()) / (t_hi.ln() - grid[mid_idx].ln());
    let subquadratic_growth = CheckResult {
        pass: slope_fit <= 2.0 - GROWTH_MARGIN,
        worst_t: t_hi,
        worst_margin: 2.0 - slope_fit,
    };

    Ok(ValidationReport { positive, increasing, sqrt_concave, subquadratic_growth })
}
