//! Deterministic scalar optimizers and the nested inf-sup search.
//!
//! Every solver in this crate reduces to one-dimensional searches built
//! from a coarse grid scan followed by golden-section refinement. The grid
//! guards against the (documented) possibility of multiple optimizers: ties
//! within tolerance are broken toward the smallest argument and the
//! alternates are reported.

use crate::error::{Error, Result};

/// Default relative tolerance used by the solver modules.
pub const DEFAULT_REL_TOL: f64 = 1e-9;
/// Default number of grid points per bracket.
pub const GRID_POINTS: usize = 256;
/// Relative clamp keeping grid points off open interval endpoints.
const END_CLAMP: f64 = 1e-12;
/// Bracket expansion stops after this many consecutive non-improving doublings.
const STALL_LIMIT: usize = 3;
/// Expansion gives up when the bracket exceeds 2^40 times its initial width.
const EXPANSION_CAP: f64 = (1u64 << 40) as f64;

/// Result of a one-dimensional search.
#[derive(Debug, Clone)]
pub struct ScalarOptResult {
    pub arg: f64,
    pub value: f64,
    pub evaluations: usize,
    /// Final refinement bracket containing `arg`.
    pub bracket: (f64, f64),
    /// Grid points (other than `arg`) whose value tied within tolerance.
    pub ties: Vec<f64>,
}

/// Upper-end policy for [`minimize_scalar`].
#[derive(Debug, Clone, Copy)]
pub enum HiPolicy {
    Fixed(f64),
    /// Double the upper end until the running minimum stalls; valid for
    /// coercive objectives.
    Expand,
}

struct Scan {
    best_i: usize,
    xs: Vec<f64>,
    fs: Vec<f64>,
}

fn scan_grid<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64, n: usize, evals: &mut usize) -> Scan {
    let w = hi - lo;
    let mut xs = Vec::with_capacity(n);
    let mut fs = Vec::with_capacity(n);
    for i in 0..n {
        let frac = (i as f64 / (n - 1) as f64).clamp(END_CLAMP, 1.0 - END_CLAMP);
        let x = lo + w * frac;
        let y = f(x);
        *evals += 1;
        xs.push(x);
        fs.push(if y.is_nan() { f64::INFINITY } else { y });
    }
    let mut best_i = 0;
    for i in 1..n {
        if fs[i] < fs[best_i] {
            best_i = i;
        }
    }
    Scan { best_i, xs, fs }
}

fn golden_min<F: FnMut(f64) -> f64>(
    f: &mut F,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
    evals: &mut usize,
) -> (f64, f64) {
    const PHI: f64 = 1.618_033_988_749_895;
    const RESP: f64 = 2.0 - PHI;

    let mut x1 = a + RESP * (b - a);
    let mut x2 = b - RESP * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    *evals += 2;
    let mut iter = 0;
    while b - a > rel_tol * 1.0f64.max(0.5 * (a.abs() + b.abs())) && iter < 300 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + RESP * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - RESP * (b - a);
            f2 = f(x2);
        }
        *evals += 1;
        iter += 1;
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Minimize `f` on the open interval `(lo, hi)`.
///
/// A grid scan locates the basin, golden-section refinement shrinks the
/// argument bracket below `rel_tol·max(1,|arg|)`. Under [`HiPolicy::Expand`]
/// the upper end doubles until the running minimum has not improved for
/// three consecutive doublings.
pub fn minimize_scalar<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi_policy: HiPolicy,
    rel_tol: f64,
) -> Result<ScalarOptResult> {
    if !(rel_tol >= 1e-12) {
        return Err(Error::param("rel_tol", format!("must be at least 1e-12, got {rel_tol}")));
    }
    let mut evals = 0usize;
    let scan = match hi_policy {
        HiPolicy::Fixed(hi) => {
            if !(hi > lo) {
                return Err(Error::param("hi", format!("must exceed lo = {lo}, got {hi}")));
            }
            scan_grid(&mut f, lo, hi, GRID_POINTS, &mut evals)
        }
        HiPolicy::Expand => {
            let w0 = lo.abs().max(1.0);
            let mut hi = lo + w0;
            let mut best = scan_grid(&mut f, lo, hi, GRID_POINTS, &mut evals);
            let mut stall = 0usize;
            while stall < STALL_LIMIT {
                if hi - lo > EXPANSION_CAP * w0 {
                    return Err(Error::Numerical(format!(
                        "bracket expansion from {lo} exceeded its cap without locating a minimum"
                    )));
                }
                hi = lo + 2.0 * (hi - lo);
                let scan = scan_grid(&mut f, lo, hi, GRID_POINTS, &mut evals);
                let improve_tol = rel_tol * 1.0f64.max(best.fs[best.best_i].abs());
                if scan.fs[scan.best_i] < best.fs[best.best_i] - improve_tol {
                    best = scan;
                    stall = 0;
                } else {
                    stall += 1;
                }
            }
            best
        }
    };

    finish_min(&mut f, scan, rel_tol, evals)
}

fn finish_min<F: FnMut(f64) -> f64>(f: &mut F, scan: Scan, rel_tol: f64, mut evals: usize) -> Result<ScalarOptResult> {
    let n = scan.xs.len();
    // tie-break: the smallest argument within tolerance of the minimum wins
    let tie_tol = rel_tol * 1.0f64.max(scan.fs[scan.best_i].abs());
    let mut chosen = scan.best_i;
    for i in 0..n {
        if scan.fs[i] <= scan.fs[scan.best_i] + tie_tol {
            chosen = i;
            break;
        }
    }
    let mut ties = Vec::new();
    let mut i = 0;
    while i < n {
        if scan.fs[i] <= scan.fs[scan.best_i] + tie_tol {
            // collapse a run of adjacent tied grid points into one alternate
            let start = i;
            while i + 1 < n && scan.fs[i + 1] <= scan.fs[scan.best_i] + tie_tol {
                i += 1;
            }
            if !(start <= chosen && chosen <= i) {
                let rep = (start..=i).min_by(|&a, &b| scan.fs[a].partial_cmp(&scan.fs[b]).unwrap()).unwrap();
                ties.push(scan.xs[rep]);
            }
        }
        i += 1;
    }
    let bracket_lo = if chosen == 0 { scan.xs[0] } else { scan.xs[chosen - 1] };
    let bracket_hi = if chosen + 1 == n { scan.xs[n - 1] } else { scan.xs[chosen + 1] };
    let (arg, value) = if bracket_hi > bracket_lo {
        golden_min(f, bracket_lo, bracket_hi, rel_tol, &mut evals)
    } else {
        (scan.xs[chosen], scan.fs[chosen])
    };
    // the scan minimum stays authoritative if refinement drifted upward
    let (arg, value) = if scan.fs[chosen] < value {
        (scan.xs[chosen], scan.fs[chosen])
    } else {
        (arg, value)
    };
    Ok(ScalarOptResult { arg, value, evaluations: evals, bracket: (bracket_lo, bracket_hi), ties })
}

/// Maximize `f` on the open interval `(lo, hi)`.
pub fn maximize_scalar<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<ScalarOptResult> {
    let res = minimize_scalar(|x| -f(x), lo, HiPolicy::Fixed(hi), rel_tol)?;
    Ok(ScalarOptResult { value: -res.value, ..res })
}

/// Result of the nested inf-sup search.
#[derive(Debug, Clone)]
pub struct SaddleResult {
    pub t: f64,
    pub s: f64,
    pub value: f64,
    /// Total objective evaluations across both optimization levels.
    pub evaluations: usize,
    /// Alternate outer optimizers tying within tolerance.
    pub t_ties: Vec<f64>,
    /// The outer optimizer ran into its (open) lower endpoint `t_lo`.
    pub t_at_lower_bound: bool,
    /// The inner optimizer ran into `s → 0`.
    pub s_at_lower_bound: bool,
}

/// Nested search for `inf_{t > t_lo} sup_{s ∈ (0,t)} f(s,t)`.
///
/// The outer minimization expands its bracket; the inner maximization uses
/// the fixed bracket `(0, t)`. Deterministic given the tolerance.
pub fn saddle_search<F: Fn(f64, f64) -> f64>(f: F, t_lo: f64, rel_tol: f64) -> Result<SaddleResult> {
    let inner_evals = std::cell::Cell::new(0usize);
    let inner = |t: f64| -> Result<ScalarOptResult> {
        let r = maximize_scalar(|s| f(s, t), 0.0, t, rel_tol)?;
        inner_evals.set(inner_evals.get() + r.evaluations);
        Ok(r)
    };
    let outer = minimize_scalar(
        |t| match inner(t) {
            Ok(r) => r.value,
            Err(_) => f64::INFINITY,
        },
        t_lo,
        HiPolicy::Expand,
        rel_tol,
    )?;
    let at_t = inner(outer.arg)?;
    let boundary_tol = |x: f64| 100.0 * rel_tol * 1.0f64.max(x.abs());
    Ok(SaddleResult {
        t: outer.arg,
        s: at_t.arg,
        value: at_t.value,
        evaluations: outer.evaluations + inner_evals.get(),
        t_ties: outer.ties,
        t_at_lower_bound: outer.arg - t_lo <= boundary_tol(t_lo),
        s_at_lower_bound: at_t.arg <= boundary_tol(outer.arg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadratic_minimum_with_expansion() {
        let r = minimize_scalar(|t| (t - 2.0) * (t - 2.0), 0.0, HiPolicy::Expand, 1e-9).unwrap();
        assert_relative_eq!(r.arg, 2.0, epsilon = 1e-8);
        assert!(r.value < 1e-15);
        assert!(r.ties.is_empty());
    }

    #[test]
    fn brownian_fifo_objective() {
        // (b + ct)^2 / (2t) with b = 0.5, c = 1 has its minimum at t = b/c
        let r = minimize_scalar(|t| (0.5 + t) * (0.5 + t) / (2.0 * t), 0.0, HiPolicy::Expand, 1e-9).unwrap();
        assert_relative_eq!(r.arg, 0.5, epsilon = 1e-7);
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fbm_fifo_objective() {
        // b = c = 1, H = 3/4: minimizer at H/(1-H) = 3
        let h = 0.75;
        let r = minimize_scalar(
            |t: f64| (1.0 + t) * (1.0 + t) / (2.0 * t.powf(2.0 * h)),
            0.0,
            HiPolicy::Expand,
            1e-9,
        )
        .unwrap();
        assert_relative_eq!(r.arg, 3.0, epsilon = 1e-6);
    }

    #[test]
    fn maximize_parabola() {
        let r = maximize_scalar(|s| -(s - 1.0) * (s - 1.0), 0.0, 2.0, 1e-9).unwrap();
        assert_relative_eq!(r.arg, 1.0, epsilon = 1e-8);
        assert_relative_eq!(r.value, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_objective_breaks_ties_low() {
        let r = maximize_scalar(|_| 1.0, 0.0, 4.0, 1e-9).unwrap();
        assert!(r.arg < 0.05, "expected lo-side tie-break, got {}", r.arg);
    }

    #[test]
    fn bimodal_objective_reports_alternates() {
        let f = |t: f64| ((t - 1.0) * (t - 3.0)).powi(2);
        let r = minimize_scalar(f, 0.0, HiPolicy::Fixed(4.0), 1e-9).unwrap();
        assert_relative_eq!(r.arg, 1.0, epsilon = 1e-6);
        assert_eq!(r.ties.len(), 1);
        assert!((r.ties[0] - 3.0).abs() < 0.05, "alternate near 3, got {:?}", r.ties);
    }

    #[test]
    fn saddle_reduces_to_outer_minimum_when_s_free() {
        let r = saddle_search(|_, t| (t - 3.0) * (t - 3.0) + 1.0, 1.0, 1e-9).unwrap();
        assert_relative_eq!(r.t, 3.0, epsilon = 1e-7);
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rerun_is_identical() {
        let run = || {
            minimize_scalar(|t: f64| (t - 1.7).powi(2) * (1.0 + (3.0 * t).sin().powi(2)), 0.0, HiPolicy::Expand, 1e-9)
                .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.arg, b.arg);
        assert_eq!(a.value, b.value);
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn halving_tolerance_is_self_consistent() {
        let f = |t: f64| (t - 2.0) * (t - 2.0) + 0.3 * t;
        let coarse = minimize_scalar(f, 0.0, HiPolicy::Expand, 1e-6).unwrap();
        let fine = minimize_scalar(f, 0.0, HiPolicy::Expand, 5e-7).unwrap();
        assert!((coarse.arg - fine.arg).abs() < 1e-6 * coarse.arg.abs().max(1.0));
    }

    #[test]
    fn expansion_cap_errors() {
        // strictly decreasing objective never brackets a minimum
        let r = minimize_scalar(|t| -t, 0.0, HiPolicy::Expand, 1e-9);
        assert!(matches!(r, Err(Error::Numerical(_))));
    }

    #[test]
    fn rejects_too_small_tolerance() {
        let r = minimize_scalar(|t| t * t, 0.0, HiPolicy::Expand, 1e-13);
        assert!(r.is_err());
    }
}
