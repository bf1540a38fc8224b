//! Finite-dimensional Gaussian rate-function machinery.
//!
//! The rate function of a Gaussian vector with mean `μ` and covariance `Σ` is
//!
//! ```text
//! Λ(x) = 1/2 (x − μ)' Σ⁻¹ (x − μ)
//! ```
//!
//! [`quadrant_rate`] minimizes `Λ` over a componentwise-lower-bounded region
//! `{x : x ≥ a}`. At the optimum the gradient `Σ⁻¹(x − μ)` is supported on
//! the active constraints with nonnegative multipliers, which makes the dual
//! a bound-constrained quadratic program in the multipliers:
//!
//! ```text
//! max_{λ ≥ 0}  λ'(a − μ) − 1/2 λ' Σ λ,     x = μ + Σλ
//! ```
//!
//! Small problems are solved by exhaustive active-set enumeration; larger
//! ones by Lawson–Hanson iteration on the dual, with the enumeration as the
//! test oracle.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::variance::VarianceModel;

/// Dimension up to which [`quadrant_rate`] enumerates all active sets.
pub const ENUMERATION_LIMIT: usize = 4;
/// Relative jitter applied to a singular active-set block before failing.
const JITTER_REL: f64 = 1e-12;
/// Relative clamp applied to degenerate `s` arguments of [`sigma2`].
pub const SIGMA_CLAMP: f64 = 1e-9;

/// Minimization of a Gaussian rate function over `{x : x ≥ thresholds}`.
#[derive(Debug, Clone)]
pub struct QuadrantProblem {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub thresholds: DVector<f64>,
}

impl QuadrantProblem {
    /// Validates dimensions and symmetry (within `1e-12` of the largest
    /// entry) and symmetrizes the covariance. Positive semidefiniteness is
    /// enforced at solve time through jittered Cholesky factorizations.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, thresholds: DVector<f64>) -> Result<Self> {
        let m = mean.len();
        if m == 0 {
            return Err(Error::param("mean", "dimension must be at least 1"));
        }
        if cov.nrows() != m || cov.ncols() != m || thresholds.len() != m {
            return Err(Error::param(
                "cov",
                format!("dimension mismatch: mean {m}, cov {}x{}, thresholds {}", cov.nrows(), cov.ncols(), thresholds.len()),
            ));
        }
        let scale = cov.amax().max(1e-300);
        for i in 0..m {
            for j in (i + 1)..m {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale.max(1.0) {
                    return Err(Error::param("cov", format!("not symmetric at ({i},{j})")));
                }
            }
        }
        let cov = 0.5 * (&cov + cov.transpose());
        Ok(Self { mean, cov, thresholds })
    }

    fn scale(&self) -> f64 {
        1.0 + self.mean.amax().max(self.thresholds.amax())
    }
}

/// Solution of a [`QuadrantProblem`].
#[derive(Debug, Clone)]
pub struct RateSolution {
    /// Minimum of the rate function over the region.
    pub value: f64,
    pub argmin: DVector<f64>,
    /// Constraint indices met with equality (within `1e-9` scaled).
    pub active: Vec<usize>,
    /// A singular active-set block was regularized with jitter.
    pub jittered: bool,
}

fn chol_solve(block: &DMatrix<f64>, rhs: &DVector<f64>, jittered: &mut bool) -> Result<DVector<f64>> {
    if let Some(ch) = block.clone().cholesky() {
        return Ok(ch.solve(rhs));
    }
    *jittered = true;
    let jitter = JITTER_REL * block.trace().max(1e-300);
    let mut reg = block.clone();
    for i in 0..reg.nrows() {
        reg[(i, i)] += jitter;
    }
    match reg.cholesky() {
        Some(ch) => Ok(ch.solve(rhs)),
        None => Err(Error::SingularCovariance(format!(
            "active-set block of size {} remains singular after jitter {jitter:e}",
            block.nrows()
        ))),
    }
}

fn gather(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

fn gather_block(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn finish(p: &QuadrantProblem, value: f64, argmin: DVector<f64>, jittered: bool) -> RateSolution {
    let tol = 1e-9 * p.scale();
    let active = (0..argmin.len())
        .filter(|&i| (argmin[i] - p.thresholds[i]).abs() <= tol)
        .collect();
    RateSolution { value: value.max(0.0), argmin, active, jittered }
}

/// Exhaustive active-set enumeration; exact for any PSD covariance but
/// exponential in the dimension. Candidate sets are visited smallest first,
/// lexicographic within a size, and the first KKT-consistent one wins.
pub fn quadrant_rate_enumerated(p: &QuadrantProblem) -> Result<RateSolution> {
    let m = p.mean.len();
    let tol = 1e-9 * p.scale();
    let mut jittered = false;
    let mut masks: Vec<u32> = (0..(1u32 << m)).collect();
    masks.sort_by_key(|&mask| (mask.count_ones(), mask));
    for mask in masks {
        let active: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let free: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 0).collect();
        if active.is_empty() {
            if (0..m).all(|i| p.mean[i] >= p.thresholds[i] - tol) {
                return Ok(finish(p, 0.0, p.mean.clone(), jittered));
            }
            continue;
        }
        let block = gather_block(&p.cov, &active, &active);
        let r = gather(&p.thresholds, &active) - gather(&p.mean, &active);
        let w = match chol_solve(&block, &r, &mut jittered) {
            Ok(w) => w,
            Err(_) if mask + 1 < (1u32 << m) => continue,
            Err(e) => return Err(e),
        };
        let w_tol = 1e-10 * (1.0 + w.amax());
        if w.iter().any(|&wi| wi < -w_tol) {
            continue;
        }
        let mut x = p.mean.clone();
        for &i in &active {
            x[i] = p.thresholds[i];
        }
        // free block sits at its conditional mean given the active block
        if !free.is_empty() {
            let cross = gather_block(&p.cov, &free, &active);
            let adj = cross * &w;
            for (k, &i) in free.iter().enumerate() {
                x[i] += adj[k];
            }
        }
        if free.iter().any(|&i| x[i] < p.thresholds[i] - tol) {
            continue;
        }
        let value = 0.5 * r.dot(&w);
        return Ok(finish(p, value, x, jittered));
    }
    Err(Error::Numerical("active-set enumeration exhausted without a KKT point".into()))
}

/// Lawson–Hanson iteration on the dual; scales to a few hundred constraints.
pub fn quadrant_rate_active_set(p: &QuadrantProblem) -> Result<RateSolution> {
    let m = p.mean.len();
    let d = &p.thresholds - &p.mean;
    let tol = 1e-10 * (1.0 + d.amax());
    let mut jittered = false;
    let mut lambda = DVector::<f64>::zeros(m);
    let mut passive: Vec<usize> = Vec::new();
    let mut in_passive = vec![false; m];
    let mut cov_lambda = DVector::<f64>::zeros(m);

    for _outer in 0..(10 * m + 50) {
        // gradient of the dual objective; also the primal violation a - x
        let mut best_i = None;
        let mut best_g = tol;
        for i in 0..m {
            if in_passive[i] {
                continue;
            }
            let g = d[i] - cov_lambda[i];
            if g > best_g {
                best_g = g;
                best_i = Some(i);
            }
        }
        let Some(enter) = best_i else {
            break;
        };
        passive.push(enter);
        in_passive[enter] = true;

        for _inner in 0..(2 * m + 20) {
            let block = gather_block(&p.cov, &passive, &passive);
            let rhs = gather(&d, &passive);
            let z = chol_solve(&block, &rhs, &mut jittered)?;
            if z.iter().all(|&zi| zi > 0.0) {
                for (k, &i) in passive.iter().enumerate() {
                    lambda[i] = z[k];
                }
                break;
            }
            // step toward z until the first passive multiplier hits zero
            let mut alpha = 1.0f64;
            for (k, &i) in passive.iter().enumerate() {
                if z[k] <= 0.0 {
                    let denom = lambda[i] - z[k];
                    if denom > 0.0 {
                        alpha = alpha.min(lambda[i] / denom);
                    }
                }
            }
            for (k, &i) in passive.iter().enumerate() {
                lambda[i] += alpha * (z[k] - lambda[i]);
            }
            let drop_tol = 1e-12 * (1.0 + lambda.amax());
            let mut k = 0;
            while k < passive.len() {
                let i = passive[k];
                if lambda[i] <= drop_tol {
                    lambda[i] = 0.0;
                    in_passive[i] = false;
                    passive.swap_remove(k);
                } else {
                    k += 1;
                }
            }
            if passive.is_empty() {
                break;
            }
        }

        cov_lambda = &p.cov * &lambda;
    }

    let x = &p.mean + &cov_lambda;
    let value = lambda.dot(&d) - 0.5 * lambda.dot(&cov_lambda);
    Ok(finish(p, value, x, jittered))
}

/// Minimize the Gaussian rate function over `{x : x ≥ thresholds}`.
pub fn quadrant_rate(p: &QuadrantProblem) -> Result<RateSolution> {
    if p.mean.len() <= ENUMERATION_LIMIT {
        quadrant_rate_enumerated(p)
    } else {
        quadrant_rate_active_set(p)
    }
}

/// Joint covariance of the cumulative traffic at two positive times,
/// `[[v(t), Γ(s,t)], [Γ(s,t), v(s)]]`.
#[derive(Debug, Clone, Copy)]
pub struct Sigma2 {
    pub matrix: Matrix2<f64>,
    /// `s` after clamping into `[εt, (1−ε)t]`.
    pub s: f64,
    pub clamped: bool,
    /// Determinant below `1e-12·v(s)v(t)`; downstream solves will jitter.
    pub near_singular: bool,
}

/// Assemble `Σ(s,t)` with the degenerate endpoints `s → 0` and `s → t`
/// clamped at relative distance [`SIGMA_CLAMP`].
pub fn sigma2(model: &VarianceModel, s: f64, t: f64) -> Sigma2 {
    debug_assert!(t > 0.0);
    let lo = SIGMA_CLAMP * t;
    let hi = (1.0 - SIGMA_CLAMP) * t;
    let sc = s.clamp(lo, hi);
    let vt = model.value(t);
    let vs = model.value(sc);
    let g = model.gamma(sc, t);
    let det = vt * vs - g * g;
    Sigma2 {
        matrix: Matrix2::new(vt, g, g, vs),
        s: sc,
        clamped: sc != s,
        near_singular: det <= 1e-8 * vt * vs,
    }
}

/// Conditional-mean path for up to two pinned constraint times.
///
/// Pins the centered cumulative process to `A(τ_j) = x_j` and evaluates
/// `f(r) = −E(A(r,0) | constraints) = −Σ_j θ_j Γ(−r, τ_j)` with `θ = Σ⁻¹x`.
#[derive(Debug, Clone)]
pub struct ConditionalPath {
    model: VarianceModel,
    taus: Vec<f64>,
    thetas: Vec<f64>,
}

impl ConditionalPath {
    pub fn new(model: &VarianceModel, constraints: &[(f64, f64)]) -> Result<Self> {
        if constraints.is_empty() || constraints.len() > 2 {
            return Err(Error::param("constraints", format!("expected 1 or 2 constraints, got {}", constraints.len())));
        }
        for &(tau, _) in constraints {
            if !(tau > 0.0) {
                return Err(Error::param("constraints", format!("constraint times must be positive, got {tau}")));
            }
        }
        let thetas = match constraints {
            [(tau, x)] => {
                let v = model.value(*tau);
                if v <= 0.0 {
                    return Err(Error::SingularCovariance(format!("v({tau}) = {v}")));
                }
                vec![x / v]
            }
            [(tau1, x1), (tau2, x2)] => {
                if tau1 == tau2 {
                    return Err(Error::param("constraints", "constraint times must be distinct"));
                }
                let cov = Matrix2::new(
                    model.value(*tau1),
                    model.gamma(*tau1, *tau2),
                    model.gamma(*tau1, *tau2),
                    model.value(*tau2),
                );
                let rhs = Vector2::new(*x1, *x2);
                let theta = cov
                    .lu()
                    .solve(&rhs)
                    .ok_or_else(|| Error::SingularCovariance("constraint covariance is singular".into()))?;
                vec![theta[0], theta[1]]
            }
            _ => unreachable!(),
        };
        Ok(Self {
            model: model.clone(),
            taus: constraints.iter().map(|c| c.0).collect(),
            thetas,
        })
    }

    /// Multipliers `θ = Σ⁻¹ x` of the pinned constraints.
    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// `f(r)` for `r ≤ 0` in centered units; `f(0) = 0`, `f(−τ_j) = −x_j`.
    pub fn value(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        for (tau, theta) in self.taus.iter().zip(&self.thetas) {
            acc -= theta * self.model.gamma(-r, *tau);
        }
        acc
    }
}

/// `f(r) = −E(A(r,0) | A(τ_j) = x_j ∀j)` for the centered process.
pub fn conditional_path_value(model: &VarianceModel, constraints: &[(f64, f64)], r: f64) -> Result<f64> {
    if r > 0.0 {
        return Err(Error::param("r", format!("path times must be nonpositive, got {r}")));
    }
    Ok(ConditionalPath::new(model, constraints)?.value(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn problem(mean: &[f64], cov: &[&[f64]], a: &[f64]) -> QuadrantProblem {
        let m = mean.len();
        QuadrantProblem::new(
            DVector::from_row_slice(mean),
            DMatrix::from_fn(m, m, |i, j| cov[i][j]),
            DVector::from_row_slice(a),
        )
        .unwrap()
    }

    #[test]
    fn feasible_origin_costs_nothing() {
        let p = problem(&[0.0, 0.0], &[&[2.0, 1.0], &[1.0, 1.0]], &[-1.0, -1.0]);
        let s = quadrant_rate(&p).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(s.active.is_empty());
        assert_relative_eq!(s.argmin[0], 0.0);
    }

    #[test]
    fn independent_coordinates_split() {
        let p = problem(&[0.0, 0.0], &[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, -5.0]);
        let s = quadrant_rate(&p).unwrap();
        assert_relative_eq!(s.value, 0.5, max_relative = 1e-12);
        assert_relative_eq!(s.argmin[0], 1.0);
        assert_relative_eq!(s.argmin[1], 0.0);
        assert_eq!(s.active, vec![0]);
    }

    #[test]
    fn corner_solution_by_hand() {
        // Σ = [[2,1],[1,1]], a = (1,1): Σ⁻¹ = [[1,-1],[-1,2]], the corner
        // (1,1) costs 1/2 and both constraints are met with equality.
        let p = problem(&[0.0, 0.0], &[&[2.0, 1.0], &[1.0, 1.0]], &[1.0, 1.0]);
        let s = quadrant_rate(&p).unwrap();
        assert_relative_eq!(s.value, 0.5, max_relative = 1e-12);
        assert_relative_eq!(s.argmin[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(s.argmin[1], 1.0, epsilon = 1e-10);
        assert_eq!(s.active, vec![0, 1]);
    }

    #[test]
    fn value_equals_rate_function_at_argmin() {
        let p = problem(&[0.1, -0.2, 0.3], &[&[2.0, 0.5, 0.2], &[0.5, 1.0, 0.1], &[0.2, 0.1, 1.5]], &[1.0, 0.5, 0.4]);
        let s = quadrant_rate(&p).unwrap();
        let d = &s.argmin - &p.mean;
        let direct = 0.5 * d.dot(&p.cov.clone().cholesky().unwrap().solve(&d));
        assert_relative_eq!(s.value, direct, max_relative = 1e-10);
    }

    #[test]
    fn active_set_matches_enumeration() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..300 {
            let m = rng.random_range(1..=4);
            let f = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
            let cov = &f * f.transpose() + DMatrix::identity(m, m) * 0.05;
            let mean = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
            let a = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.5));
            let p = QuadrantProblem::new(mean, cov, a).unwrap();
            let e = quadrant_rate_enumerated(&p).unwrap();
            let l = quadrant_rate_active_set(&p).unwrap();
            assert_relative_eq!(e.value, l.value, epsilon = 1e-8, max_relative = 1e-8);
            for i in 0..m {
                assert_relative_eq!(e.argmin[i], l.argmin[i], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn raising_thresholds_never_decreases_value() {
        let p0 = problem(&[0.0, 0.0], &[&[2.0, 1.0], &[1.0, 1.0]], &[0.5, 0.2]);
        let v0 = quadrant_rate(&p0).unwrap().value;
        for i in 0..2 {
            let mut p = p0.clone();
            p.thresholds[i] += 0.3;
            assert!(quadrant_rate(&p).unwrap().value >= v0 - 1e-12);
        }
    }

    #[test]
    fn rejects_asymmetric_covariance() {
        let r = QuadrantProblem::new(
            DVector::from_row_slice(&[0.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]),
            DVector::from_row_slice(&[0.0, 0.0]),
        );
        assert!(r.is_err());
    }

    #[test]
    fn sigma2_brownian() {
        let m = VarianceModel::brownian(1.0).unwrap();
        let s = sigma2(&m, 1.0, 2.0);
        assert!(!s.clamped);
        assert_relative_eq!(s.matrix[(0, 0)], 2.0);
        assert_relative_eq!(s.matrix[(0, 1)], 1.0);
        assert_relative_eq!(s.matrix[(1, 1)], 1.0);
    }

    #[test]
    fn sigma2_clamps_and_flags_degenerate_input() {
        let m = VarianceModel::brownian(1.0).unwrap();
        let s = sigma2(&m, 2.0, 2.0);
        assert!(s.clamped);
        assert!(s.near_singular);
        assert!(s.s < 2.0);
        let z = sigma2(&m, 0.0, 2.0);
        assert!(z.clamped);
        assert!(z.s > 0.0);
    }

    #[test]
    fn sigma2_fbm() {
        let m = VarianceModel::fbm(1.0, 0.75).unwrap();
        let s = sigma2(&m, 1.0, 2.0);
        assert_relative_eq!(s.matrix[(0, 0)], 2.0f64.powf(1.5), max_relative = 1e-14);
        assert_relative_eq!(s.matrix[(0, 1)], std::f64::consts::SQRT_2, max_relative = 1e-14);
    }

    #[test]
    fn conditional_path_single_constraint_shape() {
        // one pinned value reproduces f(r) = -(Γ(-r,τ)/v(τ))·x
        let m = VarianceModel::mg_exp(0.125, 2.0).unwrap();
        let (tau, x) = (3.0, 2.5);
        for &r in &[-0.5, -1.5, -3.0, -4.0] {
            let f = conditional_path_value(&m, &[(tau, x)], r).unwrap();
            assert_relative_eq!(f, -m.gamma(-r, tau) / m.value(tau) * x, max_relative = 1e-12);
        }
        assert_eq!(conditional_path_value(&m, &[(tau, x)], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn conditional_path_interpolates_constraints() {
        let m = VarianceModel::fbm(1.0, 0.7).unwrap();
        let cons = [(4.0, 3.0), (1.5, 0.9)];
        for &(tau, x) in &cons {
            let f = conditional_path_value(&m, &cons, -tau).unwrap();
            assert_relative_eq!(f, -x, max_relative = 1e-9);
        }
    }

    #[test]
    fn conditional_path_rejects_bad_input() {
        let m = VarianceModel::brownian(1.0).unwrap();
        assert!(conditional_path_value(&m, &[], -1.0).is_err());
        assert!(conditional_path_value(&m, &[(1.0, 1.0), (1.0, 2.0)], -1.0).is_err());
        assert!(conditional_path_value(&m, &[(1.0, 1.0)], 0.5).is_err());
    }
}
