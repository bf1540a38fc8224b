//! Monte Carlo overflow simulator.
//!
//! Simulates the aggregate of `n` i.i.d. Gaussian sources as a single
//! Gaussian path with variance `n·v(·)` and drift `nμt` — exact in
//! distribution and `n` times cheaper than per-source sampling. Increments
//! on a uniform grid form a stationary sequence with autocovariance
//!
//! ```text
//! γ(h) = (v((h+1)Δ) − 2v(hΔ) + v((h−1)Δ)) / 2,   γ(0) = v(Δ),
//! ```
//!
//! sampled exactly through circulant embedding of the covariance (FFT of
//! the symmetrized first row gives the eigenvalues; one forward and one
//! inverse transform per path). Queue contents follow from the discretized
//! difference of the total-queue and first-queue suprema; the equivalent
//! forward Lindley recursion is kept alongside and asserted against it.
//!
//! Sample `i` draws from a generator seeded by `mix64(seed + i)`, so the
//! merged estimate is reproducible bit-for-bit and independent of how
//! samples are distributed over worker threads.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::SystemRef;
use crate::tandem::TandemSystem;
use crate::variance::VarianceModel;

/// Monte Carlo configuration.
#[derive(Debug, Clone, Serialize)]
pub struct McConfig {
    /// Source counts for the decay-slope fit.
    pub n_values: Vec<u32>,
    /// Time step of the increment grid.
    pub dt: f64,
    /// Window length; the supremum in the queue representation is
    /// truncated here (default four optimizer horizons, and twenty minimum
    /// horizons for tandem systems).
    pub horizon: f64,
    /// Paths per estimate (at least 10⁴).
    pub samples: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn for_tandem(sys: &TandemSystem, t_star: f64, samples: usize, seed: u64, n_values: Vec<u32>) -> Self {
        Self {
            n_values,
            dt: t_star / 64.0,
            horizon: (4.0 * t_star).max(20.0 * sys.t0()),
            samples,
            seed,
        }
    }

    pub fn for_priority(t_star: f64, samples: usize, seed: u64, n_values: Vec<u32>) -> Self {
        Self {
            n_values,
            dt: t_star / 64.0,
            horizon: 8.0 * t_star,
            samples,
            seed,
        }
    }
}

/// Estimated overflow probability with a 95% binomial half-width
/// (rule-of-three upper bound when no overflow was observed).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub half_width: f64,
    pub exceedances: usize,
    pub samples: usize,
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Exact sampler for a stationary Gaussian increment sequence.
struct IncrementSampler {
    steps: usize,
    embed_len: usize,
    /// Square roots of the circulant eigenvalues; empty for the
    /// independent-increment fast path.
    sqrt_eig: Vec<f64>,
    iid_sd: f64,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl IncrementSampler {
    fn new(v: &VarianceModel, dt: f64, steps: usize) -> Result<Self> {
        assert!(steps >= 2);
        let mut gamma = Vec::with_capacity(steps);
        gamma.push(v.value(dt));
        for h in 1..steps {
            let hm = (h - 1) as f64 * dt;
            let h0 = h as f64 * dt;
            let hp = (h + 1) as f64 * dt;
            gamma.push(0.5 * (v.value(hp) - 2.0 * v.value(h0) + v.value(hm)));
        }
        let mut planner = FftPlanner::new();
        let embed_len = 2 * steps - 2;
        let fft_fwd = planner.plan_fft_forward(embed_len);
        let fft_inv = planner.plan_fft_inverse(embed_len);

        let max_lag = gamma[1..].iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if max_lag <= 1e-15 * gamma[0] {
            return Ok(Self {
                steps,
                embed_len,
                sqrt_eig: Vec::new(),
                iid_sd: gamma[0].sqrt(),
                fft_fwd,
                fft_inv,
            });
        }

        let eigenvalues = |g0: f64| -> Vec<f64> {
            let mut row: Vec<Complex<f64>> = Vec::with_capacity(embed_len);
            row.push(Complex::new(g0, 0.0));
            for h in 1..steps {
                row.push(Complex::new(gamma[h], 0.0));
            }
            for h in (1..steps - 1).rev() {
                row.push(Complex::new(gamma[h], 0.0));
            }
            let mut scratch = vec![Complex::new(0.0, 0.0); fft_fwd.get_inplace_scratch_len()];
            fft_fwd.process_with_scratch(&mut row, &mut scratch);
            row.iter().map(|c| c.re).collect()
        };

        let mut eig = eigenvalues(gamma[0]);
        let floor = -1e-8 * eig.iter().cloned().fold(0.0f64, f64::max);
        if eig.iter().any(|&e| e < floor) {
            // one round of diagonal jitter before giving up
            eig = eigenvalues(gamma[0] * (1.0 + 1e-12) + 1e-12 * gamma[0]);
            if eig.iter().any(|&e| e < floor) {
                return Err(Error::SingularCovariance(format!(
                    "circulant embedding of the increment covariance is not PSD (min eigenvalue {:.3e})",
                    eig.iter().cloned().fold(f64::INFINITY, f64::min)
                )));
            }
        }
        Ok(Self {
            steps,
            embed_len,
            sqrt_eig: eig.iter().map(|e| e.max(0.0).sqrt()).collect(),
            iid_sd: 0.0,
            fft_fwd,
            fft_inv,
        })
    }

    fn scratch_len(&self) -> usize {
        self.fft_fwd
            .get_inplace_scratch_len()
            .max(self.fft_inv.get_inplace_scratch_len())
    }

    /// One path of `steps` increments (unit-count source, zero mean).
    fn sample_into(
        &self,
        rng: &mut ChaCha8Rng,
        out: &mut [f64],
        buf: &mut [Complex<f64>],
        scratch: &mut [Complex<f64>],
    ) {
        if self.sqrt_eig.is_empty() {
            for o in out.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *o = self.iid_sd * z;
            }
            return;
        }
        for b in buf.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *b = Complex::new(z, 0.0);
        }
        self.fft_fwd.process_with_scratch(buf, scratch);
        for (b, s) in buf.iter_mut().zip(&self.sqrt_eig) {
            *b *= *s;
        }
        self.fft_inv.process_with_scratch(buf, scratch);
        let norm = 1.0 / self.embed_len as f64;
        for (o, b) in out.iter_mut().zip(buf.iter()) {
            *o = b.re * norm;
        }
        debug_assert!(out.len() == self.steps);
    }
}

/// `max_k (S_k − c·k·Δ)` over the window, `S_k` the sum of the `k` most
/// recent increments.
fn backward_sup(inc: &[f64], c_dt: f64) -> f64 {
    let mut sum = 0.0;
    let mut sup = 0.0f64;
    for (j, &x) in inc.iter().enumerate() {
        sum += x;
        sup = sup.max(sum - c_dt * (j + 1) as f64);
    }
    sup
}

/// Forward Lindley recursion over the same window, oldest increment first;
/// equal to [`backward_sup`] by rearrangement.
#[allow(dead_code)]
pub(crate) fn lindley_sup(inc: &[f64], c_dt: f64) -> f64 {
    let mut w = 0.0f64;
    for &x in inc.iter().rev() {
        w = (w + x - c_dt).max(0.0);
    }
    w
}

fn validate(cfg: &McConfig) -> Result<()> {
    if cfg.samples < 10_000 {
        return Err(Error::param("samples", format!("need at least 10^4 samples, got {}", cfg.samples)));
    }
    if !(cfg.dt > 0.0) {
        return Err(Error::param("dt", format!("must be positive, got {}", cfg.dt)));
    }
    if cfg.horizon < 200.0 * cfg.dt {
        return Err(Error::param(
            "horizon",
            format!("window of {} steps is too short; need horizon >= 200·dt", (cfg.horizon / cfg.dt) as usize),
        ));
    }
    Ok(())
}

/// Estimate the overflow probability of the target queue with `n` sources.
pub fn mc_overflow(sys: SystemRef<'_>, n: u32, cfg: &McConfig) -> Result<McEstimate> {
    validate(cfg)?;
    if n == 0 {
        return Err(Error::param("n", "source count must be positive"));
    }
    let steps = (cfg.horizon / cfg.dt).ceil() as usize;
    let nf = n as f64;
    let sqrt_n = nf.sqrt();

    let exceedances = match sys {
        SystemRef::Tandem(t) => {
            let sampler = IncrementSampler::new(&t.source.variance, cfg.dt, steps)?;
            let drift = nf * t.source.mean_rate * cfg.dt;
            let (c1dt, c2dt) = (nf * t.c1 * cfg.dt, nf * t.c2 * cfg.dt);
            let level = nf * t.buffer;
            (0..cfg.samples)
                .into_par_iter()
                .map_init(
                    || {
                        (
                            vec![0.0f64; steps],
                            vec![Complex::new(0.0, 0.0); sampler.embed_len],
                            vec![Complex::new(0.0, 0.0); sampler.scratch_len()],
                        )
                    },
                    |(inc, buf, scratch), i| {
                        let mut rng = ChaCha8Rng::seed_from_u64(mix64(cfg.seed.wrapping_add(i as u64)));
                        sampler.sample_into(&mut rng, inc, buf, scratch);
                        for x in inc.iter_mut() {
                            *x = *x * sqrt_n + drift;
                        }
                        let q_total = backward_sup(inc, c2dt);
                        let q_first = backward_sup(inc, c1dt);
                        usize::from(q_total - q_first > level)
                    },
                )
                .sum::<usize>()
        }
        SystemRef::Priority(p) => {
            let hs = IncrementSampler::new(&p.high.variance, cfg.dt, steps)?;
            let ls = IncrementSampler::new(&p.low.variance, cfg.dt, steps)?;
            let drift_h = nf * p.high.mean_rate * cfg.dt;
            let drift_l = nf * p.low.mean_rate * cfg.dt;
            let cdt = nf * p.link_rate * cfg.dt;
            let level = nf * p.buffer;
            let embed = hs.embed_len.max(ls.embed_len);
            let scratch_len = hs.scratch_len().max(ls.scratch_len());
            (0..cfg.samples)
                .into_par_iter()
                .map_init(
                    || {
                        (
                            vec![0.0f64; steps],
                            vec![0.0f64; steps],
                            vec![Complex::new(0.0, 0.0); embed],
                            vec![Complex::new(0.0, 0.0); scratch_len],
                        )
                    },
                    |(inc_h, inc_l, buf, scratch), i| {
                        let mut rng = ChaCha8Rng::seed_from_u64(mix64(cfg.seed.wrapping_add(i as u64)));
                        hs.sample_into(&mut rng, inc_h, &mut buf[..hs.embed_len], scratch);
                        ls.sample_into(&mut rng, inc_l, &mut buf[..ls.embed_len], scratch);
                        for x in inc_h.iter_mut() {
                            *x = *x * sqrt_n + drift_h;
                        }
                        for (xl, &xh) in inc_l.iter_mut().zip(inc_h.iter()) {
                            // store the aggregate in the low buffer
                            *xl = *xl * sqrt_n + drift_l + xh;
                        }
                        let q_total = backward_sup(inc_l, cdt);
                        let q_high = backward_sup(inc_h, cdt);
                        usize::from(q_total - q_high > level)
                    },
                )
                .sum::<usize>()
        }
    };

    let p_hat = exceedances as f64 / cfg.samples as f64;
    let half_width = if exceedances == 0 {
        3.0 / cfg.samples as f64
    } else {
        1.96 * (p_hat * (1.0 - p_hat) / cfg.samples as f64).sqrt()
    };
    Ok(McEstimate { p_hat, half_width, exceedances, samples: cfg.samples })
}

/// Least-squares slope of `−log p̂(n)` against `n`.
#[derive(Debug, Clone, Serialize)]
pub struct DecaySlope {
    pub slope: f64,
    pub std_err: f64,
    /// `(n, p̂, half-width)` for each usable source count.
    pub points: Vec<(u32, f64, f64)>,
}

/// Estimate the decay rate by regressing `−log p̂` on the source count.
/// Needs at least three counts with observed overflows.
pub fn mc_decay_fit(sys: SystemRef<'_>, cfg: &McConfig) -> Result<DecaySlope> {
    let mut points = Vec::new();
    for &n in &cfg.n_values {
        let est = mc_overflow(sys, n, cfg)?;
        if est.p_hat > 0.0 {
            points.push((n, est.p_hat, est.half_width));
        }
    }
    if points.len() < 3 {
        return Err(Error::Numerical(format!(
            "decay fit needs at least 3 source counts with observed overflows, got {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| -p.1.ln()).collect();
    let k = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / k;
    let y_mean = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let dof = (xs.len() as f64 - 2.0).max(1.0);
    let std_err = (ss_res / dof / sxx).sqrt();
    Ok(DecaySlope { slope, std_err, points })
}
