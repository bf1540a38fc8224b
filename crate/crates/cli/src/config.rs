//! JSON job specifications and their conversion into solver inputs.

use serde::Deserialize;

use gqdecay::{PrioritySystem, SourceModel, TandemSystem, VarianceModel};

/// One job: a source model, exactly one system block, and options.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    /// Source model for fifo/tandem/tandem_chain jobs.
    pub model: Option<ModelSpec>,
    /// Mean rate of that source (defaults to 0).
    pub mean_rate: Option<f64>,
    pub fifo: Option<FifoSpec>,
    pub tandem: Option<TandemSpec>,
    pub tandem_chain: Option<ChainSpec>,
    pub priority: Option<PrioritySpec>,
    #[serde(default)]
    pub options: Options,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Brownian { sigma2: f64 },
    Fbm { sigma2: f64, hurst: f64 },
    MgExp { lambda: f64, delta: f64 },
    MgHyper { lambda: f64, delta: f64, p1: f64, nu1: f64 },
    MgPareto { lambda: f64, delta: f64 },
    /// Session-length tail given as sampled points `[t, P(D>t)]`,
    /// log-linearly interpolated and exponentially extrapolated.
    MgGeneral { lambda: f64, delta: f64, tail_points: Vec<(f64, f64)> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FifoSpec {
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TandemSpec {
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub b: f64,
    pub rates: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrioritySpec {
    pub b: f64,
    pub c: f64,
    pub hp: ClassSpec,
    pub lp: ClassSpec,
    /// Low-priority source count per high-priority source.
    pub alpha: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub model: ModelSpec,
    pub mean_rate: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    /// Samples per most-probable path.
    pub grid: usize,
    pub seed: u64,
    /// Run oracles during `verify` even without flags.
    pub oracle: bool,
    pub qp_s_points: usize,
    pub qp_levels: usize,
    pub mc_samples: usize,
    /// Source counts for the decay fit; empty means pick them so that
    /// `n·J` spans roughly 3–7.
    pub mc_n_values: Vec<u32>,
    /// Relative tolerance for grid-oracle agreement in `verify`.
    pub verify_qp_tol: f64,
    /// Relative tolerance for the Monte Carlo slope in `verify`.
    pub verify_mc_tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            grid: 512,
            seed: 0x6d637264,
            oracle: false,
            qp_s_points: 16,
            qp_levels: 4,
            mc_samples: 100_000,
            mc_n_values: Vec::new(),
            verify_qp_tol: 0.02,
            verify_mc_tol: 0.25,
        }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<VarianceModel, gqdecay::Error> {
        match self {
            ModelSpec::Brownian { sigma2 } => VarianceModel::brownian(*sigma2),
            ModelSpec::Fbm { sigma2, hurst } => VarianceModel::fbm(*sigma2, *hurst),
            ModelSpec::MgExp { lambda, delta } => VarianceModel::mg_exp(*lambda, *delta),
            ModelSpec::MgHyper { lambda, delta, p1, nu1 } => VarianceModel::mg_hyper(*lambda, *delta, *p1, *nu1),
            ModelSpec::MgPareto { lambda, delta } => VarianceModel::mg_pareto(*lambda, *delta),
            ModelSpec::MgGeneral { lambda, delta, tail_points } => {
                let tail = sampled_tail(tail_points)?;
                VarianceModel::mg_general(*lambda, *delta, tail, None)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ModelSpec::Brownian { sigma2 } => format!("brownian sigma2={sigma2}"),
            ModelSpec::Fbm { sigma2, hurst } => format!("fbm sigma2={sigma2} H={hurst}"),
            ModelSpec::MgExp { lambda, delta } => format!("mg_exp lambda={lambda} delta={delta}"),
            ModelSpec::MgHyper { lambda, delta, p1, nu1 } => {
                format!("mg_hyper lambda={lambda} delta={delta} p1={p1} nu1={nu1}")
            }
            ModelSpec::MgPareto { lambda, delta } => format!("mg_pareto lambda={lambda} delta={delta}"),
            ModelSpec::MgGeneral { lambda, delta, tail_points } => {
                format!("mg_general lambda={lambda} delta={delta} ({} tail points)", tail_points.len())
            }
        }
    }
}

/// Log-linear interpolation of sampled tail points; exponential
/// extrapolation beyond the last point using the final segment's slope.
fn sampled_tail(points: &[(f64, f64)]) -> Result<impl Fn(f64) -> f64 + 'static, gqdecay::Error> {
    if points.len() < 2 {
        return Err(gqdecay::Error::InvalidParameter {
            name: "tail_points",
            reason: "need at least two points".into(),
        });
    }
    let mut prev_t = f64::NEG_INFINITY;
    for &(t, p) in points {
        if t <= prev_t {
            return Err(gqdecay::Error::InvalidParameter {
                name: "tail_points",
                reason: format!("times must be strictly increasing near t = {t}"),
            });
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(gqdecay::Error::InvalidParameter {
                name: "tail_points",
                reason: format!("probabilities must lie in (0,1], got {p}"),
            });
        }
        prev_t = t;
    }
    let pts: Vec<(f64, f64)> = points.to_vec();
    let n = pts.len();
    let last_slope = (pts[n - 1].1.ln() - pts[n - 2].1.ln()) / (pts[n - 1].0 - pts[n - 2].0);
    Ok(move |t: f64| -> f64 {
        if t <= pts[0].0 {
            return pts[0].1;
        }
        if t >= pts[n - 1].0 {
            return pts[n - 1].1 * ((t - pts[n - 1].0) * last_slope).exp();
        }
        let idx = pts.partition_point(|&(pt, _)| pt <= t) - 1;
        let (t0, p0) = pts[idx];
        let (t1, p1) = pts[idx + 1];
        let w = (t - t0) / (t1 - t0);
        (p0.ln() * (1.0 - w) + p1.ln() * w).exp()
    })
}

impl JobSpec {
    /// Exactly one system block must be present.
    pub fn validate(&self) -> Result<(), String> {
        let blocks = [
            self.fifo.is_some(),
            self.tandem.is_some(),
            self.tandem_chain.is_some(),
            self.priority.is_some(),
        ];
        let count = blocks.iter().filter(|&&b| b).count();
        if count != 1 {
            return Err(format!(
                "exactly one of fifo/tandem/tandem_chain/priority must be present, found {count}"
            ));
        }
        if self.priority.is_none() && self.model.is_none() {
            return Err("a `model` block is required for fifo/tandem jobs".into());
        }
        Ok(())
    }

    pub fn source(&self) -> Result<SourceModel, gqdecay::Error> {
        let spec = self.model.as_ref().expect("validated");
        SourceModel::new(spec.build()?, self.mean_rate.unwrap_or(0.0))
    }

    pub fn tandem_system(&self) -> Result<TandemSystem, gqdecay::Error> {
        if let Some(t) = &self.tandem {
            return TandemSystem::new(t.b, t.c1, t.c2, self.source()?);
        }
        let chain = self.tandem_chain.as_ref().expect("validated");
        let (c1, c2) = gqdecay::reduce_tandem(&chain.rates, chain.rates.len())?;
        TandemSystem::new(chain.b, c1, c2, self.source()?)
    }

    pub fn priority_system(&self) -> Result<PrioritySystem, gqdecay::Error> {
        let p = self.priority.as_ref().expect("validated");
        let high = SourceModel::new(p.hp.model.build()?, p.hp.mean_rate)?;
        let low = SourceModel::new(p.lp.model.build()?, p.lp.mean_rate)?;
        match p.alpha {
            Some(a) => PrioritySystem::with_low_count_ratio(p.b, p.c, high, low, a),
            None => PrioritySystem::new(p.b, p.c, high, low),
        }
    }
}
