//! Batch front end: parse a JSON job spec, run the solvers and oracles,
//! emit human-readable reports, JSON, and CSV.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 numerical failure,
//! 3 oracle disagreement beyond the configured tolerance in `verify`.

mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{JobSpec, Options};
use gqdecay::oracle::{grid_qp_decay, mc_decay_fit, GridOracleConfig, McConfig, SystemRef};
use gqdecay::{
    fifo_decay, fifo_mpp, priority_decay, tandem_decay, tandem_mpp, validate_model, Error,
    Tightness,
};
use output::{path_csv, print_priority_report, print_tandem_report, regime_str, sig9, tightness_str};

#[derive(Parser)]
#[command(name = "gqdecay", version, about = "Overflow decay rates for Gaussian-fed FIFO, tandem and priority queues")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON job specification.
    #[arg(long)]
    config: PathBuf,
    /// Write the full report as JSON to this path.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Decay rate of a single FIFO queue.
    Fifo(Common),
    /// Lower bound for the second queue of a tandem (or reduced chain).
    Tandem(Common),
    /// Lower bound for the low-priority class of a priority link.
    Priority(Common),
    /// Most probable cumulative/rate path as CSV (`r,f,g`).
    Path {
        #[command(flatten)]
        common: Common,
        /// Samples along the path.
        #[arg(long)]
        grid: Option<usize>,
        /// Output CSV path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one parameter and write `param,J,t_star,s_star,regime,tight` CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary: one of b, c, c1, c2, mean_rate.
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run solvers plus the independent oracles and compare.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Run the dense-grid QP oracle.
        #[arg(long)]
        qp: bool,
        /// Run the Monte Carlo decay fit.
        #[arg(long)]
        mc: bool,
    },
    /// Check the model's standing assumptions on a sampled grid.
    ValidateModel {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100.0)]
        horizon: f64,
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
}

enum CliError {
    Input(String),
    Numerical(String),
    Disagreement(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::Unstable(_) | Error::DegenerateNode { .. } => {
                CliError::Input(e.to_string())
            }
            Error::SingularCovariance(_) | Error::Numerical(_) | Error::Quadrature { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Disagreement(msg)) => {
            eprintln!("oracle disagreement: {msg}");
            ExitCode::from(3)
        }
    }
}

fn load(path: &PathBuf) -> Result<JobSpec, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let spec: JobSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("invalid job spec: {e}")))?;
    spec.validate().map_err(CliError::Input)?;
    Ok(spec)
}

fn write_or_print(out: Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(&p, content)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn echo_settings(opts: &Options) {
    println!(
        "settings: grid={} seed={} qp_s_points={} qp_levels={} mc_samples={} rel_tol={:e}",
        opts.grid,
        opts.seed,
        opts.qp_s_points,
        opts.qp_levels,
        opts.mc_samples,
        gqdecay::numerics::DEFAULT_REL_TOL,
    );
}

fn maybe_json(path: Option<PathBuf>, value: serde_json::Value) -> Result<(), CliError> {
    if let Some(p) = path {
        let text = serde_json::to_string_pretty(&value)
            .map_err(|e| CliError::Numerical(format!("serialization: {e}")))?;
        fs::write(&p, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fifo(common) => {
            let spec = load(&common.config)?;
            let f = spec.fifo.as_ref().ok_or_else(|| CliError::Input("job has no `fifo` block".into()))?;
            let source = spec.source()?;
            let rep = fifo_decay(f.b, f.c, &source)?;
            echo_settings(&spec.options);
            println!("model: {} mean_rate={}", spec.model.as_ref().unwrap().describe(), source.mean_rate);
            println!("system: fifo b={} c={}", f.b, f.c);
            println!("decay rate: {}", sig9(rep.decay_rate));
            println!("t* = {}", sig9(rep.t_star));
            maybe_json(
                common.json,
                serde_json::json!({"kind": "fifo", "b": f.b, "c": f.c, "report": rep}),
            )
        }
        Command::Tandem(common) => {
            let spec = load(&common.config)?;
            let sys = spec.tandem_system()?;
            let rep = tandem_decay(&sys)?;
            echo_settings(&spec.options);
            println!("model: {} mean_rate={}", spec.model.as_ref().unwrap().describe(), sys.source.mean_rate);
            println!("system: tandem b={} c1={} c2={} (t0 = {})", sys.buffer, sys.c1, sys.c2, sig9(sys.t0()));
            print_tandem_report(&rep, sys.source.mean_rate);
            maybe_json(
                common.json,
                serde_json::json!({"kind": "tandem", "b": sys.buffer, "c1": sys.c1, "c2": sys.c2, "report": rep}),
            )
        }
        Command::Priority(common) => {
            let spec = load(&common.config)?;
            let psys = spec.priority_system()?;
            let rep = priority_decay(&psys)?;
            echo_settings(&spec.options);
            println!("system: priority b={} c={} mu={}", psys.buffer, psys.link_rate, psys.total_mean());
            print_priority_report(&rep);
            maybe_json(
                common.json,
                serde_json::json!({"kind": "priority", "b": psys.buffer, "c": psys.link_rate, "report": rep}),
            )
        }
        Command::Path { common, grid, out } => {
            let spec = load(&common.config)?;
            let grid = grid.unwrap_or(spec.options.grid);
            let path = if let Some(f) = &spec.fifo {
                let source = spec.source()?;
                let rep = fifo_decay(f.b, f.c, &source)?;
                fifo_mpp(f.b, f.c, &source, &rep, grid)?
            } else if spec.tandem.is_some() || spec.tandem_chain.is_some() {
                let sys = spec.tandem_system()?;
                let rep = tandem_decay(&sys)?;
                tandem_mpp(&sys, &rep, grid)?
            } else {
                return Err(CliError::Input("path output supports fifo and tandem jobs".into()));
            };
            write_or_print(out, &path_csv(&path))
        }
        Command::Sweep { common, param, from, to, steps, out } => {
            let spec = load(&common.config)?;
            if steps < 2 {
                return Err(CliError::Input("sweep needs at least 2 steps".into()));
            }
            let mut csv = String::from("param,J,t_star,s_star,regime,tight\n");
            for i in 0..steps {
                let x = from + (to - from) * i as f64 / (steps - 1) as f64;
                let row = sweep_row(&spec, &param, x)?;
                csv.push_str(&row);
            }
            write_or_print(out, &csv)
        }
        Command::Verify { common, qp, mc } => {
            let spec = load(&common.config)?;
            let run_qp = qp || spec.options.oracle;
            let run_mc = mc || spec.options.oracle;
            if !run_qp && !run_mc {
                return Err(CliError::Input("verify needs --qp and/or --mc (or options.oracle = true)".into()));
            }
            verify(&spec, run_qp, run_mc)
        }
        Command::ValidateModel { common, horizon, grid } => {
            let spec = load(&common.config)?;
            let model = spec
                .model
                .as_ref()
                .ok_or_else(|| CliError::Input("validate-model needs a `model` block".into()))?
                .build()?;
            let rep = validate_model(&model, horizon, grid)?;
            println!("model: {}", spec.model.as_ref().unwrap().describe());
            let checks = [
                ("v(0) = 0 and v > 0", &rep.positive),
                ("strictly increasing", &rep.increasing),
                ("sqrt(v) concave", &rep.sqrt_concave),
                ("sub-quadratic growth", &rep.subquadratic_growth),
            ];
            for (name, c) in checks {
                println!(
                    "{}: {} (worst margin {:.3e} at t = {})",
                    name,
                    if c.pass { "pass" } else { "FAIL" },
                    c.worst_margin,
                    sig9(c.worst_t)
                );
            }
            println!("overall: {}", if rep.all_pass() { "pass" } else { "FAIL" });
            maybe_json(common.json, serde_json::json!({"kind": "validate", "report": rep}))
        }
    }
}

fn sweep_row(spec: &JobSpec, param: &str, x: f64) -> Result<String, CliError> {
    if let Some(f) = &spec.fifo {
        let (mut b, mut c) = (f.b, f.c);
        let mut mean = spec.mean_rate.unwrap_or(0.0);
        match param {
            "b" => b = x,
            "c" => c = x,
            "mean_rate" => mean = x,
            other => return Err(CliError::Input(format!("fifo sweep cannot vary `{other}`"))),
        }
        let source = gqdecay::SourceModel::new(spec.model.as_ref().unwrap().build()?, mean)?;
        let rep = fifo_decay(b, c, &source)?;
        return Ok(format!("{},{},{},,A,\n", sig9(x), sig9(rep.decay_rate), sig9(rep.t_star)));
    }
    if spec.tandem.is_some() || spec.tandem_chain.is_some() {
        let base = spec.tandem_system()?;
        let (mut b, mut c1, mut c2) = (base.buffer, base.c1, base.c2);
        let mut mean = base.source.mean_rate;
        match param {
            "b" => b = x,
            "c1" => c1 = x,
            "c2" => c2 = x,
            "mean_rate" => mean = x,
            other => return Err(CliError::Input(format!("tandem sweep cannot vary `{other}`"))),
        }
        let source = gqdecay::SourceModel::new(base.source.variance.clone(), mean)?;
        let sys = gqdecay::TandemSystem::new(b, c1, c2, source)?;
        let rep = tandem_decay(&sys)?;
        let tight = match rep.tightness {
            Tightness::Tight => "tight",
            Tightness::NotTight { .. } => "not_tight",
            Tightness::Unknown => "unknown",
        };
        let s_star = rep.s_star.map(sig9).unwrap_or_default();
        return Ok(format!(
            "{},{},{},{},{},{}\n",
            sig9(x),
            sig9(rep.decay_rate),
            sig9(rep.t_star),
            s_star,
            regime_str(rep.regime),
            tight
        ));
    }
    // priority sweep
    let p = spec.priority.as_ref().unwrap();
    let (mut b, mut c) = (p.b, p.c);
    match param {
        "b" => b = x,
        "c" => c = x,
        other => return Err(CliError::Input(format!("priority sweep cannot vary `{other}`"))),
    }
    let high = gqdecay::SourceModel::new(p.hp.model.build()?, p.hp.mean_rate)?;
    let low = gqdecay::SourceModel::new(p.lp.model.build()?, p.lp.mean_rate)?;
    let psys = match p.alpha {
        Some(a) => gqdecay::PrioritySystem::with_low_count_ratio(b, c, high, low, a)?,
        None => gqdecay::PrioritySystem::new(b, c, high, low)?,
    };
    let rep = priority_decay(&psys)?;
    let s_star = rep.s_star.map(sig9).unwrap_or_default();
    Ok(format!(
        "{},{},{},{},{},\n",
        sig9(x),
        sig9(rep.decay_bound),
        sig9(rep.t_star),
        s_star,
        regime_str(rep.regime)
    ))
}

fn verify(spec: &JobSpec, run_qp: bool, run_mc: bool) -> Result<(), CliError> {
    let opts = &spec.options;
    echo_settings(opts);

    let (value, t_star, tight, sys_kind) = if spec.tandem.is_some() || spec.tandem_chain.is_some() {
        let sys = spec.tandem_system()?;
        let rep = tandem_decay(&sys)?;
        println!(
            "solver: J = {} regime {} tightness {}",
            sig9(rep.decay_rate),
            regime_str(rep.regime),
            tightness_str(&rep.tightness)
        );
        let is_tight = matches!(rep.tightness, Tightness::Tight);
        (rep.decay_rate, rep.t_star, is_tight, Sys::Tandem(sys))
    } else if spec.priority.is_some() {
        let psys = spec.priority_system()?;
        let rep = priority_decay(&psys)?;
        println!("solver: J = {} regime {}", sig9(rep.decay_bound), regime_str(rep.regime));
        // the priority bound is exact in the empty-buffer regime
        let is_tight = matches!(rep.regime, gqdecay::Regime::A);
        (rep.decay_bound, rep.t_star, is_tight, Sys::Priority(psys))
    } else {
        return Err(CliError::Input("verify supports tandem and priority jobs".into()));
    };

    let mut disagreement = None;

    if run_qp {
        let cfg = match &sys_kind {
            Sys::Tandem(s) => {
                let mut c = GridOracleConfig::for_tandem(s, t_star);
                c.s_points = opts.qp_s_points;
                c.levels = opts.qp_levels;
                c
            }
            Sys::Priority(p) => {
                let mut c = GridOracleConfig::for_priority(p, t_star);
                c.s_points = opts.qp_s_points;
                c.levels = opts.qp_levels;
                c
            }
        };
        let r = grid_qp_decay(sys_kind.as_ref(), &cfg)?;
        let rel = (r.estimate - value) / value;
        println!(
            "grid oracle: estimate = {} (levels {:?}, converged = {}) relative gap {:+.3e}",
            sig9(r.estimate),
            r.level_values.iter().map(|v| sig9(*v)).collect::<Vec<_>>(),
            r.converged,
            rel
        );
        if tight {
            if rel.abs() > opts.verify_qp_tol {
                disagreement = Some(format!(
                    "grid oracle {} differs from J {} by {:+.2}% (tolerance {:.2}%)",
                    sig9(r.estimate),
                    sig9(value),
                    100.0 * rel,
                    100.0 * opts.verify_qp_tol
                ));
            }
        } else if rel < -opts.verify_qp_tol {
            disagreement = Some(format!(
                "grid oracle {} fell below the lower bound {}",
                sig9(r.estimate),
                sig9(value)
            ));
        } else {
            println!("bound is not known tight; an oracle gap above it is expected");
        }
    }

    if run_mc {
        let n_values = if opts.mc_n_values.is_empty() {
            // aim for n·J around 3, 5 and 7: rare enough to be in the
            // exponential regime, frequent enough to observe
            let mut ns: Vec<u32> = [3.0, 5.0, 7.0]
                .iter()
                .map(|k| ((k / value).round() as u32).max(1))
                .collect();
            ns.dedup();
            if ns.len() < 3 {
                ns = vec![ns[0], ns[0] + 1, ns[0] + 2];
            }
            ns
        } else {
            opts.mc_n_values.clone()
        };
        let cfg = match &sys_kind {
            Sys::Tandem(s) => McConfig::for_tandem(s, t_star, opts.mc_samples, opts.seed, n_values),
            Sys::Priority(_) => McConfig::for_priority(t_star, opts.mc_samples, opts.seed, n_values),
        };
        let fit = mc_decay_fit(sys_kind.as_ref(), &cfg)?;
        let rel = (fit.slope - value) / value;
        println!("mc oracle: slope = {} ± {} over {:?}", sig9(fit.slope), sig9(fit.std_err), fit.points);
        if tight {
            if rel.abs() > opts.verify_mc_tol {
                disagreement = Some(format!(
                    "mc slope {} differs from J {} by {:+.2}% (tolerance {:.2}%)",
                    sig9(fit.slope),
                    sig9(value),
                    100.0 * rel,
                    100.0 * opts.verify_mc_tol
                ));
            }
        } else if rel < -opts.verify_mc_tol {
            disagreement = Some(format!("mc slope {} fell below the lower bound {}", sig9(fit.slope), sig9(value)));
        }
    }

    match disagreement {
        Some(msg) => Err(CliError::Disagreement(msg)),
        None => {
            println!("verify: ok");
            Ok(())
        }
    }
}

enum Sys {
    Tandem(gqdecay::TandemSystem),
    Priority(gqdecay::PrioritySystem),
}

impl Sys {
    fn as_ref(&self) -> SystemRef<'_> {
        match self {
            Sys::Tandem(s) => SystemRef::Tandem(s),
            Sys::Priority(p) => SystemRef::Priority(p),
        }
    }
}
