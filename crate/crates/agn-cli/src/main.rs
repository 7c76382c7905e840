//! Command-line front end: single-point evaluation, parameter sweeps,
//! counterexample reports, simulation, and finite-horizon runs.
//!
//! Exit codes: 0 success, 1 validation/usage error, 2 numerical failure.

mod output;
mod sweep;

use agn_capacity::capacity::{
    self, feedback_capacity, finite_horizon_optimize, iid_nofeedback_lower_bound,
    kim_solutions, markov_nofeedback_lower_bound, noise_cancellation_lower_bound,
    FiniteHorizonConfig, RateKind,
};
use agn_capacity::channel::{ChannelParams, PowerBudget, Strategy};
use agn_capacity::riccati::{dre_iterate, DRE_MAX_STEPS, DRE_TOL};
use agn_capacity::sim::{counterexample_kz_zero, simulate, SimulationConfig};
use agn_capacity::{nats_to_bits, Error as LibError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::collections::HashMap;

#[derive(Parser)]
#[command(name = "agn", version, about = "AGN channel capacity toolkit", max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Base {
    Bits,
    Nats,
}

/// Flags shared by every subcommand. Values may also come from a key=value
/// config file; explicit flags win.
#[derive(Args)]
struct Common {
    /// Rate unit for JSON output (CSV is always bits)
    #[arg(long, value_enum)]
    base: Option<Base>,
    /// Key=value file supplying defaults for any long flag
    #[arg(long)]
    config: Option<String>,
}

impl Common {
    fn base(&self, cfg: &HashMap<String, String>) -> Result<Base, String> {
        if let Some(b) = self.base {
            return Ok(b);
        }
        match cfg.get("base").map(String::as_str) {
            Some("bits") | None => Ok(Base::Bits),
            Some("nats") => Ok(Base::Nats),
            Some(other) => Err(format!("unknown base '{other}'")),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one rate quantity at a single point (JSON)
    Capacity(CapacityArgs),
    /// Sweep a kappa grid over one or more c values (CSV)
    Sweep(sweep::SweepArgs),
    /// Dump a Riccati difference-equation trajectory (JSON)
    Dre(DreArgs),
    /// Monte Carlo simulation of a time-invariant strategy (JSON)
    Simulate(SimulateArgs),
    /// Contrast the zero-innovations characterization with the DRE limit (JSON)
    KimCompare(KimCompareArgs),
    /// Optimize a time-varying strategy over a finite horizon (JSON)
    FiniteHorizon(FiniteHorizonArgs),
    /// Time-sharing grid over a kappa range (CSV)
    Timeshare(sweep::TimeshareArgs),
}

#[derive(Args)]
struct CapacityArgs {
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kw: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// feedback | iid_lb | markov_lb | nc_lb
    #[arg(long)]
    quantity: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct DreArgs {
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kw: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kz: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    k0: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kw: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kz: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    v0: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct KimCompareArgs {
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kw: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct FiniteHorizonArgs {
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kw: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[command(flatten)]
    common: Common,
}

fn main() {
    std::process::exit(run());
}

/// 1 for validation problems, 2 for numerical ones.
fn lib_error_code(e: &LibError) -> i32 {
    match e {
        LibError::NonPositiveNoiseVariance(_)
        | LibError::NegativePower(_)
        | LibError::NonFiniteInput(_)
        | LibError::NegativeInnovationsVariance(_)
        | LibError::OutOfScope(_)
        | LibError::InfeasibleSplit(_)
        | LibError::OutOfValidityRange { .. } => 1,
        LibError::Divergent
        | LibError::Diverged { .. }
        | LibError::NoStabilizingSolution
        | LibError::OptimizerFailed(_)
        | LibError::RootFindFailed(_) => 2,
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl From<LibError> for Failure {
    fn from(e: LibError) -> Self {
        Failure { code: lib_error_code(&e), message: e.to_string() }
    }
}

fn validation(msg: impl Into<String>) -> Failure {
    Failure { code: 1, message: msg.into() }
}

fn load_config(common: &Common) -> Result<HashMap<String, String>, Failure> {
    let mut map = HashMap::new();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| validation(format!("cannot read config {path}: {e}")))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| validation(format!("{path}:{}: expected key=value", i + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    Ok(map)
}

fn resolve<T: std::str::FromStr>(
    flag: Option<T>,
    cfg: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match cfg.get(key) {
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| validation(format!("config value '{raw}' invalid for {key}"))),
        None => Ok(None),
    }
}

fn require<T>(v: Option<T>, key: &str) -> Result<T, Failure> {
    v.ok_or_else(|| validation(format!("missing required value --{key}")))
}

fn rate_out(base: Base, nats: f64) -> (f64, &'static str) {
    match base {
        Base::Bits => (nats_to_bits(nats), "bits"),
        Base::Nats => (nats, "nats"),
    }
}

fn run() -> i32 {
    // clap exits 2 on usage errors by default; the contract here is 1
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { 0 } else { 1 };
        }
    };
    let result = match cli.command {
        Command::Capacity(args) => cmd_capacity(args),
        Command::Sweep(args) => sweep::cmd_sweep(args),
        Command::Dre(args) => cmd_dre(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::KimCompare(args) => cmd_kim_compare(args),
        Command::FiniteHorizon(args) => cmd_finite_horizon(args),
        Command::Timeshare(args) => sweep::cmd_timeshare(args),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn cmd_capacity(args: CapacityArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.common)?;
    let base = args.common.base(&cfg).map_err(validation)?;
    let c = require(resolve(args.c, &cfg, "c")?, "c")?;
    let kw = require(resolve(args.kw, &cfg, "kw")?, "kw")?;
    let kappa = require(resolve(args.kappa, &cfg, "kappa")?, "kappa")?;
    let quantity = resolve(args.quantity, &cfg, "quantity")?
        .unwrap_or_else(|| "feedback".to_string());
    let params = ChannelParams::new(c, kw)?;
    let budget = PowerBudget::new(kappa)?;
    let result = match quantity.as_str() {
        "feedback" => feedback_capacity(&params, &budget)?,
        "iid_lb" => iid_nofeedback_lower_bound(&params, &budget)?,
        "markov_lb" => markov_nofeedback_lower_bound(&params, &budget)?,
        "nc_lb" => noise_cancellation_lower_bound(&params, &budget)?,
        other => return Err(validation(format!("unknown quantity '{other}'"))),
    };
    let (rate, unit) = rate_out(base, result.rate_nats);
    let strategy = result.strategy.map(|s: Strategy| json!({"lambda": s.lambda, "k_z": s.k_z}));
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "c": c,
            "kw": kw,
            "kappa": kappa,
            "quantity": quantity,
            "rate": rate,
            "unit": unit,
            "regime": result.regime.to_string(),
            "kind": match result.kind { RateKind::Capacity => "capacity", RateKind::LowerBound => "lower_bound" },
            "certified": result.certified,
            "strategy": strategy,
            "error_variance": result.error_variance,
        }))
        .unwrap()
    );
    Ok(())
}

fn cmd_dre(args: DreArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.common)?;
    let c = require(resolve(args.c, &cfg, "c")?, "c")?;
    let kw = require(resolve(args.kw, &cfg, "kw")?, "kw")?;
    let lambda = require(resolve(args.lambda, &cfg, "lambda")?, "lambda")?;
    let kz = require(resolve(args.kz, &cfg, "kz")?, "kz")?;
    let k0 = resolve(args.k0, &cfg, "k0")?.unwrap_or(0.0);
    let steps = resolve(args.steps, &cfg, "steps")?.unwrap_or(DRE_MAX_STEPS);
    let params = ChannelParams::new(c, kw)?;
    let strategy = Strategy::new(lambda, kz)?;
    let traj = dre_iterate(&params, &strategy, k0, steps, DRE_TOL)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "c": c,
            "kw": kw,
            "lambda": lambda,
            "kz": kz,
            "k0": k0,
            "converged": traj.converged,
            "limit": traj.limit,
            "steps": traj.values.len() - 1,
            "values": traj.values,
        }))
        .unwrap()
    );
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.common)?;
    let base = args.common.base(&cfg).map_err(validation)?;
    let c = require(resolve(args.c, &cfg, "c")?, "c")?;
    let kw = require(resolve(args.kw, &cfg, "kw")?, "kw")?;
    let lambda = require(resolve(args.lambda, &cfg, "lambda")?, "lambda")?;
    let kz = require(resolve(args.kz, &cfg, "kz")?, "kz")?;
    let config = SimulationConfig {
        params: ChannelParams::new(c, kw)?,
        strategy: Strategy::new(lambda, kz)?,
        horizon: resolve(args.horizon, &cfg, "horizon")?.unwrap_or(200),
        trajectories: resolve(args.trajectories, &cfg, "trajectories")?.unwrap_or(10_000),
        seed: resolve(args.seed, &cfg, "seed")?.unwrap_or(0),
        v0: resolve(args.v0, &cfg, "v0")?.unwrap_or(0.0),
    };
    let report = simulate(&config)?;
    let (emp_rate, unit) = rate_out(base, report.empirical_rate_nats);
    let (ana_rate, _) = rate_out(base, report.analytic_rate_nats);
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "config": {
                "c": c, "kw": kw, "lambda": lambda, "kz": kz,
                "horizon": config.horizon, "trajectories": config.trajectories,
                "seed": config.seed, "v0": config.v0,
            },
            "empirical_power": report.empirical_power,
            "power_se": report.power_se,
            "empirical_rate": emp_rate,
            "analytic_rate": ana_rate,
            "unit": unit,
            "analytic_power": report.analytic_power,
            "empirical_mse": report.empirical_mse,
            "mse_se": report.mse_se,
            "analytic_mse": report.analytic_mse,
            "empirical_innovation_variance": report.empirical_innovation_variance,
            "innovation_variance_se": report.innovation_variance_se,
            "analytic_innovation_variance": report.analytic_innovation_variance,
        }))
        .unwrap()
    );
    Ok(())
}

fn cmd_kim_compare(args: KimCompareArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.common)?;
    let base = args.common.base(&cfg).map_err(validation)?;
    let c = require(resolve(args.c, &cfg, "c")?, "c")?;
    let kw = require(resolve(args.kw, &cfg, "kw")?, "kw")?;
    let kappa = require(resolve(args.kappa, &cfg, "kappa")?, "kappa")?;
    let horizon = resolve(args.horizon, &cfg, "horizon")?.unwrap_or(100);
    let params = ChannelParams::new(c, kw)?;
    let budget = PowerBudget::new(kappa)?;
    let (sol1, sol2) = kim_solutions(&params, &budget)?;
    let lambda1 = sol1.strategy.map(|s| s.lambda).unwrap_or(0.0);
    let report = counterexample_kz_zero(&params, lambda1, horizon)?;
    let (rate1, unit) = rate_out(base, sol1.rate_nats);
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "c": c, "kw": kw, "kappa": kappa,
            "unit": unit,
            "solution1": {
                "lambda": lambda1,
                "rate": rate1,
                "error_variance": sol1.error_variance,
                "stabilizable": sol1.flags.map(|f| f.stabilizable),
            },
            "solution2": {
                "rate": rate_out(base, sol2.rate_nats).0,
                "error_variance": sol2.error_variance,
                "stabilizable": sol2.flags.map(|f| f.stabilizable),
            },
            "dre_from_zero": {
                "limit": report.k_trajectory.last().copied().unwrap_or(0.0),
                "all_zero": report.k_trajectory.iter().all(|&k| k == 0.0),
                "closed_loop": report.closed_loop_maps.last().copied().unwrap_or(0.0),
                "objective": rate_out(base, report.objective_nats).0,
                "average_power": report.average_power,
            },
            "positive_are_root": report.positive_are_root,
        }))
        .unwrap()
    );
    Ok(())
}

fn cmd_finite_horizon(args: FiniteHorizonArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.common)?;
    let base = args.common.base(&cfg).map_err(validation)?;
    let c = require(resolve(args.c, &cfg, "c")?, "c")?;
    let kw = require(resolve(args.kw, &cfg, "kw")?, "kw")?;
    let kappa = require(resolve(args.kappa, &cfg, "kappa")?, "kappa")?;
    let n = require(resolve(args.n, &cfg, "n")?, "n")?;
    let mut fh = FiniteHorizonConfig::default();
    if let Some(s) = resolve(args.starts, &cfg, "starts")? {
        fh.starts = s;
    }
    if let Some(s) = resolve(args.sweeps, &cfg, "sweeps")? {
        fh.sweeps = s;
    }
    let params = ChannelParams::new(c, kw)?;
    let budget = PowerBudget::new(kappa)?;
    let (schedule, rate) = finite_horizon_optimize(&params, &budget, n, &fh)?;
    let (avg_rate, avg_power) = capacity::finite_horizon_evaluate(&params, &schedule);
    let _ = avg_rate;
    let (rate, unit) = rate_out(base, rate);
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "c": c, "kw": kw, "kappa": kappa, "n": n,
            "rate_per_step": rate,
            "unit": unit,
            "average_power": avg_power,
            "lambdas": schedule.lambdas,
            "k_zs": schedule.k_zs,
        }))
        .unwrap()
    );
    Ok(())
}
