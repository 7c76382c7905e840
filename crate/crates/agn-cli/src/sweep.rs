//! `sweep` and `timeshare`: CSV emission over kappa grids.

use crate::output::{csv_row, CSV_HEADER};
use crate::{load_config, require, resolve, validation, Common, Failure};
use agn_capacity::capacity::{
    feedback_capacity, iid_nofeedback_lower_bound, kim_solutions,
    markov_nofeedback_lower_bound, noise_cancellation_lower_bound, time_sharing_rate,
    water_filling_reference, RateKind,
};
use agn_capacity::channel::{classify_regime, ChannelParams, PowerBudget};
use agn_capacity::nats_to_bits;
use clap::Args;
use rayon::prelude::*;

#[derive(Args)]
pub struct SweepArgs {
    /// Comma-separated list of c values
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    kw: Option<f64>,
    /// Kappa grid as min:max:count:{linear|log}
    #[arg(long)]
    kappa: Option<String>,
    /// Comma-separated quantities:
    /// feedback,iid_lb,markov_lb,nc_lb,water_filling,kim,timeshare
    #[arg(long)]
    emit: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
pub struct TimeshareArgs {
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kw: Option<f64>,
    /// Kappa grid as min:max:count:{linear|log}
    #[arg(long)]
    kappa: Option<String>,
    #[command(flatten)]
    common: Common,
}

/// Parses `min:max:count:{linear|log}`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        return Err(validation(format!(
            "grid '{spec}' must be min:max:count:linear|log"
        )));
    }
    let min: f64 = parts[0]
        .parse()
        .map_err(|_| validation(format!("bad grid min '{}'", parts[0])))?;
    let max: f64 = parts[1]
        .parse()
        .map_err(|_| validation(format!("bad grid max '{}'", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| validation(format!("bad grid count '{}'", parts[2])))?;
    if count < 2 {
        return Err(validation("grid count must be at least 2"));
    }
    if min < 0.0 || max < min {
        return Err(validation("grid requires 0 <= min <= max"));
    }
    match parts[3] {
        "linear" => Ok((0..count)
            .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
            .collect()),
        "log" => {
            if min <= 0.0 {
                return Err(validation("log grid requires min > 0"));
            }
            let (a, b) = (min.ln(), max.ln());
            Ok((0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect())
        }
        other => Err(validation(format!("unknown grid spacing '{other}'"))),
    }
}

const QUANTITIES: &[&str] = &[
    "feedback",
    "iid_lb",
    "markov_lb",
    "nc_lb",
    "water_filling",
    "kim",
    "timeshare",
];

/// Best time-sharing value over a fixed deterministic grid of splits,
/// never below the single-budget rate.
fn timeshare_envelope_bits(params: &ChannelParams, kappa: f64) -> Result<f64, Failure> {
    let budget = PowerBudget::new(kappa)?;
    let mut best = feedback_capacity(params, &budget)?.rate_nats;
    let kappa_hi = (8.0 * kappa).max(8.0 * params.k_w);
    for i in 1..20 {
        let theta = i as f64 / 20.0;
        for j in 0..24 {
            let kappa1 = kappa + (kappa_hi - kappa) * j as f64 / 23.0;
            let kappa2 = (kappa - theta * kappa1) / (1.0 - theta);
            if kappa2 < 0.0 {
                continue;
            }
            if let Ok(r) = time_sharing_rate(params, &budget, theta, kappa1, kappa2) {
                if r > best {
                    best = r;
                }
            }
        }
    }
    Ok(nats_to_bits(best))
}

/// One CSV cell: the value in bits (None for out-of-validity) and the
/// certification flag.
fn evaluate(
    params: &ChannelParams,
    kappa: f64,
    quantity: &str,
) -> Result<(Option<f64>, bool), Failure> {
    let budget = PowerBudget::new(kappa)?;
    match quantity {
        "feedback" => {
            let r = feedback_capacity(params, &budget)?;
            // the closed form is exact capacity only where certified;
            // elsewhere the feedback column is out of validity
            if r.kind == RateKind::Capacity {
                Ok((Some(r.rate_bits()), r.certified))
            } else {
                Ok((None, false))
            }
        }
        "iid_lb" => {
            let r = iid_nofeedback_lower_bound(params, &budget)?;
            Ok((Some(r.rate_bits()), r.certified))
        }
        "markov_lb" => {
            let r = markov_nofeedback_lower_bound(params, &budget)?;
            Ok((Some(r.rate_bits()), r.certified))
        }
        "nc_lb" => match noise_cancellation_lower_bound(params, &budget) {
            Ok(r) => Ok((Some(r.rate_bits()), r.certified)),
            Err(agn_capacity::Error::OutOfScope(_)) => Ok((None, false)),
            Err(e) => Err(e.into()),
        },
        "water_filling" => match water_filling_reference(params, &budget) {
            Ok(nats) => Ok((Some(nats_to_bits(nats)), true)),
            Err(agn_capacity::Error::OutOfScope(_))
            | Err(agn_capacity::Error::OutOfValidityRange { .. }) => Ok((None, false)),
            Err(e) => Err(e.into()),
        },
        "kim" => match kim_solutions(params, &budget) {
            Ok((sol1, _)) => Ok((Some(sol1.rate_bits()), false)),
            Err(agn_capacity::Error::OutOfScope(_)) => Ok((None, false)),
            Err(e) => Err(e.into()),
        },
        "timeshare" => Ok((Some(timeshare_envelope_bits(params, kappa)?), true)),
        other => Err(validation(format!("unknown quantity '{other}'"))),
    }
}

fn emit_rows(
    c_values: &[f64],
    kw: f64,
    kappas: &[f64],
    quantities: &[String],
) -> Result<Vec<String>, Failure> {
    let mut points = Vec::new();
    for &c in c_values {
        for &kappa in kappas {
            for q in quantities {
                points.push((c, kappa, q.clone()));
            }
        }
    }
    // parallel evaluation with deterministic ordering by construction order
    let rows: Vec<Result<String, Failure>> = points
        .par_iter()
        .map(|(c, kappa, q)| {
            let params = ChannelParams::new(*c, kw)?;
            let budget = PowerBudget::new(*kappa)?;
            let regime = classify_regime(&params, &budget)?;
            let (value, certified) = evaluate(&params, *kappa, q)?;
            Ok(csv_row(*c, kw, *kappa, q, value, &regime.to_string(), certified))
        })
        .collect();
    rows.into_iter().collect()
}

pub fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.common)?;
    let c_spec = require(resolve(args.c, &cfg, "c")?, "c")?;
    let kw = require(resolve(args.kw, &cfg, "kw")?, "kw")?;
    let kappa_spec = require(resolve(args.kappa, &cfg, "kappa")?, "kappa")?;
    let emit = resolve(args.emit, &cfg, "emit")?
        .unwrap_or_else(|| "feedback,iid_lb".to_string());

    let c_values: Vec<f64> = c_spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| validation(format!("bad c value '{s}'")))
        })
        .collect::<Result<_, _>>()?;
    let kappas = parse_grid(&kappa_spec)?;
    let quantities: Vec<String> = emit
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    for q in &quantities {
        if !QUANTITIES.contains(&q.as_str()) {
            return Err(validation(format!(
                "unknown quantity '{q}'; expected one of {}",
                QUANTITIES.join(",")
            )));
        }
    }

    println!("{CSV_HEADER}");
    for row in emit_rows(&c_values, kw, &kappas, &quantities)? {
        println!("{row}");
    }
    Ok(())
}

pub fn cmd_timeshare(args: TimeshareArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.common)?;
    let c = require(resolve(args.c, &cfg, "c")?, "c")?;
    let kw = require(resolve(args.kw, &cfg, "kw")?, "kw")?;
    let kappa_spec = require(resolve(args.kappa, &cfg, "kappa")?, "kappa")?;
    let kappas = parse_grid(&kappa_spec)?;
    let quantities = vec![
        "timeshare".to_string(),
        "feedback".to_string(),
        "iid_lb".to_string(),
    ];
    println!("{CSV_HEADER}");
    for row in emit_rows(&[c], kw, &kappas, &quantities)? {
        println!("{row}");
    }
    Ok(())
}
