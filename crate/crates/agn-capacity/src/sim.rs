//! Monte Carlo simulation of the channel under a time-invariant strategy.
//!
//! The model is the input `X_t = lambda (V_{t-1} - Vhat_{t-1}) + Z_t`, the
//! output `Y_t = X_t + V_t`, and the estimate `Vhat_t = c Vhat_{t-1} + M_t I_t`
//! with innovation `I_t = Y_t - c Vhat_{t-1}` and the gain `M_t` computed from
//! the analytic DRE trajectory, never from data.
//!
//! The rollout propagates the estimation error `E_t = V_t - Vhat_t` directly:
//!
//! ```text
//! E_t = (c - M_t (lambda + c)) E_{t-1} + (1 - M_t) W_t - M_t Z_t
//! I_t = (lambda + c) E_{t-1} + Z_t + W_t
//! X_t = lambda E_{t-1} + Z_t
//! ```
//!
//! This is the exact algebraic image of the state/filter pair. Tracking `V_t`
//! and `Vhat_t` separately would be numerically meaningless for unstable
//! noise, where both grow like `|c|^t` while their difference stays bounded.
//! Since the filter starts from the known state (`Vhat_0 = v0`, `K_0 = 0`),
//! the error, innovation, and input processes do not depend on `v0` at all.
//!
//! Randomness comes from a counter-based generator keyed on
//! `(seed, trajectory, step)`, so reports are bit-identical across runs and
//! thread counts:
//!
//! ```
//! use agn_capacity::channel::{ChannelParams, Strategy};
//! use agn_capacity::sim::{simulate, SimulationConfig};
//!
//! let config = SimulationConfig {
//!     params: ChannelParams::new(2.0, 1.0).unwrap(),
//!     strategy: Strategy::new(0.25, 23.0 / 24.0).unwrap(),
//!     horizon: 20,
//!     trajectories: 200,
//!     seed: 1,
//!     v0: 0.0,
//! };
//! let a = simulate(&config).unwrap();
//! let b = simulate(&config).unwrap();
//! assert_eq!(a, b);
//! ```

use crate::channel::{ChannelParams, Strategy};
use crate::riccati::{are_solution, dre_step_feedback, kalman_gain_and_map};
use crate::{Error, Result};
use rayon::prelude::*;

/// Parameters of one simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub params: ChannelParams,
    pub strategy: Strategy,
    /// Steps per trajectory, `>= 1`.
    pub horizon: usize,
    /// Independent trajectories, `>= 1`.
    pub trajectories: usize,
    pub seed: u64,
    /// Initial noise state, known to the filter (`Vhat_0 = v0`, `K_0 = 0`).
    /// The reported statistics are exactly `v0`-invariant; see the module
    /// docs.
    pub v0: f64,
}

/// Empirical statistics with their analytic counterparts.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    /// Mean of `X_t^2` over all steps and trajectories.
    pub empirical_power: f64,
    pub power_se: f64,
    /// Sample variance of the innovation at each step.
    pub empirical_innovation_variance: Vec<f64>,
    pub innovation_variance_se: Vec<f64>,
    /// Sample variance of the estimation error `V_t - Vhat_t` at each step.
    pub empirical_mse: Vec<f64>,
    pub mse_se: Vec<f64>,
    /// `(1/n) sum_t 1/2 ln(Var_emp(I_t)/K_W)` in nats.
    pub empirical_rate_nats: f64,
    pub analytic_power: f64,
    /// `(lambda+c)^2 K_{t-1} + K_Z + K_W` along the DRE trajectory.
    pub analytic_innovation_variance: Vec<f64>,
    /// DRE values `K_1..K_n`.
    pub analytic_mse: Vec<f64>,
    pub analytic_rate_nats: f64,
}

// splitmix64 finalizer
fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58476d1ce4e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d049bb133111eb);
    x ^= x >> 31;
    x
}

fn keyed(seed: u64, traj: u64, t: u64, stream: u64) -> u64 {
    let mut h = mix64(seed ^ 0x9e37_79b9_7f4a_7c15);
    h = mix64(h ^ traj.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    h = mix64(h ^ t.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    h = mix64(h ^ stream.wrapping_mul(0x94d0_49bb_1331_11eb));
    h
}

fn uniform_open(bits: u64) -> f64 {
    // (0, 1]: 53 mantissa bits, never exactly 0
    ((bits >> 11) as f64 + 1.0) * (1.0 / 9_007_199_254_740_992.0)
}

/// Two independent standard normals keyed by `(seed, trajectory, time)`.
/// Counter-based, so any evaluation order gives identical draws.
pub fn standard_normal_pair(seed: u64, traj: u64, t: u64) -> (f64, f64) {
    let u1 = uniform_open(keyed(seed, traj, t, 0));
    let u2 = uniform_open(keyed(seed, traj, t, 1));
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

struct Accum {
    i_sum: Vec<f64>,
    i_sq: Vec<f64>,
    e_sum: Vec<f64>,
    e_sq: Vec<f64>,
    p_sum: f64,
    p_sq: f64,
}

impl Accum {
    fn new(n: usize) -> Self {
        Self {
            i_sum: vec![0.0; n],
            i_sq: vec![0.0; n],
            e_sum: vec![0.0; n],
            e_sq: vec![0.0; n],
            p_sum: 0.0,
            p_sq: 0.0,
        }
    }
    fn merge(&mut self, other: &Accum) {
        for t in 0..self.i_sum.len() {
            self.i_sum[t] += other.i_sum[t];
            self.i_sq[t] += other.i_sq[t];
            self.e_sum[t] += other.e_sum[t];
            self.e_sq[t] += other.e_sq[t];
        }
        self.p_sum += other.p_sum;
        self.p_sq += other.p_sq;
    }
}

const CHUNK: usize = 1024;

/// Runs `config.trajectories` independent rollouts and aggregates statistics.
///
/// Deterministic for a fixed config: the RNG is keyed by
/// `(seed, trajectory, time)` and trajectories are aggregated in fixed-size
/// chunks reduced in index order, so thread scheduling cannot change any bit
/// of the output.
pub fn simulate(config: &SimulationConfig) -> Result<SimulationReport> {
    if config.horizon == 0 || config.trajectories == 0 {
        return Err(Error::OutOfScope(
            "horizon and trajectory count must be at least 1".into(),
        ));
    }
    if !config.v0.is_finite() {
        return Err(Error::NonFiniteInput("v0"));
    }
    let n = config.horizon;
    let m = config.trajectories;
    let params = config.params;
    let strat = config.strategy;
    let sw = params.k_w.sqrt();
    let sz = strat.k_z.sqrt();

    // analytic DRE trajectory; gains at step t use K_{t-1}
    let mut k_prev = vec![0.0f64; n];
    let mut gains = vec![0.0f64; n];
    let mut k = 0.0;
    for t in 0..n {
        k_prev[t] = k;
        gains[t] = kalman_gain_and_map(&params, &strat, k).0;
        k = dre_step_feedback(&params, &strat, k);
    }
    let analytic_mse: Vec<f64> = {
        let mut v = Vec::with_capacity(n);
        let mut k = 0.0;
        for _ in 0..n {
            k = dre_step_feedback(&params, &strat, k);
            v.push(k);
        }
        v
    };
    let analytic_innovation_variance: Vec<f64> = (0..n)
        .map(|t| {
            let cc = strat.lambda + params.c;
            cc * cc * k_prev[t] + strat.k_z + params.k_w
        })
        .collect();
    let analytic_power =
        k_prev.iter().map(|&k| strat.lambda * strat.lambda * k + strat.k_z).sum::<f64>()
            / n as f64;
    let analytic_rate_nats = analytic_innovation_variance
        .iter()
        .map(|&v| 0.5 * (v / params.k_w).ln())
        .sum::<f64>()
        / n as f64;

    let chunks: Vec<usize> = (0..m).step_by(CHUNK).collect();
    let partials: Vec<Accum> = chunks
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(m);
            let mut acc = Accum::new(n);
            let cc = strat.lambda + params.c;
            for traj in start..end {
                let mut e = 0.0f64;
                for t in 0..n {
                    let (g1, g2) = standard_normal_pair(config.seed, traj as u64, t as u64);
                    let w = sw * g1;
                    let z = sz * g2;
                    let x = strat.lambda * e + z;
                    let innov = cc * e + z + w;
                    let m_t = gains[t];
                    e = (params.c - m_t * cc) * e + (1.0 - m_t) * w - m_t * z;
                    acc.i_sum[t] += innov;
                    acc.i_sq[t] += innov * innov;
                    acc.e_sum[t] += e;
                    acc.e_sq[t] += e * e;
                    acc.p_sum += x * x;
                    acc.p_sq += x * x * x * x;
                }
            }
            acc
        })
        .collect();
    let mut acc = Accum::new(n);
    for part in &partials {
        acc.merge(part);
    }

    let mf = m as f64;
    let var = |sum: f64, sq: f64| ((sq - sum * sum / mf) / (mf - 1.0)).max(0.0);
    let empirical_innovation_variance: Vec<f64> = (0..n)
        .map(|t| var(acc.i_sum[t], acc.i_sq[t]))
        .collect();
    let empirical_mse: Vec<f64> = (0..n).map(|t| var(acc.e_sum[t], acc.e_sq[t])).collect();
    // SE of a sample variance of Gaussians: v * sqrt(2/(m-1))
    let se_factor = (2.0 / (mf - 1.0)).sqrt();
    let innovation_variance_se: Vec<f64> = empirical_innovation_variance
        .iter()
        .map(|&v| v * se_factor)
        .collect();
    let mse_se: Vec<f64> = empirical_mse.iter().map(|&v| v * se_factor).collect();

    let count = (n * m) as f64;
    let empirical_power = acc.p_sum / count;
    let p_var = (acc.p_sq / count - empirical_power * empirical_power).max(0.0);
    // power samples are dependent across t; scale by trajectories only
    let power_se = (p_var / mf).sqrt();

    let empirical_rate_nats = empirical_innovation_variance
        .iter()
        .map(|&v| 0.5 * (v / params.k_w).ln())
        .sum::<f64>()
        / n as f64;

    Ok(SimulationReport {
        empirical_power,
        power_se,
        empirical_innovation_variance,
        innovation_variance_se,
        empirical_mse,
        mse_se,
        empirical_rate_nats,
        analytic_power,
        analytic_innovation_variance,
        analytic_mse,
        analytic_rate_nats,
    })
}

/// What the zero-innovations characterization actually delivers.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    /// DRE values `K_1..K_n` with `K_Z = 0` from `K_0 = 0`; all zero.
    pub k_trajectory: Vec<f64>,
    /// Closed-loop map at each step; constantly `-lambda`.
    pub closed_loop_maps: Vec<f64>,
    /// `(1/n) sum 1/2 ln(((lambda+c)^2 K_{t-1} + K_W)/K_W)`; zero.
    pub objective_nats: f64,
    /// `(1/n) sum lambda^2 K_{t-1}`; zero.
    pub average_power: f64,
    /// `|lambda| < 1`; when false the filter error recursion diverges.
    pub stabilizable: bool,
    /// The nonzero ARE root `K_W (lambda^2 - 1)/(lambda + c)^2` when one
    /// exists; never reached by the DRE from zero.
    pub positive_are_root: Option<f64>,
    /// `ln|lambda|` for `|lambda| > 1`: the rate the characterization
    /// claims, contradicted by `objective_nats = 0`.
    pub claimed_rate_nats: f64,
}

/// Rolls the `K_Z = 0` DRE from `K_0 = 0` and reports why the forced
/// zero-innovations strategy cannot achieve a positive rate.
pub fn counterexample_kz_zero(
    params: &ChannelParams,
    lambda: f64,
    horizon: usize,
) -> Result<CounterexampleReport> {
    if params.c.abs() >= 1.0 {
        return Err(Error::OutOfScope(
            "the counterexample is stated for |c| < 1".into(),
        ));
    }
    let strat = Strategy::new(lambda, 0.0)?;
    let mut k = 0.0;
    let mut k_trajectory = Vec::with_capacity(horizon);
    let mut closed_loop_maps = Vec::with_capacity(horizon);
    let mut objective = 0.0;
    let mut power = 0.0;
    for _ in 0..horizon {
        closed_loop_maps.push(kalman_gain_and_map(params, &strat, k).1);
        let cc = lambda + params.c;
        objective += 0.5 * ((cc * cc * k + params.k_w) / params.k_w).ln();
        power += lambda * lambda * k;
        k = dre_step_feedback(params, &strat, k);
        k_trajectory.push(k);
    }
    let n = horizon.max(1) as f64;
    let positive_are_root = are_solution(params, &strat)
        .roots
        .into_iter()
        .find(|&r| r > 1e-12);
    Ok(CounterexampleReport {
        k_trajectory,
        closed_loop_maps,
        objective_nats: objective / n,
        average_power: power / n,
        stabilizable: lambda.abs() < 1.0,
        positive_are_root,
        claimed_rate_nats: if lambda.abs() > 1.0 { lambda.abs().ln() } else { 0.0 },
    })
}
