//! Rate formulas and optimizations: feedback capacity in the high-power
//! unstable regime, achievable lower bounds without feedback, a
//! noise-cancellation bound, a water-filling reference, KKT verification,
//! the competing characterization with zero input innovations, time sharing,
//! and a finite-horizon time-varying optimizer.
//!
//! ```
//! use agn_capacity::channel::{ChannelParams, PowerBudget};
//! use agn_capacity::capacity::{iid_nofeedback_lower_bound, noise_cancellation_lower_bound};
//!
//! let params = ChannelParams::new(0.5, 1.0).unwrap();
//! let budget = PowerBudget::new(1.0).unwrap();
//! let iid = iid_nofeedback_lower_bound(&params, &budget).unwrap();
//! let nc = noise_cancellation_lower_bound(&params, &budget).unwrap();
//! // cancelling the predictable noise wastes power on stable channels
//! assert!(nc.rate_nats < iid.rate_nats);
//! assert!((nc.rate_bits() - 0.442642).abs() < 1e-5);
//! ```

use crate::channel::{classify_regime, validate, ChannelParams, PowerBudget, Regime, Strategy};
use crate::riccati::{
    dre_step_feedback, dre_step_nofeedback, kalman_gain_and_map, structural_tests,
    StructuralFlags, ARE_RESIDUAL_TOL,
};
use crate::{nats_to_bits, Error, Result};
use rayon::prelude::*;

/// Whether a result is the exact capacity or only an achievable rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    Capacity,
    LowerBound,
}

/// A rate together with the strategy achieving it and its certification.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    /// Rate in nats per channel use.
    pub rate_nats: f64,
    pub regime: Regime,
    pub strategy: Option<Strategy>,
    /// Asymptotic estimation error variance under the strategy.
    pub error_variance: Option<f64>,
    /// True when the structural flags, the ARE residual, and the power
    /// residual all pass.
    pub certified: bool,
    pub kind: RateKind,
    pub flags: Option<StructuralFlags>,
}

impl CapacityResult {
    pub fn rate_bits(&self) -> f64 {
        nats_to_bits(self.rate_nats)
    }
}

/// `1/2 ln(((lambda + c)^2 K + K_Z + K_W) / K_W)`, the per-step rate of a
/// time-invariant strategy at error variance `k`.
pub fn rate_nats_at(params: &ChannelParams, strategy: &Strategy, k: f64) -> f64 {
    let cc = strategy.lambda + params.c;
    0.5 * ((cc * cc * k + strategy.k_z + params.k_w) / params.k_w).ln()
}

fn power_used(strategy: &Strategy, k: f64) -> f64 {
    strategy.lambda * strategy.lambda * k + strategy.k_z
}

/// Certification of a candidate `(strategy, k)` against the power budget:
/// structural flags all pass, the feedback-ARE residual is below tolerance,
/// and the power constraint is saturated within tolerance.
fn certify(params: &ChannelParams, strategy: &Strategy, k: f64, kappa: f64) -> (bool, StructuralFlags) {
    let flags = structural_tests(params, strategy);
    let are_res = (dre_step_feedback(params, strategy, k) - k).abs() / k.abs().max(1.0);
    let power_res = (power_used(strategy, k) - kappa).abs() / kappa.max(1.0);
    let stabilizing = kalman_gain_and_map(params, strategy, k).1.abs() < 1.0;
    (
        flags.all() && stabilizing && are_res < ARE_RESIDUAL_TOL && power_res < 1e-9,
        flags,
    )
}

/// Feedback capacity of the channel.
///
/// For unstable noise (`c^2 > 1`) at high power the capacity is in closed
/// form and the result is certified exact. The optimal innovations variance
/// of that closed form is positive only for
/// `kappa > K_W (1 + sqrt(5)) / (2 (c^2 - 1)^2)`; between the regime
/// threshold and that point, and in the other two regimes, feedback gives no
/// gain over nofeedback inputs and the result carries the certified IID
/// achievable rate (marked [`RateKind::LowerBound`], never as capacity).
pub fn feedback_capacity(params: &ChannelParams, budget: &PowerBudget) -> Result<CapacityResult> {
    let regime = classify_regime(params, budget)?;
    if regime == Regime::FeedbackGain {
        let (c, k_w, kappa) = (params.c, params.k_w, budget.kappa);
        let d = c * c - 1.0;
        let u = kappa * d * d - k_w;
        let k_inf = u / (c * c * d);
        let lambda = c * k_w / u;
        let k_z = (kappa * d * u - k_w * k_w) / (d * u);
        if k_z > 0.0 {
            let rate = 0.5 * ((c * c * (d * kappa + k_w)) / (d * k_w)).ln();
            let strategy = Strategy::new(lambda, k_z)?;
            let (certified, flags) = certify(params, &strategy, k_inf, kappa);
            return Ok(CapacityResult {
                rate_nats: rate,
                regime,
                strategy: Some(strategy),
                error_variance: Some(k_inf),
                certified,
                kind: RateKind::Capacity,
                flags: Some(flags),
            });
        }
        // closed-form strategy infeasible (K_Z <= 0) just above the power
        // threshold: fall through to the achievable nofeedback rate
    }
    let mut result = iid_nofeedback_lower_bound(params, budget)?;
    result.regime = regime;
    Ok(result)
}

/// Achievable rate of the IID input `X_t ~ N(0, kappa)` without feedback.
pub fn iid_nofeedback_lower_bound(
    params: &ChannelParams,
    budget: &PowerBudget,
) -> Result<CapacityResult> {
    validate(params, budget)?;
    let (c, k_w, kappa) = (params.c, params.k_w, budget.kappa);
    let k_inf = if c == 0.0 {
        kappa * k_w / (kappa + k_w)
    } else {
        let b = kappa * (1.0 - c * c) + k_w;
        (-b + (b * b + 4.0 * c * c * k_w * kappa).sqrt()) / (2.0 * c * c)
    };
    let rate = 0.5 * ((c * c * k_inf + kappa + k_w) / k_w).ln();
    let strategy = Strategy::new(0.0, kappa)?;
    let (certified, flags) = certify(params, &strategy, k_inf, kappa);
    Ok(CapacityResult {
        rate_nats: rate,
        regime: classify_regime(params, budget)?,
        strategy: Some(strategy),
        error_variance: Some(k_inf),
        certified,
        kind: RateKind::LowerBound,
        flags: Some(flags),
    })
}

/// Single-expression form of the IID rate; agrees with
/// [`iid_nofeedback_lower_bound`] to 1e-10.
pub fn iid_rate_closed_form_nats(params: &ChannelParams, budget: &PowerBudget) -> f64 {
    let (c, k_w, kappa) = (params.c, params.k_w, budget.kappa);
    let b = kappa * (1.0 - c * c) + k_w;
    let s = (b * b + 4.0 * c * c * k_w * kappa).sqrt();
    0.5 * ((kappa * (1.0 + c * c) + k_w + s) / (2.0 * k_w)).ln()
}

/// Fixed point of the nofeedback (input-estimation) DRE from zero.
fn nofeedback_fixed_point(params: &ChannelParams, strategy: &Strategy) -> f64 {
    let mut k = 0.0;
    for _ in 0..200_000 {
        let next = dre_step_nofeedback(params, strategy, k);
        if (next - k).abs() < 1e-13 {
            return next;
        }
        k = next;
    }
    k
}

fn markov_rate(params: &ChannelParams, kappa: f64, lambda: f64) -> (f64, Strategy, f64) {
    let k_z = kappa * (1.0 - lambda * lambda);
    let strategy = Strategy { lambda, k_z };
    let k_inf = nofeedback_fixed_point(params, &strategy);
    let d = lambda - params.c;
    let rate = 0.5 * ((d * d * k_inf + k_z + params.k_w) / params.k_w).ln();
    (rate, strategy, k_inf)
}

/// Achievable rate of the stationary Markov input `X_t = lambda X_{t-1} + Z_t`
/// without feedback, maximized over `lambda`.
///
/// The innovations variance is set to saturate power,
/// `K_Z = kappa (1 - lambda^2)`, which is optimal because the rate increases
/// in `K_Z`. The remaining 1-D problem is solved by a dense grid followed by
/// golden-section refinement; ties within tolerance go to the smallest
/// `|lambda|`.
pub fn markov_nofeedback_lower_bound(
    params: &ChannelParams,
    budget: &PowerBudget,
) -> Result<CapacityResult> {
    validate(params, budget)?;
    let kappa = budget.kappa;
    const EPS: f64 = 1e-4;
    const GRID: usize = 2001;
    let lambdas: Vec<f64> = (0..GRID)
        .map(|i| -1.0 + EPS + (2.0 - 2.0 * EPS) * i as f64 / (GRID - 1) as f64)
        .collect();
    let rates: Vec<f64> = lambdas
        .par_iter()
        .map(|&l| markov_rate(params, kappa, l).0)
        .collect();
    let mut best = 0usize;
    for i in 1..GRID {
        if rates[i] > rates[best] + 1e-12
            || (rates[i] > rates[best] - 1e-12 && lambdas[i].abs() < lambdas[best].abs())
        {
            best = i;
        }
    }
    // golden-section refinement around the best grid cell
    let mut lo = lambdas[best.saturating_sub(1)];
    let mut hi = lambdas[(best + 1).min(GRID - 1)];
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = markov_rate(params, kappa, x1).0;
    let mut f2 = markov_rate(params, kappa, x2).0;
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = markov_rate(params, kappa, x2).0;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = markov_rate(params, kappa, x1).0;
        }
    }
    let mut lambda_star = 0.5 * (lo + hi);
    // lambda = 0 is the IID input; never return less, and prefer it on ties
    if markov_rate(params, kappa, 0.0).0 >= markov_rate(params, kappa, lambda_star).0 - 1e-12 {
        lambda_star = 0.0;
    }
    let (rate, strategy, k_inf) = markov_rate(params, kappa, lambda_star);
    let fp_res = (dre_step_nofeedback(params, &strategy, k_inf) - k_inf).abs()
        / k_inf.abs().max(1.0);
    let flags = structural_tests(params, &strategy);
    if !rate.is_finite() {
        return Err(Error::OptimizerFailed("nonfinite markov rate".into()));
    }
    Ok(CapacityResult {
        rate_nats: rate,
        regime: classify_regime(params, budget)?,
        strategy: Some(strategy),
        error_variance: Some(k_inf),
        certified: flags.all() && fp_res < ARE_RESIDUAL_TOL,
        kind: RateKind::LowerBound,
        flags: Some(flags),
    })
}

/// Achievable rate of the noise-cancellation strategy `lambda = -c` for
/// stable noise, with innovations variance chosen to saturate power.
pub fn noise_cancellation_lower_bound(
    params: &ChannelParams,
    budget: &PowerBudget,
) -> Result<CapacityResult> {
    validate(params, budget)?;
    if params.c.abs() >= 1.0 {
        return Err(Error::OutOfScope(
            "noise cancellation requires |c| < 1".into(),
        ));
    }
    let (c, k_w, kappa) = (params.c, params.k_w, budget.kappa);
    let d = 1.0 - c * c;
    let b = k_w - kappa * d;
    let k_z = (-b + (b * b + 4.0 * kappa * k_w * d * d).sqrt()) / (2.0 * d);
    let k_z = k_z.max(0.0);
    let rate = 0.5 * ((k_z + k_w) / k_w).ln();
    let strategy = Strategy::new(-c, k_z)?;
    let k_inf = k_z * k_w / ((k_z + k_w) * d);
    let (certified, flags) = certify(params, &strategy, k_inf, kappa);
    Ok(CapacityResult {
        rate_nats: rate,
        regime: classify_regime(params, budget)?,
        strategy: Some(strategy),
        error_variance: Some(k_inf),
        certified,
        kind: RateKind::LowerBound,
        flags: Some(flags),
    })
}

/// Stationary water-filling nofeedback rate `1/2 ln(1 + kappa + c^2/(1-c^2))`
/// in nats, valid for unit `K_W`, stable `c`, and power above
/// `1/(1-|c|)^2 - 1/(1-c^2)`.
pub fn water_filling_reference(params: &ChannelParams, budget: &PowerBudget) -> Result<f64> {
    validate(params, budget)?;
    if params.c.abs() >= 1.0 {
        return Err(Error::OutOfScope("water-filling requires |c| < 1".into()));
    }
    if (params.k_w - 1.0).abs() > 0.0 {
        return Err(Error::OutOfScope("water-filling reference assumes K_W = 1".into()));
    }
    let c = params.c.abs();
    let threshold = 1.0 / ((1.0 - c) * (1.0 - c)) - 1.0 / (1.0 - c * c);
    if budget.kappa <= threshold {
        return Err(Error::OutOfValidityRange {
            kappa: budget.kappa,
            threshold,
        });
    }
    Ok(0.5 * (1.0 + budget.kappa + c * c / (1.0 - c * c)).ln())
}

/// Threshold of validity of [`water_filling_reference`].
pub fn water_filling_threshold(params: &ChannelParams) -> f64 {
    let c = params.c.abs();
    1.0 / ((1.0 - c) * (1.0 - c)) - 1.0 / (1.0 - c * c)
}

/// The two self-consistent solutions of the competing feedback-capacity
/// characterization that forces `K_Z = 0`.
///
/// Solution 1 pairs `|lambda| > 1` with the positive ARE root and reports
/// rate `ln|lambda|`; its closed loop is not stabilizable, so the reported
/// error variance is not the limit of the DRE from zero and the rate is not
/// operational. Solution 2 is the actual DRE limit: `K = 0` and rate zero.
pub fn kim_solutions(
    params: &ChannelParams,
    budget: &PowerBudget,
) -> Result<(CapacityResult, CapacityResult)> {
    validate(params, budget)?;
    if params.c.abs() >= 1.0 {
        return Err(Error::OutOfScope(
            "the competing characterization is stated for |c| < 1".into(),
        ));
    }
    let (k_w, kappa) = (params.k_w, budget.kappa);
    let ca = params.c.abs();
    let regime = classify_regime(params, budget)?;

    let lambda_mag = if kappa == 0.0 {
        1.0
    } else {
        // K_W t^4 - (K_W + kappa) t^2 - 2|c| kappa t - c^2 kappa = 0 on t > 1
        let g = |t: f64| {
            k_w * t.powi(4) - (k_w + kappa) * t * t - 2.0 * ca * kappa * t - ca * ca * kappa
        };
        let mut hi = 10.0 * ((kappa / k_w).sqrt() + 1.0).max(1.0);
        let mut grow = 0;
        while g(hi) < 0.0 {
            hi *= 2.0;
            grow += 1;
            if grow > 60 {
                return Err(Error::RootFindFailed("no bracket for the quartic".into()));
            }
        }
        let mut lo = 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let lambda = if params.c >= 0.0 { lambda_mag } else { -lambda_mag };

    let strat1 = Strategy::new(lambda, 0.0)?;
    let cc = lambda + params.c;
    let k1 = if cc != 0.0 {
        k_w * (lambda * lambda - 1.0) / (cc * cc)
    } else {
        0.0
    };
    let flags1 = structural_tests(params, &strat1);
    let solution1 = CapacityResult {
        rate_nats: lambda_mag.ln(),
        regime,
        strategy: Some(strat1),
        error_variance: Some(k1),
        certified: false,
        kind: RateKind::Capacity,
        flags: Some(flags1),
    };

    let lam2 = if lambda_mag > 1.0 { lambda / (lambda_mag * lambda_mag) } else { 0.0 };
    let strat2 = Strategy::new(lam2, 0.0)?;
    let flags2 = structural_tests(params, &strat2);
    let solution2 = CapacityResult {
        rate_nats: 0.0,
        regime,
        strategy: Some(strat2),
        error_variance: Some(0.0),
        certified: flags2.all(),
        kind: RateKind::Capacity,
        flags: Some(flags2),
    };
    Ok((solution1, solution2))
}

/// Residuals of the first-order optimality system at a candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct KktResiduals {
    /// Stationarity in `(K_Z, lambda, K)` order.
    pub stationarity: [f64; 3],
    /// Complementary slackness of the power, `K >= 0`, and `K_Z >= 0`
    /// constraints.
    pub complementary_slackness: [f64; 3],
    /// ARE residual and power-constraint violation.
    pub primal: [f64; 2],
    /// `(lambda_1, lambda_2, lambda_3, lambda_4)`.
    pub multipliers: [f64; 4],
    /// `lambda_2, lambda_3, lambda_4 >= 0` (`lambda_1` is free: it pairs
    /// with the ARE equality).
    pub dual_feasible: bool,
}

impl KktResiduals {
    pub fn max_abs(&self) -> f64 {
        self.stationarity
            .iter()
            .chain(self.complementary_slackness.iter())
            .chain(self.primal.iter())
            .fold(0.0f64, |m, r| m.max(r.abs()))
    }
}

/// Multipliers at the closed-form optimum of the high-power unstable regime:
/// `lambda_1 = c^2 / (K_W - kappa (1 - c^2))`, `lambda_2 = c^2`, rest zero.
pub fn optimal_multipliers(params: &ChannelParams, budget: &PowerBudget) -> [f64; 4] {
    let c2 = params.c * params.c;
    [
        c2 / (params.k_w - budget.kappa * (1.0 - c2)),
        c2,
        0.0,
        0.0,
    ]
}

/// Evaluates the Lagrangian stationarity, complementary slackness, and
/// primal residuals at `(strategy, k, multipliers)`.
///
/// The Lagrangian is the log argument of the rate minus
/// `lambda_1 * (ARE) - lambda_2 * (power - kappa) + lambda_3 K + lambda_4 K_Z`.
pub fn kkt_residuals(
    params: &ChannelParams,
    budget: &PowerBudget,
    strategy: &Strategy,
    k: f64,
    multipliers: [f64; 4],
) -> KktResiduals {
    let (c, k_w, kappa) = (params.c, params.k_w, budget.kappa);
    let (l, k_z) = (strategy.lambda, strategy.k_z);
    let [l1, l2, l3, l4] = multipliers;
    let cc = l + c;
    let den = k_z + k_w + cc * cc * k;
    let num = k_w + c * k * cc;
    let drift = k - c * c * k - k_w;

    let g = drift * den + num * num;
    let s_kz = 1.0 - l1 * drift - l2 + l4;
    let s_lambda = cc * k - l1 * (drift * cc * k + num * c * k) - l2 * l * k;
    let s_k = cc * cc
        - l1 * ((1.0 - c * c) * den + drift * cc * cc + 2.0 * c * num * cc)
        - l2 * l * l
        + l3;
    let power_slack = power_used(strategy, k) - kappa;
    KktResiduals {
        stationarity: [s_kz, s_lambda, s_k],
        complementary_slackness: [l2 * power_slack, l3 * k, l4 * k_z],
        primal: [g / den.abs().max(1.0), power_slack.max(0.0)],
        multipliers,
        dual_feasible: l2 >= 0.0 && l3 >= 0.0 && l4 >= 0.0,
    }
}

/// Rate of splitting the horizon: a fraction `theta` at power `kappa1` with
/// the feedback strategy and the rest at `kappa2` with the IID input.
/// Requires `theta kappa1 + (1 - theta) kappa2 <= kappa`.
pub fn time_sharing_rate(
    params: &ChannelParams,
    budget: &PowerBudget,
    theta: f64,
    kappa1: f64,
    kappa2: f64,
) -> Result<f64> {
    validate(params, budget)?;
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InfeasibleSplit(format!("theta {theta} outside [0,1]")));
    }
    if kappa1 < 0.0 || kappa2 < 0.0 {
        return Err(Error::InfeasibleSplit("negative leg power".into()));
    }
    let avg = theta * kappa1 + (1.0 - theta) * kappa2;
    if avg > budget.kappa + 1e-12 {
        return Err(Error::InfeasibleSplit(format!(
            "average power {avg} exceeds budget {}",
            budget.kappa
        )));
    }
    let leg1 = if theta > 0.0 {
        feedback_capacity(params, &PowerBudget::new(kappa1)?)?.rate_nats
    } else {
        0.0
    };
    let leg2 = if theta < 1.0 {
        iid_nofeedback_lower_bound(params, &PowerBudget::new(kappa2)?)?.rate_nats
    } else {
        0.0
    };
    Ok(theta * leg1 + (1.0 - theta) * leg2)
}

/// Per-step gains and innovation variances over a finite horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVaryingStrategy {
    pub lambdas: Vec<f64>,
    pub k_zs: Vec<f64>,
}

/// Knobs of [`finite_horizon_optimize`]. Defaults are deterministic.
#[derive(Debug, Clone, Copy)]
pub struct FiniteHorizonConfig {
    /// Number of extra low-discrepancy starting points.
    pub starts: usize,
    /// Coordinate-ascent sweeps per start.
    pub sweeps: usize,
}

impl Default for FiniteHorizonConfig {
    fn default() -> Self {
        Self { starts: 4, sweeps: 40 }
    }
}

/// Average per-step rate and average power of a schedule under the DRE from
/// `K_0 = 0`.
pub fn finite_horizon_evaluate(
    params: &ChannelParams,
    schedule: &TimeVaryingStrategy,
) -> (f64, f64) {
    let n = schedule.lambdas.len();
    let mut k = 0.0;
    let mut rate = 0.0;
    let mut power = 0.0;
    for t in 0..n {
        let s = Strategy {
            lambda: schedule.lambdas[t],
            k_z: schedule.k_zs[t].max(0.0),
        };
        rate += rate_nats_at(params, &s, k);
        power += power_used(&s, k);
        k = dre_step_feedback(params, &s, k);
    }
    (rate / n as f64, power / n as f64)
}

/// Scales the innovation variances so average power equals `kappa`.
fn project_power(
    params: &ChannelParams,
    lambdas: &[f64],
    k_zs_raw: &[f64],
    kappa: f64,
) -> TimeVaryingStrategy {
    let n = lambdas.len();
    let eval = |s: f64| {
        let sched = TimeVaryingStrategy {
            lambdas: lambdas.to_vec(),
            k_zs: k_zs_raw.iter().map(|&z| z * s).collect(),
        };
        finite_horizon_evaluate(params, &sched).1
    };
    if k_zs_raw.iter().all(|&z| z <= 0.0) {
        return TimeVaryingStrategy {
            lambdas: lambdas.to_vec(),
            k_zs: vec![0.0; n],
        };
    }
    let mut hi = 1.0;
    while eval(hi) < kappa && hi < 1e12 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) < kappa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    TimeVaryingStrategy {
        lambdas: lambdas.to_vec(),
        k_zs: k_zs_raw.iter().map(|&z| z * s).collect(),
    }
}

/// Maximizes the finite-horizon sum rate over per-step `(lambda_t, K_Z_t)`
/// subject to average power `<= kappa`, by coordinate ascent from several
/// deterministic starting points. The time-invariant optimal strategy is
/// always one of them, so the result is never below that feasible point.
pub fn finite_horizon_optimize(
    params: &ChannelParams,
    budget: &PowerBudget,
    n: usize,
    config: &FiniteHorizonConfig,
) -> Result<(TimeVaryingStrategy, f64)> {
    validate(params, budget)?;
    if n == 0 {
        return Err(Error::OptimizerFailed("horizon must be at least 1".into()));
    }
    let kappa = budget.kappa;
    if n == 1 {
        // K_0 = 0 removes lambda_1 from both the objective and the power,
        // so the optimum is exact
        let sched = TimeVaryingStrategy {
            lambdas: vec![0.0],
            k_zs: vec![kappa],
        };
        let rate = 0.5 * (1.0 + kappa / params.k_w).ln();
        return Ok((sched, rate));
    }

    let mut starts: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    starts.push((vec![0.0; n], vec![kappa.max(params.k_w); n]));
    if let Ok(ti) = feedback_capacity(params, budget) {
        if let Some(s) = ti.strategy {
            starts.push((vec![s.lambda; n], vec![s.k_z.max(1e-12); n]));
        }
    }
    // low-discrepancy extra starts on a Weyl sequence
    let alpha = (5.0f64.sqrt() - 1.0) / 2.0;
    for i in 0..config.starts {
        let mut lam = Vec::with_capacity(n);
        let mut kz = Vec::with_capacity(n);
        for t in 0..n {
            let u = ((i * n + t + 1) as f64 * alpha).fract();
            let v = ((i * n + t + 1) as f64 * std::f64::consts::SQRT_2).fract();
            lam.push(2.0 * params.c.abs().max(1.0) * (u - 0.5));
            kz.push(kappa.max(params.k_w) * (0.1 + v));
        }
        starts.push((lam, kz));
    }

    let mut best: Option<(TimeVaryingStrategy, f64)> = None;
    for (mut lam, mut kz) in starts {
        let sched = project_power(params, &lam, &kz, kappa);
        let mut cur = finite_horizon_evaluate(params, &sched).0;
        let mut step = 0.25 * params.c.abs().max(1.0);
        for _ in 0..config.sweeps {
            let mut improved = false;
            for t in 0..n {
                for &(dl, dz) in &[
                    (step, 0.0),
                    (-step, 0.0),
                    (0.0, step * kappa.max(params.k_w)),
                    (0.0, -step * kappa.max(params.k_w)),
                ] {
                    let old_l = lam[t];
                    let old_z = kz[t];
                    lam[t] = old_l + dl;
                    kz[t] = (old_z + dz).max(0.0);
                    let cand = project_power(params, &lam, &kz, kappa);
                    let r = finite_horizon_evaluate(params, &cand).0;
                    if r > cur + 1e-12 {
                        cur = r;
                        improved = true;
                    } else {
                        lam[t] = old_l;
                        kz[t] = old_z;
                    }
                }
            }
            if !improved {
                step *= 0.5;
                if step < 1e-6 {
                    break;
                }
            }
        }
        let sched = project_power(params, &lam, &kz, kappa);
        let rate = finite_horizon_evaluate(params, &sched).0;
        if best.as_ref().map_or(true, |(_, b)| rate > *b) {
            best = Some((sched, rate));
        }
    }
    best.ok_or_else(|| Error::OptimizerFailed("no feasible schedule found".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nats_to_bits;

    fn p(c: f64, k_w: f64) -> ChannelParams {
        ChannelParams::new(c, k_w).unwrap()
    }
    fn b(kappa: f64) -> PowerBudget {
        PowerBudget::new(kappa).unwrap()
    }

    #[test]
    fn feedback_capacity_unstable_examples() {
        let r = feedback_capacity(&p(2.0, 1.0), &b(1.0)).unwrap();
        assert!((r.rate_bits() - 1.207519).abs() < 1e-6);
        assert_eq!(r.regime, Regime::FeedbackGain);
        assert_eq!(r.kind, RateKind::Capacity);
        assert!(r.certified);
        let s = r.strategy.unwrap();
        assert!((s.lambda - 0.25).abs() < 1e-12);
        assert!((s.k_z - 23.0 / 24.0).abs() < 1e-12);
        assert!((r.error_variance.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.lambda * s.lambda * (2.0 / 3.0) + s.k_z - 1.0).abs() < 1e-12);

        let r = feedback_capacity(&p(1.5, 1.0), &b(2.0)).unwrap();
        let expect = 0.5 * (2.25f64 * 3.5 / 1.25).log2();
        assert!((r.rate_bits() - expect).abs() < 1e-9);
        assert!((r.rate_bits() - 1.327676).abs() < 1e-6);
    }

    #[test]
    fn feedback_capacity_memoryless() {
        let r = feedback_capacity(&p(0.0, 1.0), &b(1.0)).unwrap();
        assert_eq!(r.regime, Regime::MarginallyStable);
        assert_eq!(r.kind, RateKind::LowerBound);
        assert!((r.rate_bits() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn feedback_capacity_low_power_falls_back() {
        let r = feedback_capacity(&p(2.0, 1.0), &b(0.05)).unwrap();
        assert_eq!(r.regime, Regime::UnstableLowPower);
        assert_eq!(r.kind, RateKind::LowerBound);
        assert_eq!(r.strategy.unwrap().lambda, 0.0);
        // just above the regime threshold the closed-form K_Z is negative,
        // so the achievable bound is returned there too
        let r = feedback_capacity(&p(2.0, 1.0), &b(0.12)).unwrap();
        assert_eq!(r.regime, Regime::FeedbackGain);
        assert_eq!(r.kind, RateKind::LowerBound);
    }

    #[test]
    fn iid_examples() {
        let r = iid_nofeedback_lower_bound(&p(0.75, 1.0), &b(1.0)).unwrap();
        assert!((r.error_variance.unwrap() - 0.568980).abs() < 1e-5);
        assert!((r.rate_bits() - 0.607083).abs() < 1e-5);
        assert!(r.certified);

        let r = iid_nofeedback_lower_bound(&p(0.0, 1.0), &b(1.0)).unwrap();
        assert!((r.error_variance.unwrap() - 0.5).abs() < 1e-12);
        assert!((r.rate_bits() - 0.5).abs() < 1e-12);

        let r = iid_nofeedback_lower_bound(&p(1.0, 1.0), &b(1.0)).unwrap();
        let golden = (5.0f64.sqrt() - 1.0) / 2.0;
        assert!((r.error_variance.unwrap() - golden).abs() < 1e-12);
        assert!((r.rate_bits() - 0.5 * (golden + 2.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn iid_closed_form_agrees() {
        for &(c, k_w, kappa) in &[(0.75, 1.0, 1.0), (0.0, 1.0, 1.0), (1.5, 2.0, 0.3), (2.0, 1.0, 5.0)] {
            let r = iid_nofeedback_lower_bound(&p(c, k_w), &b(kappa)).unwrap();
            let cf = iid_rate_closed_form_nats(&p(c, k_w), &b(kappa));
            assert!((r.rate_nats - cf).abs() < 1e-10, "c={c} kappa={kappa}");
        }
    }

    #[test]
    fn markov_examples() {
        let r = markov_nofeedback_lower_bound(&p(0.0, 1.0), &b(1.0)).unwrap();
        assert!((r.rate_bits() - 0.5).abs() < 1e-9);
        assert!(r.strategy.unwrap().lambda.abs() < 1e-6);

        let iid = iid_nofeedback_lower_bound(&p(0.75, 1.0), &b(1.0)).unwrap();
        let r = markov_nofeedback_lower_bound(&p(0.75, 1.0), &b(1.0)).unwrap();
        assert!(r.rate_nats >= iid.rate_nats - 1e-9);
        assert!(r.rate_bits() >= 0.607083 - 1e-5);

        let r = markov_nofeedback_lower_bound(&p(0.75, 1.0), &b(16.0)).unwrap();
        assert!(r.rate_bits() >= 2.0850 - 1e-4);
        assert!(r.rate_bits() <= 2.0966);
    }

    #[test]
    fn noise_cancellation_examples() {
        let r = noise_cancellation_lower_bound(&p(0.5, 1.0), &b(1.0)).unwrap();
        let s = r.strategy.unwrap();
        assert!((s.k_z - 0.847127).abs() < 1e-5);
        assert!((r.rate_bits() - 0.5 * (1.847127f64).log2()).abs() < 1e-5);
        assert!((r.rate_bits() - 0.442642).abs() < 1e-5);
        assert_eq!(s.lambda, -0.5);
        assert!(r.certified);
        // power identity c^2 K + K_Z = kappa
        let k = r.error_variance.unwrap();
        assert!((0.25 * k + s.k_z - 1.0).abs() < 1e-9);

        let r = noise_cancellation_lower_bound(&p(0.0, 1.0), &b(1.0)).unwrap();
        assert!((r.strategy.unwrap().k_z - 1.0).abs() < 1e-12);
        assert!((r.rate_bits() - 0.5).abs() < 1e-12);

        let r = noise_cancellation_lower_bound(&p(0.9, 1.0), &b(0.0)).unwrap();
        assert!(r.strategy.unwrap().k_z.abs() < 1e-12);
        assert!(r.rate_nats.abs() < 1e-12);

        assert!(matches!(
            noise_cancellation_lower_bound(&p(1.0, 1.0), &b(1.0)),
            Err(Error::OutOfScope(_))
        ));
    }

    #[test]
    fn water_filling_examples() {
        let rate = water_filling_reference(&p(0.75, 1.0), &b(16.0)).unwrap();
        let expect = 0.5 * (1.0f64 + 16.0 + 0.5625 / 0.4375).ln();
        assert!((rate - expect).abs() < 1e-12);
        assert!((water_filling_threshold(&p(0.75, 1.0)) - 13.714286).abs() < 1e-5);

        let rate = water_filling_reference(&p(0.0, 1.0), &b(1.0)).unwrap();
        assert!((nats_to_bits(rate) - 0.5).abs() < 1e-12);

        assert!(matches!(
            water_filling_reference(&p(0.75, 1.0), &b(10.0)),
            Err(Error::OutOfValidityRange { .. })
        ));
        assert!(matches!(
            water_filling_reference(&p(0.75, 2.0), &b(16.0)),
            Err(Error::OutOfScope(_))
        ));
    }

    #[test]
    fn kim_examples() {
        let (s1, s2) = kim_solutions(&p(0.0, 1.0), &b(1.0)).unwrap();
        assert!((s1.strategy.unwrap().lambda - 2.0f64.sqrt()).abs() < 1e-9);
        assert!((nats_to_bits(s1.rate_nats) - 0.5).abs() < 1e-9);
        assert_eq!(s2.rate_nats, 0.0);
        assert_eq!(s2.error_variance, Some(0.0));

        let (s1, s2) = kim_solutions(&p(0.5, 1.0), &b(1.0)).unwrap();
        assert!(!s1.flags.unwrap().stabilizable);
        assert!(s2.flags.unwrap().stabilizable);
        // power identity lambda^2 K = kappa of solution 1
        let s = s1.strategy.unwrap();
        assert!((s.lambda * s.lambda * s1.error_variance.unwrap() - 1.0).abs() < 1e-8);
        // x0 = 1/lambda satisfies kappa x^2 = (1 - x^2)/(1 + |c| x)^2
        let x0 = 1.0 / s.lambda;
        let lhs = 1.0 * x0 * x0;
        let rhs = (1.0 - x0 * x0) / (1.0 + 0.5 * x0).powi(2);
        assert!((lhs - rhs).abs() < 1e-8);

        // negative c mirrors the positive-c solution
        let (s1n, _) = kim_solutions(&p(-0.5, 1.0), &b(1.0)).unwrap();
        assert!((s1n.strategy.unwrap().lambda + s.lambda).abs() < 1e-9);
        assert!((s1n.rate_nats - s1.rate_nats).abs() < 1e-12);
    }

    #[test]
    fn kkt_at_closed_form_optimum() {
        let params = p(2.0, 1.0);
        let budget = b(1.0);
        let mult = optimal_multipliers(&params, &budget);
        assert!((mult[0] - 1.0).abs() < 1e-12);
        assert!((mult[1] - 4.0).abs() < 1e-12);
        let r = feedback_capacity(&params, &budget).unwrap();
        let res = kkt_residuals(
            &params,
            &budget,
            &r.strategy.unwrap(),
            r.error_variance.unwrap(),
            mult,
        );
        assert!(res.max_abs() < 1e-8, "residuals {:?}", res);
        assert!(res.dual_feasible);
    }

    #[test]
    fn kkt_zero_candidate_and_dual_check() {
        let params = p(2.0, 1.0);
        let budget = b(1.0);
        let strat = Strategy::new(0.0, 0.0).unwrap();
        let res = kkt_residuals(&params, &budget, &strat, 0.0, [0.0; 4]);
        assert!((res.stationarity[0] - 1.0).abs() < 1e-12);
        assert_eq!(res.primal[0], 0.0);
        assert_eq!(res.primal[1], 0.0);
        let res = kkt_residuals(&params, &budget, &strat, 0.0, [0.0, -1.0, 0.0, 0.0]);
        assert!(!res.dual_feasible);
    }

    #[test]
    fn time_sharing_degenerate_splits() {
        let params = p(2.0, 1.0);
        let budget = b(1.0);
        let fb = feedback_capacity(&params, &budget).unwrap().rate_nats;
        let iid = iid_nofeedback_lower_bound(&params, &budget).unwrap().rate_nats;
        let r = time_sharing_rate(&params, &budget, 1.0, 1.0, 0.0).unwrap();
        assert!((r - fb).abs() < 1e-12);
        let r = time_sharing_rate(&params, &budget, 0.0, 0.0, 1.0).unwrap();
        assert!((r - iid).abs() < 1e-12);
        assert!(matches!(
            time_sharing_rate(&params, &budget, 0.5, 4.0, 4.0),
            Err(Error::InfeasibleSplit(_))
        ));
    }

    #[test]
    fn time_sharing_can_beat_the_single_budget_rate() {
        // kappa = 1 sits below the power where the feedback closed form is
        // feasible for c = 1.5, so feedback_capacity(1) is the IID bound;
        // splitting into a high-power feedback leg beats it
        let params = p(1.5, 1.0);
        let budget = b(1.0);
        let single = feedback_capacity(&params, &budget).unwrap().rate_nats;
        let split = time_sharing_rate(&params, &budget, 0.5, 1.36, 0.64).unwrap();
        assert!(split > single + 1e-3);
    }

    #[test]
    fn finite_horizon_n1_exact() {
        for &c in &[0.0, 0.5, 2.0] {
            let (sched, rate) =
                finite_horizon_optimize(&p(c, 1.0), &b(1.0), 1, &FiniteHorizonConfig::default())
                    .unwrap();
            assert!((nats_to_bits(rate) - 0.5).abs() < 1e-12);
            assert_eq!(sched.k_zs, vec![1.0]);
        }
    }

    #[test]
    fn finite_horizon_dominates_time_invariant() {
        let params = p(2.0, 1.0);
        let budget = b(1.0);
        let cfg = FiniteHorizonConfig { starts: 2, sweeps: 15 };
        let (sched, rate) = finite_horizon_optimize(&params, &budget, 30, &cfg).unwrap();
        let (_, power) = finite_horizon_evaluate(&params, &sched);
        assert!(power <= 1.0 + 1e-6);

        // the projected time-invariant optimum is a feasible point
        let ti = feedback_capacity(&params, &budget).unwrap().strategy.unwrap();
        let ti_sched = project_power(&params, &vec![ti.lambda; 30], &vec![ti.k_z; 30], 1.0);
        let (ti_rate, _) = finite_horizon_evaluate(&params, &ti_sched);
        assert!(rate >= ti_rate - 1e-9);
        assert!((nats_to_bits(rate) - 1.2075).abs() < 0.05);
    }

    #[test]
    fn ordering_nc_below_iid() {
        for &c in &[-0.9, -0.5, 0.3, 0.75] {
            for &kappa in &[0.2, 1.0, 5.0] {
                let nc = noise_cancellation_lower_bound(&p(c, 1.0), &b(kappa)).unwrap();
                let iid = iid_nofeedback_lower_bound(&p(c, 1.0), &b(kappa)).unwrap();
                assert!(nc.rate_nats < iid.rate_nats, "c={c} kappa={kappa}");
            }
        }
    }

    #[test]
    fn symmetry_under_sign_flip() {
        for &kappa in &[0.3, 1.0, 4.0] {
            for &c in &[0.6, 1.5, 2.0] {
                let plus = feedback_capacity(&p(c, 1.0), &b(kappa)).unwrap();
                let minus = feedback_capacity(&p(-c, 1.0), &b(kappa)).unwrap();
                assert!((plus.rate_nats - minus.rate_nats).abs() < 1e-12);
                let plus = iid_nofeedback_lower_bound(&p(c, 1.0), &b(kappa)).unwrap();
                let minus = iid_nofeedback_lower_bound(&p(-c, 1.0), &b(kappa)).unwrap();
                assert!((plus.rate_nats - minus.rate_nats).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scale_covariance() {
        for &s in &[0.5, 3.0, 10.0] {
            let base = feedback_capacity(&p(2.0, 1.0), &b(1.0)).unwrap();
            let scaled = feedback_capacity(&p(2.0, s), &b(s)).unwrap();
            assert!((base.rate_nats - scaled.rate_nats).abs() < 1e-12);
            let base = iid_nofeedback_lower_bound(&p(0.75, 1.0), &b(2.0)).unwrap();
            let scaled = iid_nofeedback_lower_bound(&p(0.75, s), &b(2.0 * s)).unwrap();
            assert!((base.rate_nats - scaled.rate_nats).abs() < 1e-12);
        }
    }
}
