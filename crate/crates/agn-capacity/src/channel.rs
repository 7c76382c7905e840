//! Channel parameters, power budgets, input strategies, and the regime
//! partition of the `(c, K_W, kappa)` parameter space.

use crate::{Error, Result};

/// AR(1) noise parameters: `V_t = c V_{t-1} + W_t`, `W_t ~ N(0, K_W)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// AR coefficient `c`; any finite real value (stable or unstable).
    pub c: f64,
    /// Innovation variance `K_W > 0` of the noise.
    pub k_w: f64,
}

impl ChannelParams {
    pub fn new(c: f64, k_w: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::NonFiniteInput("c"));
        }
        if !k_w.is_finite() {
            return Err(Error::NonFiniteInput("k_w"));
        }
        if k_w <= 0.0 {
            return Err(Error::NonPositiveNoiseVariance(k_w));
        }
        Ok(Self { c, k_w })
    }
}

/// Average input power constraint `kappa >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    pub kappa: f64,
}

impl PowerBudget {
    pub fn new(kappa: f64) -> Result<Self> {
        if !kappa.is_finite() {
            return Err(Error::NonFiniteInput("kappa"));
        }
        if kappa < 0.0 {
            return Err(Error::NegativePower(kappa));
        }
        Ok(Self { kappa })
    }
}

/// Time-invariant channel input strategy.
///
/// The input is `X_t = lambda (V_{t-1} - Vhat_{t-1}) + Z_t` with
/// `Z_t ~ N(0, k_z)`: a feedback gain on the noise-estimation error plus an
/// independent innovations term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strategy {
    pub lambda: f64,
    pub k_z: f64,
}

impl Strategy {
    pub fn new(lambda: f64, k_z: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::NonFiniteInput("lambda"));
        }
        if !k_z.is_finite() {
            return Err(Error::NonFiniteInput("k_z"));
        }
        if k_z < 0.0 {
            return Err(Error::NegativeInnovationsVariance(k_z));
        }
        Ok(Self { lambda, k_z })
    }
}

/// The three capacity regimes of the `(c, K_W, kappa)` parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `c^2 > 1` and `kappa > K_W / (c^2 - 1)^2`: feedback strictly helps.
    FeedbackGain,
    /// `c^2 > 1` and `kappa <= K_W / (c^2 - 1)^2`: unstable noise, low power;
    /// feedback does not increase capacity.
    UnstableLowPower,
    /// `c^2 <= 1`: marginally stable noise; feedback does not increase
    /// capacity for any power.
    MarginallyStable,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::FeedbackGain => "FeedbackGain",
            Regime::UnstableLowPower => "UnstableLowPower",
            Regime::MarginallyStable => "MarginallyStable",
        };
        f.write_str(s)
    }
}

/// Validates the joint invariants of the channel parameters and the power
/// budget.
pub fn validate(params: &ChannelParams, budget: &PowerBudget) -> Result<()> {
    ChannelParams::new(params.c, params.k_w)?;
    PowerBudget::new(budget.kappa)?;
    Ok(())
}

/// Power threshold `K_W / (c^2 - 1)^2` separating the feedback-gain regime
/// from the unstable low-power regime. Only meaningful for `c^2 > 1`.
pub fn regime_threshold(params: &ChannelParams) -> f64 {
    let d = params.c * params.c - 1.0;
    params.k_w / (d * d)
}

/// Classifies `(c, K_W, kappa)` into one of the three regimes.
///
/// The boundary `kappa = K_W / (c^2 - 1)^2` belongs to
/// [`Regime::UnstableLowPower`], and `c^2 = 1` to
/// [`Regime::MarginallyStable`].
pub fn classify_regime(params: &ChannelParams, budget: &PowerBudget) -> Result<Regime> {
    validate(params, budget)?;
    let c2 = params.c * params.c;
    if c2 <= 1.0 {
        Ok(Regime::MarginallyStable)
    } else if budget.kappa > regime_threshold(params) {
        Ok(Regime::FeedbackGain)
    } else {
        Ok(Regime::UnstableLowPower)
    }
}
