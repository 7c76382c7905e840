//! Capacity computations for additive Gaussian noise (AGN) channels driven by
//! first-order autoregressive noise `V_t = c V_{t-1} + W_t`.
//!
//! The crate is organised around four layers:
//!
//! - [`channel`]: parameter validation and the three-way regime partition of
//!   the `(c, K_W, kappa)` parameter space.
//! - [`riccati`]: the generalized difference/algebraic Riccati equations that
//!   govern the mean-square error of estimating the noise from the channel
//!   outputs, together with the detectability / stabilizability predicates
//!   that decide their convergence.
//! - [`capacity`]: closed-form feedback capacity for unstable noise at high
//!   power, achievable lower bounds without feedback (IID and Markov inputs),
//!   a noise-cancellation bound, a water-filling reference, KKT certification
//!   of optima, time sharing, and a finite-horizon optimizer.
//! - [`sim`]: Monte Carlo simulation of the channel under a time-invariant
//!   strategy, running the generalized Kalman filter forward and comparing
//!   empirical statistics against the analytic predictions.
//!
//! All rates are computed internally in nats per channel use;
//! [`nats_to_bits`] converts for presentation.
//!
//! ```
//! use agn_capacity::channel::{ChannelParams, PowerBudget, Regime};
//! use agn_capacity::capacity::feedback_capacity;
//!
//! let params = ChannelParams::new(2.0, 1.0).unwrap();
//! let budget = PowerBudget::new(1.0).unwrap();
//! let result = feedback_capacity(&params, &budget).unwrap();
//! assert_eq!(result.regime, Regime::FeedbackGain);
//! assert!((result.rate_bits() - 1.207519).abs() < 1e-6);
//! ```

pub mod capacity;
pub mod channel;
pub mod riccati;
pub mod sim;

use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("noise innovation variance must be strictly positive, got {0}")]
    NonPositiveNoiseVariance(f64),
    #[error("power budget must be nonnegative, got {0}")]
    NegativePower(f64),
    #[error("input {0} must be finite")]
    NonFiniteInput(&'static str),
    #[error("strategy innovations variance must be nonnegative, got {0}")]
    NegativeInnovationsVariance(f64),
    #[error("Lyapunov recursion diverges for |lambda| >= 1 with k_z > 0")]
    Divergent,
    #[error("DRE trajectory exceeded the divergence ceiling after {steps} steps")]
    Diverged { steps: usize },
    #[error("no stabilizing ARE solution: detectability/stabilizability fails")]
    NoStabilizingSolution,
    #[error("{0}")]
    OutOfScope(String),
    #[error("water-filling formula invalid: kappa {kappa} at or below threshold {threshold}")]
    OutOfValidityRange { kappa: f64, threshold: f64 },
    #[error("optimizer failed: {0}")]
    OptimizerFailed(String),
    #[error("root finding failed: {0}")]
    RootFindFailed(String),
    #[error("infeasible time-sharing split: {0}")]
    InfeasibleSplit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Conversion factor from nats to bits (1 / ln 2).
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// Conversion factor from bits to nats.
pub fn bits_to_nats(bits: f64) -> f64 {
    bits * std::f64::consts::LN_2
}
