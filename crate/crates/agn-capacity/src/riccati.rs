//! Generalized difference and algebraic Riccati equations for the estimation
//! error of the AR(1) noise given the channel outputs.
//!
//! The state/observation pair behind these equations has correlated noises,
//! so convergence of the difference equation to the algebraic fixed point is
//! *not* automatic: it is governed by the detectability and stabilizability
//! predicates of [`structural_tests`]. With the scalar shorthand
//!
//! ```text
//! A = c,  C = lambda + c,  R = k_z + k_w,
//! B = 1 - k_w / R,  A* = c - k_w C / R,  B*^(1/2) = sqrt(k_w B),
//! ```
//!
//! the DRE limit equals the stabilizing ARE root exactly when `{A, C}` is
//! detectable and `{A*, B*^(1/2)}` is stabilizable.
//!
//! ```
//! use agn_capacity::channel::{ChannelParams, Strategy};
//! use agn_capacity::riccati::{dre_iterate, DRE_MAX_STEPS, DRE_TOL};
//!
//! // c = 1, lambda = 0, K_Z = K_W = 1: the fixed point is the golden ratio
//! let params = ChannelParams::new(1.0, 1.0).unwrap();
//! let strategy = Strategy::new(0.0, 1.0).unwrap();
//! let traj = dre_iterate(&params, &strategy, 0.0, DRE_MAX_STEPS, DRE_TOL).unwrap();
//! let golden = (5f64.sqrt() - 1.0) / 2.0;
//! assert!((traj.limit.unwrap() - golden).abs() < 1e-9);
//! ```

use crate::channel::{ChannelParams, Strategy};
use crate::{Error, Result};

/// Tolerance on successive DRE differences, relative to `1 + |K|`.
pub const DRE_TOL: f64 = 1e-12;
/// Relative tolerance for ARE-residual certification.
pub const ARE_RESIDUAL_TOL: f64 = 1e-9;
/// Default iteration cap for [`dre_iterate`].
pub const DRE_MAX_STEPS: usize = 1_000_000;
/// Trajectories exceeding this value are declared diverged.
pub const DIVERGENCE_CEILING: f64 = 1e12;

/// Structural predicates of the estimation problem for a given strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuralFlags {
    pub detectable: bool,
    pub unit_circle_controllable: bool,
    pub stabilizable: bool,
}

impl StructuralFlags {
    pub fn all(&self) -> bool {
        self.detectable && self.unit_circle_controllable && self.stabilizable
    }
}

/// Scalar detectability / unit-circle-controllability / stabilizability tests.
///
/// * `{A, C}` is detectable iff `|c| < 1` or `lambda + c != 0` (an output
///   injection can always stabilize a nonzero `C`).
/// * For `k_z > 0` the square root `B*^(1/2)` is nonzero, so a gain can place
///   the closed loop anywhere: unit-circle controllability and
///   stabilizability both hold.
/// * For `k_z = 0`: unit-circle controllable iff `|lambda| != 1`,
///   stabilizable iff `|lambda| < 1`.
pub fn structural_tests(params: &ChannelParams, strategy: &Strategy) -> StructuralFlags {
    let detectable = params.c.abs() < 1.0 || strategy.lambda + params.c != 0.0;
    let (ucc, stab) = if strategy.k_z > 0.0 {
        (true, true)
    } else {
        (strategy.lambda.abs() != 1.0, strategy.lambda.abs() < 1.0)
    };
    StructuralFlags {
        detectable,
        unit_circle_controllable: ucc,
        stabilizable: stab,
    }
}

/// One step of the generalized DRE for the noise-estimation error under
/// feedback:
///
/// ```text
/// K' = c^2 K + K_W - (K_W + c K (lambda + c))^2
///                    / (K_Z + K_W + (lambda + c)^2 K)
/// ```
pub fn dre_step_feedback(params: &ChannelParams, strategy: &Strategy, k_prev: f64) -> f64 {
    let c = params.c;
    let cc = strategy.lambda + c;
    let num = params.k_w + c * k_prev * cc;
    let den = strategy.k_z + params.k_w + cc * cc * k_prev;
    let k = c * c * k_prev + params.k_w - num * num / den;
    // roundoff can push a true zero slightly negative
    if k < 0.0 && k > -1e-12 {
        0.0
    } else {
        k
    }
}

/// One step of the generalized DRE for the *input*-estimation error of the
/// Markov nofeedback input `X_t = lambda X_{t-1} + Z_t`:
///
/// ```text
/// K' = lambda^2 K + K_Z - (K_Z + lambda K (lambda - c))^2
///                         / (K_Z + K_W + (lambda - c)^2 K)
/// ```
pub fn dre_step_nofeedback(params: &ChannelParams, strategy: &Strategy, k_prev: f64) -> f64 {
    let l = strategy.lambda;
    let d = l - params.c;
    let num = strategy.k_z + l * k_prev * d;
    let den = strategy.k_z + params.k_w + d * d * k_prev;
    let k = l * l * k_prev + strategy.k_z - num * num / den;
    if k < 0.0 && k > -1e-12 {
        0.0
    } else {
        k
    }
}

/// Fixed point `K_X = k_z / (1 - lambda^2)` of the input-power Lyapunov
/// recursion `K_X' = lambda^2 K_X + k_z` from `K_X = 0`.
pub fn lyapunov_fixed_point(strategy: &Strategy) -> Result<f64> {
    if strategy.lambda.abs() < 1.0 {
        Ok(strategy.k_z / (1.0 - strategy.lambda * strategy.lambda))
    } else if strategy.k_z == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::Divergent)
    }
}

/// Kalman gain `M` and closed-loop transition map `F = c - M (lambda + c)` of
/// the error recursion, evaluated at error variance `k`.
pub fn kalman_gain_and_map(params: &ChannelParams, strategy: &Strategy, k: f64) -> (f64, f64) {
    let cc = strategy.lambda + params.c;
    let m = (params.k_w + params.c * k * cc) / (strategy.k_z + params.k_w + cc * cc * k);
    let f = params.c - m * cc;
    (m, f)
}

/// Real roots of the ARE and the stabilizing one, when it exists.
#[derive(Debug, Clone, PartialEq)]
pub struct AreSolution {
    /// All real roots of the ARE quadratic, ascending.
    pub roots: Vec<f64>,
    /// The unique `K >= 0` with `|F(K)| < 1`, present iff the detectability
    /// and stabilizability flags hold.
    pub stabilizing_root: Option<f64>,
    /// Closed-loop map at the stabilizing root (at `K = 0` when absent).
    pub closed_loop: f64,
}

/// Expands the ARE into its quadratic in `K` and classifies the roots.
///
/// The quadratic is `a K^2 + b K + d = 0` with
///
/// ```text
/// a = (lambda + c)^2
/// b = (k_z + k_w)(1 - c^2) - k_w (lambda^2 - c^2)
/// d = -k_w k_z
/// ```
///
/// For `k_z = 0` this factors into roots `{0, k_w (lambda^2 - 1) / (lambda + c)^2}`
/// (the second only for `lambda != -c`). For `lambda = -c` the equation is
/// linear and has the single root `k_w k_z / ((k_z + k_w)(1 - c^2))`.
pub fn are_solution(params: &ChannelParams, strategy: &Strategy) -> AreSolution {
    let c = params.c;
    let (l, k_z, k_w) = (strategy.lambda, strategy.k_z, params.k_w);
    let a = (l + c) * (l + c);
    let b = (k_z + k_w) * (1.0 - c * c) - k_w * (l * l - c * c);
    let d = -k_w * k_z;

    let mut roots: Vec<f64> = Vec::new();
    if a == 0.0 {
        // lambda = -c: linear equation b K + d = 0
        if d == 0.0 {
            roots.push(0.0);
        } else if b != 0.0 {
            roots.push(-d / b);
        }
    } else {
        let disc = b * b - 4.0 * a * d;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // numerically stable quadratic roots
            let q = -0.5 * (b + b.signum() * sq);
            let r1 = if q != 0.0 { d / q } else { 0.0 };
            let r2 = q / a;
            roots.push(r1);
            if (r2 - r1).abs() > 0.0 {
                roots.push(r2);
            }
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let flags = structural_tests(params, strategy);
    let stabilizing_root = if flags.detectable && flags.stabilizable {
        roots
            .iter()
            .copied()
            .find(|&k| k >= -1e-12 && kalman_gain_and_map(params, strategy, k.max(0.0)).1.abs() < 1.0)
            .map(|k| k.max(0.0))
    } else {
        None
    };
    let closed_loop = kalman_gain_and_map(params, strategy, stabilizing_root.unwrap_or(0.0)).1;
    AreSolution {
        roots,
        stabilizing_root,
        closed_loop,
    }
}

/// Like [`are_solution`] but errs when the structural flags rule out a
/// stabilizing root.
pub fn are_stabilizing_solution(params: &ChannelParams, strategy: &Strategy) -> Result<AreSolution> {
    let sol = are_solution(params, strategy);
    if sol.stabilizing_root.is_some() {
        Ok(sol)
    } else {
        Err(Error::NoStabilizingSolution)
    }
}

/// A DRE trajectory together with its convergence verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct DreTrajectory {
    /// `K_0, K_1, ...` up to termination.
    pub values: Vec<f64>,
    pub converged: bool,
    /// Terminal value when both the successive difference and the ARE
    /// residual fell below tolerance.
    pub limit: Option<f64>,
}

/// Iterates [`dre_step_feedback`] from `k0`.
///
/// Converged means the successive difference dropped below `tol` (relative
/// to `1 + |K|`, so large fixed points are not defeated by rounding) within
/// `max_steps` *and* the ARE residual at the terminal value is below
/// [`ARE_RESIDUAL_TOL`] (relative). Values above [`DIVERGENCE_CEILING`]
/// terminate with [`Error::Diverged`].
pub fn dre_iterate(
    params: &ChannelParams,
    strategy: &Strategy,
    k0: f64,
    max_steps: usize,
    tol: f64,
) -> Result<DreTrajectory> {
    let mut values = vec![k0];
    let mut k = k0;
    let mut converged = false;
    for step in 0..max_steps {
        let next = dre_step_feedback(params, strategy, k);
        values.push(next);
        if !next.is_finite() || next.abs() > DIVERGENCE_CEILING {
            return Err(Error::Diverged { steps: step + 1 });
        }
        if (next - k).abs() < tol * (1.0 + k.abs()) {
            k = next;
            converged = true;
            break;
        }
        k = next;
    }
    let residual = (dre_step_feedback(params, strategy, k) - k).abs() / k.abs().max(1.0);
    let certified = converged && residual < ARE_RESIDUAL_TOL;
    Ok(DreTrajectory {
        values,
        converged: certified,
        limit: if certified { Some(k) } else { None },
    })
}
