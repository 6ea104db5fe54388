//! Trajectory-prefix propensity products and importance weights on the
//! extended nonnegative half-line [0, +inf].
//!
//! Products are accumulated in log space. A product whose log falls below
//! [`LOG_ZERO_CUTOFF`] is treated as exact zero, which keeps long-horizon
//! underflow from silently corrupting weight ratios.

use crate::error::{Error, Result};
use crate::policy::PolicyModel;
use crate::types::Trajectory;

/// Log-space cutoff below which a propensity product is exact zero (e^-700
/// sits just above the smallest normal f64).
pub const LOG_ZERO_CUTOFF: f64 = -700.0;

/// A nonnegative real extended with a distinguished +infinity element.
///
/// The reciprocal conventions are exact: `1/0 = +inf` and `1/+inf = 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ExtendedWeight(f64);

impl ExtendedWeight {
    pub const ZERO: ExtendedWeight = ExtendedWeight(0.0);
    pub const INFINITE: ExtendedWeight = ExtendedWeight(f64::INFINITY);
    pub const ONE: ExtendedWeight = ExtendedWeight(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::Argument(format!("weight {value} outside [0, +inf]")));
        }
        Ok(ExtendedWeight(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    /// Exact reciprocal under the extended conventions.
    pub fn recip(self) -> ExtendedWeight {
        if self.is_zero() {
            ExtendedWeight::INFINITE
        } else if self.is_infinite() {
            ExtendedWeight::ZERO
        } else {
            ExtendedWeight(1.0 / self.0)
        }
    }
}

impl std::fmt::Display for ExtendedWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Sum of log step propensities over the first `t` steps; `-inf` when any
/// factor is exactly zero.
pub(crate) fn log_prefix_propensity(policy: &dyn PolicyModel, trajectory: &Trajectory, t: usize) -> f64 {
    let mut acc = 0.0;
    for step in &trajectory.steps[..t] {
        let p = policy.propensity(&step.state, step.action);
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += p.ln();
    }
    acc
}

pub(crate) fn log_is_zero(log_p: f64) -> bool {
    log_p < LOG_ZERO_CUTOFF
}

/// Weight from two log products, `target / behavior`, with zero snapping.
pub(crate) fn weight_from_logs(log_target: f64, log_behavior: f64, t: usize) -> Result<ExtendedWeight> {
    match (log_is_zero(log_target), log_is_zero(log_behavior)) {
        (true, true) => Err(Error::InvalidSupport { t }),
        (true, false) => Ok(ExtendedWeight::ZERO),
        (false, true) => Ok(ExtendedWeight::INFINITE),
        (false, false) => Ok(ExtendedWeight((log_target - log_behavior).exp())),
    }
}

fn check_range(trajectory: &Trajectory, t: usize) -> Result<()> {
    if t == 0 || t > trajectory.horizon() {
        return Err(Error::StepOutOfRange { t, len: trajectory.horizon() });
    }
    Ok(())
}

/// Product of step propensities over steps 1..t; exactly 0 if any factor is 0
/// or the log-space product falls below the underflow cutoff.
pub fn trajectory_propensity(policy: &dyn PolicyModel, trajectory: &Trajectory, t: usize) -> Result<f64> {
    check_range(trajectory, t)?;
    let lp = log_prefix_propensity(policy, trajectory, t);
    if log_is_zero(lp) {
        Ok(0.0)
    } else {
        Ok(lp.exp())
    }
}

/// Prefix importance weight `target(tau_t) / behavior(tau_t)` as an extended
/// weight: 0 when the target propensity vanishes, +inf when only the
/// behavior propensity does.
pub fn prefix_weight(
    target: &dyn PolicyModel,
    behavior: &dyn PolicyModel,
    trajectory: &Trajectory,
    t: usize,
) -> Result<ExtendedWeight> {
    check_range(trajectory, t)?;
    let lt = log_prefix_propensity(target, trajectory, t);
    let lb = log_prefix_propensity(behavior, trajectory, t);
    weight_from_logs(lt, lb, t)
}
