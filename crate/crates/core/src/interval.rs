//! Confidence sets for the second moment, the channel and noise variances,
//! and their ratio.
//!
//! Endpoints are reported exactly as computed. The noisy intervals can have
//! negative lower endpoints; [`ConfidenceInterval::clamped_at_zero`] exists
//! for display only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::SignalPlan;
use crate::planner::AccuracySpec;
use crate::special::Probability;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    /// Guaranteed level `1 - δ` when the sample size meets the matching bound.
    pub confidence: Probability,
}

impl ConfidenceInterval {
    /// Open-interval membership, matching the strict inequalities of the guarantees.
    pub fn contains(&self, value: f64) -> bool {
        self.lower < value && value < self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn clamped_at_zero(&self) -> Self {
        Self {
            lower: self.lower.max(0.0),
            upper: self.upper.max(0.0),
            confidence: self.confidence,
        }
    }
}

/// `[μ̂/(1+ε), μ̂/(1-ε)]` for the Rayleigh second moment.
pub fn noiseless_interval(mu_hat: f64, spec: AccuracySpec) -> ConfidenceInterval {
    let e = spec.epsilon();
    ConfidenceInterval {
        lower: mu_hat / (1.0 + e),
        upper: mu_hat / (1.0 - e),
        confidence: spec.confidence(),
    }
}

/// Simultaneous intervals for `σ_H²` and `σ_V²` from half-mean powers `x1`, `x2`.
pub fn noisy_joint_intervals(
    x1: f64,
    x2: f64,
    plan: &SignalPlan,
    spec: AccuracySpec,
) -> (ConfidenceInterval, ConfidenceInterval) {
    let e = spec.epsilon();
    let (p1, p2, dp) = (plan.p_s1(), plan.p_s2(), plan.delta_p());
    let (lo, hi) = (1.0 + e, 1.0 - e);
    let i_h = ConfidenceInterval {
        lower: (x1 / lo - x2 / hi) / dp,
        upper: (x1 / hi - x2 / lo) / dp,
        confidence: spec.confidence(),
    };
    let i_v = ConfidenceInterval {
        lower: (p1 * x2 / lo - p2 * x1 / hi) / dp,
        upper: (p1 * x2 / hi - p2 * x1 / lo) / dp,
        confidence: spec.confidence(),
    };
    (i_h, i_v)
}

/// Interval for `σ_H²/σ_V²` when the second power level is zero.
pub fn snr_interval_zero_p2(
    x1: f64,
    x2: f64,
    p_s1: f64,
    spec: AccuracySpec,
) -> Result<ConfidenceInterval> {
    if !(x2 > 0.0) {
        return Err(Error::Precondition(
            "noise-only half-mean power must be positive".into(),
        ));
    }
    if !(p_s1 > 0.0) {
        return Err(Error::Precondition("p_s1 must be positive".into()));
    }
    let e = spec.epsilon();
    let ratio = x1 / x2;
    Ok(ConfidenceInterval {
        lower: ((1.0 - e) * ratio / (1.0 + e) - 1.0) / p_s1,
        upper: ((1.0 + e) * ratio / (1.0 - e) - 1.0) / p_s1,
        confidence: spec.confidence(),
    })
}

/// Interval for `σ_H²/σ_V²` with an arbitrary second power level.
///
/// Both denominators `((1±ε)/(1∓ε))·P_s1·x2 - P_s2·x1` must be positive.
pub fn snr_interval_general(
    x1: f64,
    x2: f64,
    plan: &SignalPlan,
    spec: AccuracySpec,
) -> Result<ConfidenceInterval> {
    let e = spec.epsilon();
    let (p1, p2) = (plan.p_s1(), plan.p_s2());
    let widen = (1.0 + e) / (1.0 - e);
    let denom_lower = widen * p1 * x2 - p2 * x1;
    let denom_upper = p1 * x2 / widen - p2 * x1;
    for d in [denom_lower, denom_upper] {
        if !(d > 0.0) {
            return Err(Error::NonPositiveDenominator(d));
        }
    }
    let numerator = (1.0 - p2 / p1) * x1;
    Ok(ConfidenceInterval {
        lower: numerator / denom_lower - 1.0 / p1,
        upper: numerator / denom_upper - 1.0 / p1,
        confidence: spec.confidence(),
    })
}
