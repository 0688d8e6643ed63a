//! Sample-size planning for relative-error estimation of Rayleigh power.
//!
//! Three families of quantities live here:
//!
//! * closed-form a priori bounds (noiseless, noisy two-power, and SNR),
//! * exact minimal sample sizes found by searching the chi-square coverage,
//! * the inverse map from a sample size back to an achievable margin.
//!
//! With `N` i.i.d. samples the statistic `2N·μ̂_N/μ` is `χ²(2N)`, so the
//! probability that the relative error stays below `ε` is exactly
//! `F(2N(1+ε)) - F(2N(1-ε))` for the `χ²(2N)` CDF `F`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{chi2_cdf, normal_upper_quantile, Probability};

/// Margin of relative error `epsilon` and confidence gap `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracySpec {
    epsilon: f64,
    delta: f64,
}

impl AccuracySpec {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Domain(format!(
                "epsilon must satisfy 0 < epsilon < 1, got {epsilon}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Domain(format!(
                "delta must satisfy 0 < delta < 1, got {delta}"
            )));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The guaranteed confidence level `1 - delta`.
    pub fn confidence(&self) -> Probability {
        Probability::saturating(1.0 - self.delta)
    }
}

/// Number of i.i.d. measurements taken at one power level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleSize(u64);

impl SampleSize {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("sample size must be at least 1".into()));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl std::fmt::Display for SampleSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Least integer strictly greater than `bound`.
///
/// A bound that lands within a few ulps of an integer is treated as that
/// integer, so rounding noise can never hand back a value equal to the bound.
pub(crate) fn least_integer_above(bound: f64) -> u64 {
    let nearest = bound.round();
    let n = if (bound - nearest).abs() <= 8.0 * f64::EPSILON * bound.abs().max(1.0) {
        nearest + 1.0
    } else {
        bound.floor() + 1.0
    };
    n.max(1.0) as u64
}

fn noiseless_bound(epsilon: f64, log_term: f64) -> f64 {
    2.0 * (3.0 + 2.0 * epsilon) * log_term / (3.0 * epsilon * epsilon)
}

/// A priori sample size guaranteeing relative error below `ε` with
/// probability above `1 - δ` in the noiseless case.
pub fn apriori_noiseless(spec: AccuracySpec) -> SampleSize {
    let bound = noiseless_bound(spec.epsilon, (2.0 / spec.delta).ln());
    SampleSize(least_integer_above(bound))
}

/// A priori sample size per power level for the simultaneous noisy intervals.
pub fn apriori_noisy(spec: AccuracySpec) -> SampleSize {
    let bound = noiseless_bound(spec.epsilon, (4.0 / spec.delta).ln());
    SampleSize(least_integer_above(bound))
}

/// A priori sample size for relative-error SNR estimation with `P_s2 = 0`.
pub fn apriori_snr(spec: AccuracySpec) -> SampleSize {
    let e = spec.epsilon;
    let bound = 2.0 * (2.0 + e) * (6.0 + 5.0 * e) * (4.0 / spec.delta).ln() / (3.0 * e * e);
    SampleSize(least_integer_above(bound))
}

/// Exact probability that `μ̂_N` lies within relative error `epsilon` of `μ`.
pub fn exact_coverage(n: SampleSize, epsilon: f64) -> Result<Probability> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Domain(format!(
            "epsilon must satisfy 0 <= epsilon < 1, got {epsilon}"
        )));
    }
    let dof = 2 * n.0;
    let scale = dof as f64;
    let upper = chi2_cdf(dof, scale * (1.0 + epsilon))?.value();
    let lower = chi2_cdf(dof, scale * (1.0 - epsilon))?.value();
    Ok(Probability::saturating(upper - lower))
}

/// Smallest `N ≥ 1` with `accept(N)`, assuming the predicate is monotone
/// near the answer. The binary-search result is verified at `N - 1` and `N`;
/// on failure a linear scan from `N - 8` takes over.
fn search_min_n<F>(initial_upper: u64, accept: F) -> Result<SampleSize>
where
    F: Fn(u64) -> Result<bool>,
{
    let mut hi = initial_upper.max(1);
    while !accept(hi)? {
        hi = hi
            .checked_mul(2)
            .ok_or(Error::NoConvergence("sample-size search overflowed"))?;
    }
    let mut lo = 1;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if accept(mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let verified = accept(lo)? && (lo == 1 || !accept(lo - 1)?);
    if verified {
        return Ok(SampleSize(lo));
    }
    let mut n = lo.saturating_sub(8).max(1);
    loop {
        if accept(n)? {
            return Ok(SampleSize(n));
        }
        n += 1;
    }
}

/// Minimal `N` whose exact coverage at `ε` exceeds `1 - δ`.
pub fn min_n_noiseless(spec: AccuracySpec) -> SampleSize {
    let target = 1.0 - spec.delta;
    search_min_n(apriori_noiseless(spec).0, |n| {
        Ok(exact_coverage(SampleSize(n), spec.epsilon)?.value() > target)
    })
    .expect("epsilon validated by AccuracySpec")
}

/// Minimal `N` whose exact coverage at `ε` reaches `√(1 - δ)`.
pub fn min_n_noisy(spec: AccuracySpec) -> SampleSize {
    let target = (1.0 - spec.delta).sqrt();
    search_min_n(apriori_noisy(spec).0, |n| {
        Ok(exact_coverage(SampleSize(n), spec.epsilon)?.value() >= target)
    })
    .expect("epsilon validated by AccuracySpec")
}

/// Margin each normalized power statistic must meet so the SNR ratio meets `ε`.
pub fn snr_component_margin(epsilon: f64) -> f64 {
    epsilon / (2.0 + epsilon)
}

/// Minimal `N` whose exact coverage at `ε/(2+ε)` reaches `√(1 - δ)`.
pub fn min_n_snr(spec: AccuracySpec) -> SampleSize {
    let target = (1.0 - spec.delta).sqrt();
    let margin = snr_component_margin(spec.epsilon);
    search_min_n(apriori_snr(spec).0, |n| {
        Ok(exact_coverage(SampleSize(n), margin)?.value() >= target)
    })
    .expect("margin is below one")
}

/// Margin of relative error attained by the a priori bound at sample size `n`.
///
/// Requires `n > (10/3) ln(2/δ)`, the size at which the margin reaches one.
pub fn eps_for_n(n: SampleSize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "delta must satisfy 0 < delta < 1, got {delta}"
        )));
    }
    let log_term = (2.0 / delta).ln();
    let size = n.0 as f64;
    let threshold = 10.0 / 3.0 * log_term;
    if size <= threshold {
        return Err(Error::Precondition(format!(
            "sample size {size} must exceed (10/3)ln(2/delta) = {threshold:.6} for a margin below 1"
        )));
    }
    Ok(2.0 * log_term / (3.0 * size) * (1.0 + (1.0 + 9.0 * size / (2.0 * log_term)).sqrt()))
}

/// Ratio `2 ln(2/δ) / Z_δ²` between the a priori bound and the asymptotic
/// minimal sample size, where `Z_δ` is the upper `δ/2` normal quantile.
pub fn tightness_ratio(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "delta must satisfy 0 < delta < 1, got {delta}"
        )));
    }
    let z = normal_upper_quantile(delta / 2.0)?;
    Ok(2.0 * (2.0 / delta).ln() / (z * z))
}

fn check_open_unit(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "epsilon must satisfy 0 < epsilon < 1, got {epsilon}"
        )))
    }
}

/// Chernoff bound `[(1+ε)e^{-ε}]^N` on the upper relative-error tail.
pub fn chernoff_tail_upper(n: SampleSize, epsilon: f64) -> Result<Probability> {
    check_open_unit(epsilon)?;
    Ok(Probability::saturating(
        (n.0 as f64 * (epsilon.ln_1p() - epsilon)).exp(),
    ))
}

/// Chernoff bound `[(1-ε)e^{ε}]^N` on the lower relative-error tail.
pub fn chernoff_tail_lower(n: SampleSize, epsilon: f64) -> Result<Probability> {
    check_open_unit(epsilon)?;
    Ok(Probability::saturating(
        (n.0 as f64 * ((-epsilon).ln_1p() + epsilon)).exp(),
    ))
}
