//! Scalar special functions used by every exact probability computation.
//!
//! The regularized incomplete gamma function is evaluated with the series
//! expansion below `a + 1` and the Lentz continued fraction above it. The
//! common prefactor `x^a e^{-x} / Γ(a+1)` is formed from the deviance term
//! `a ln(a/x) + x - a` and Stirling's remainder rather than from differences
//! of large logarithms, which keeps the absolute error near machine epsilon
//! for shape parameters up to `1e7` and beyond.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Domain(format!("probability {value} outside [0, 1]")))
        }
    }

    /// Clamps a computed value that may have drifted outside `[0, 1]` by rounding.
    pub(crate) fn saturating(value: f64) -> Self {
        Self(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Remainder of Stirling's series, `ln Γ(a+1) - (a ln a - a + ln √(2πa))`.
fn stirling_remainder(a: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if a > 15.0 {
        let a2 = a * a;
        (S0 - (S1 - (S2 - (S3 - S4 / a2) / a2) / a2) / a2) / a
    } else {
        ln_gamma_small(a + 1.0) - (a * a.ln() - a + LN_SQRT_2PI + 0.5 * a.ln())
    }
}

/// `x ln(x/m) + m - x`, computed without cancellation when `x ≈ m`.
fn deviance(x: f64, m: f64) -> f64 {
    if x == 0.0 {
        return m;
    }
    let diff = x - m;
    if diff.abs() < 0.1 * (x + m) {
        let mut v = diff / (x + m);
        let mut s = diff * v;
        let mut term = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            term *= v;
            let next = s + term / f64::from(2 * j + 1);
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// `ln(x^a e^{-x} / Γ(a+1))` for `a > 0`, `x > 0`.
fn ln_gamma_prefactor(a: f64, x: f64) -> f64 {
    -deviance(a, x) - 0.5 * (2.0 * PI * a).ln() - stirling_remainder(a)
}

// Shifts the argument to at least 15 and applies the Stirling series there.
fn ln_gamma_small(x: f64) -> f64 {
    let mut shifted = x;
    let mut product = 1.0;
    while shifted < 15.0 {
        product *= shifted;
        shifted += 1.0;
    }
    ln_gamma_large(shifted) - product.ln()
}

fn ln_gamma_large(x: f64) -> f64 {
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + stirling_remainder(x)
}

/// Natural logarithm of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    Ok(if x < 15.0 {
        ln_gamma_small(x)
    } else {
        ln_gamma_large(x)
    })
}

fn max_iterations(a: f64) -> usize {
    1000 + (40.0 * a.sqrt()) as usize
}

/// Series for `P(a, x)`, valid and fast for `x < a + 1`.
fn gamma_p_series(a: f64, x: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut denom = a;
    for _ in 0..max_iterations(a) {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term < sum * f64::EPSILON * 0.25 {
            return Ok(ln_gamma_prefactor(a, x).exp() * sum);
        }
    }
    Err(Error::NoConvergence("incomplete gamma series"))
}

/// Modified Lentz continued fraction for `Q(a, x)`, valid for `x ≥ a + 1`.
fn gamma_q_fraction(a: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..max_iterations(a) {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let step = d * c;
        h *= step;
        if (step - 1.0).abs() < f64::EPSILON {
            // e^{-x} x^a / Γ(a) = a · e^{-x} x^a / Γ(a+1)
            return Ok((ln_gamma_prefactor(a, x) + a.ln()).exp() * h);
        }
    }
    Err(Error::NoConvergence("incomplete gamma continued fraction"))
}

fn check_gamma_args(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("shape must be positive, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "argument must be nonnegative, got {x}"
        )));
    }
    Ok(())
}

/// Regularized lower incomplete gamma function `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> Result<f64> {
    check_gamma_args(a, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        Ok(1.0 - gamma_q_fraction(a, x)?)
    }
}

/// Regularized upper incomplete gamma function `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> Result<f64> {
    check_gamma_args(a, x)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x < a + 1.0 {
        Ok(1.0 - gamma_p_series(a, x)?)
    } else {
        gamma_q_fraction(a, x)
    }
}

fn check_chi2_args(dof: u64, x: f64) -> Result<()> {
    if dof < 1 {
        return Err(Error::Domain(
            "chi-square degrees of freedom must be >= 1".into(),
        ));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "chi-square argument must be >= 0, got {x}"
        )));
    }
    Ok(())
}

/// CDF of the chi-square distribution with `dof` degrees of freedom.
pub fn chi2_cdf(dof: u64, x: f64) -> Result<Probability> {
    check_chi2_args(dof, x)?;
    gamma_p(dof as f64 / 2.0, x / 2.0).map(Probability::saturating)
}

/// Upper tail `1 - F(x)` of the chi-square distribution.
pub fn chi2_sf(dof: u64, x: f64) -> Result<Probability> {
    check_chi2_args(dof, x)?;
    gamma_q(dof as f64 / 2.0, x / 2.0).map(Probability::saturating)
}

/// `Pr{Y < n}` for a Poisson variable `Y` with mean `theta`.
///
/// Terms are accumulated relative to the largest term in `0..n`, walking
/// outward until they stop contributing.
pub fn poisson_below(theta: f64, n: u64) -> Result<Probability> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Domain(format!(
            "Poisson mean must be positive, got {theta}"
        )));
    }
    if n < 1 {
        return Err(Error::Domain("Poisson count bound must be >= 1".into()));
    }
    let peak = (theta.floor() as u64).min(n - 1);
    let ln_peak = if peak == 0 {
        -theta
    } else {
        ln_gamma_prefactor(peak as f64, theta)
    };

    let mut sum = 1.0;
    let mut ratio = 1.0;
    for k in (1..=peak).rev() {
        ratio *= k as f64 / theta;
        sum += ratio;
        if ratio < sum * 1e-17 {
            break;
        }
    }
    ratio = 1.0;
    for k in peak + 1..n {
        ratio *= theta / k as f64;
        sum += ratio;
        if ratio < sum * 1e-17 {
            break;
        }
    }
    Ok(Probability::saturating(ln_peak.exp() * sum))
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let tail = |v: f64| gamma_q(0.5, v * v).expect("valid incomplete gamma arguments");
    if x >= 0.0 {
        tail(x)
    } else {
        2.0 - tail(-x)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

// Acklam's rational approximation, relative error about 1.2e-9.
fn acklam_lower(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    if p < 0.02425 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

// Quantile for a lower-tail probability p ≤ 0.5, refined by Halley steps.
fn lower_tail_quantile(p: f64) -> f64 {
    let mut z = acklam_lower(p);
    for _ in 0..2 {
        let e = normal_cdf(z) - p;
        let u = e / normal_pdf(z);
        z -= u / (1.0 + 0.5 * z * u);
    }
    z
}

/// Inverse of the standard normal CDF.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "normal quantile requires p in (0, 1), got {p}"
        )));
    }
    Ok(if p <= 0.5 {
        lower_tail_quantile(p)
    } else {
        -lower_tail_quantile(1.0 - p)
    })
}

/// The `z` with `1 - Φ(z) = q`, accurate for tiny upper-tail probabilities.
pub fn normal_upper_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!(
            "tail probability must be in (0, 1), got {q}"
        )));
    }
    Ok(if q <= 0.5 {
        -lower_tail_quantile(q)
    } else {
        lower_tail_quantile(1.0 - q)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ln_gamma_known_values() {
        assert_eq!(ln_gamma(1.0).unwrap(), 0.0);
        assert!(close(
            ln_gamma(0.5).unwrap(),
            0.572_364_942_924_700_1,
            1e-14
        ));
        assert!(close(ln_gamma(10.0).unwrap(), 362_880f64.ln(), 1e-13));
        assert!(ln_gamma(0.0).is_err());
        assert!(ln_gamma(-1.5).is_err());
    }

    #[test]
    fn ln_gamma_matches_exact_factorials() {
        // ln((n-1)!) by direct summation is an independent oracle.
        let mut ln_fact = 0.0f64;
        for n in 2..200u32 {
            ln_fact += f64::from(n - 1).ln();
            let got = ln_gamma(f64::from(n)).unwrap();
            if n > 2 {
                assert!(
                    ((got - ln_fact) / ln_fact).abs() < 1e-13,
                    "n={n}: {got} vs {ln_fact}"
                );
            }
        }
    }

    #[test]
    fn ln_gamma_recurrence() {
        let mut x = 1e-3;
        while x < 1e8 {
            let lhs = ln_gamma(x + 1.0).unwrap();
            let rhs = ln_gamma(x).unwrap() + x.ln();
            let scale = lhs.abs().max(1.0);
            assert!(((lhs - rhs) / scale).abs() < 1e-12, "x={x}: {lhs} vs {rhs}");
            x *= 1.37;
        }
    }

    #[test]
    fn chi2_cdf_closed_forms() {
        assert_eq!(chi2_cdf(2, 0.0).unwrap().value(), 0.0);
        assert!(close(
            chi2_cdf(2, 2.0 * 2f64.ln()).unwrap().value(),
            0.5,
            1e-14
        ));
        assert!(close(
            chi2_cdf(4, 4.0).unwrap().value(),
            0.593_994_150_290_161_9,
            1e-14
        ));
        assert!(chi2_cdf(0, 1.0).is_err());
        assert!(chi2_cdf(3, -1.0).is_err());
    }

    #[test]
    fn chi2_cdf_matches_erlang_sum() {
        // For even dof the CDF is 1 - e^{-x/2} Σ_{k<dof/2} (x/2)^k / k!.
        for half in [1u64, 2, 5, 17, 60] {
            for &x in &[0.3, 1.0, 7.5, 40.0, 150.0] {
                let y: f64 = x / 2.0;
                let mut term = (-y).exp();
                let mut sum = 0.0;
                for k in 0..half {
                    if k > 0 {
                        term *= y / k as f64;
                    }
                    sum += term;
                }
                let got = chi2_cdf(2 * half, x).unwrap().value();
                assert!(close(got, 1.0 - sum, 1e-13), "dof={} x={x}", 2 * half);
            }
        }
    }

    #[test]
    fn chi2_cdf_large_dof_is_centered() {
        // The median of χ²(k) is close to k(1 - 2/(9k))³.
        for dof in [2_000u64, 200_000, 20_000_000] {
            let k = dof as f64;
            let median = k * (1.0 - 2.0 / (9.0 * k)).powi(3);
            let p = chi2_cdf(dof, median).unwrap().value();
            assert!(close(p, 0.5, 1e-3), "dof={dof}: {p}");
            let lo = chi2_cdf(dof, k * 0.99).unwrap().value();
            let hi = chi2_cdf(dof, k * 1.01).unwrap().value();
            assert!(lo < p && p < hi);
        }
    }

    #[test]
    fn poisson_below_small_cases() {
        assert!(close(
            poisson_below(1.0, 1).unwrap().value(),
            (-1f64).exp(),
            1e-15
        ));
        assert!(close(
            poisson_below(2.0, 3).unwrap().value(),
            5.0 * (-2f64).exp(),
            1e-14
        ));
        assert!(poisson_below(0.0, 3).is_err());
        assert!(poisson_below(1.0, 0).is_err());
    }

    #[test]
    fn poisson_identity_spot_checks() {
        for &(theta, n) in &[
            (0.5, 1u64),
            (10.0, 3),
            (1e3, 1000),
            (1e4, 9_800),
            (50.0, 100_000),
        ] {
            let lhs = poisson_below(theta, n).unwrap().value();
            let rhs = chi2_sf(2 * n, 2.0 * theta).unwrap().value();
            assert!(
                close(lhs, rhs, 1e-12),
                "theta={theta} n={n}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn normal_quantile_known_values() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!(close(
            normal_quantile(0.975).unwrap(),
            1.959_963_984_540_054,
            1e-12
        ));
        assert!(close(
            normal_quantile(0.995).unwrap(),
            2.575_829_303_548_900_4,
            1e-12
        ));
        assert!(close(
            normal_upper_quantile(5e-13).unwrap(),
            7.130_506_848_171_324,
            1e-10
        ));
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn probability_rejects_out_of_range() {
        assert!(Probability::new(1.5).is_err());
        assert!(Probability::new(-0.1).is_err());
        assert_eq!(Probability::new(0.25).unwrap().value(), 0.25);
    }
}
