//! Point estimation of channel power, noise power and SNR from two-power
//! measurement campaigns, plus the Fisher information and Cramér-Rao bound.
//!
//! Each received sample is `X = H·s + V` with `H`, `V` circular complex
//! Gaussians of per-component variances `σ_H²`, `σ_V²`, so `|X|²` is
//! exponential with mean `2σ_ℓ²`, `σ_ℓ² = P_sℓ·σ_H² + σ_V²`. The half-mean
//! power of a batch is the sufficient statistic for `σ_ℓ²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::SampleSize;

/// The two BPSK transmit powers, `p_s1 > p_s2 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalPlan {
    p_s1: f64,
    p_s2: f64,
}

impl SignalPlan {
    pub fn new(p_s1: f64, p_s2: f64) -> Result<Self> {
        if !(p_s2 >= 0.0) || !p_s1.is_finite() || !(p_s1 > p_s2) {
            return Err(Error::Domain(format!(
                "signal plan requires p_s1 > p_s2 >= 0, got p_s1={p_s1}, p_s2={p_s2}"
            )));
        }
        Ok(Self { p_s1, p_s2 })
    }

    pub fn p_s1(&self) -> f64 {
        self.p_s1
    }

    pub fn p_s2(&self) -> f64 {
        self.p_s2
    }

    /// Power difference `p_s1 - p_s2`, always positive.
    pub fn delta_p(&self) -> f64 {
        self.p_s1 - self.p_s2
    }
}

impl Default for SignalPlan {
    fn default() -> Self {
        Self {
            p_s1: 1.0,
            p_s2: 0.0,
        }
    }
}

/// Ground-truth per-component variances of channel gain and noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    sigma_h2: f64,
    sigma_v2: f64,
}

impl ChannelParams {
    pub fn new(sigma_h2: f64, sigma_v2: f64) -> Result<Self> {
        if !(sigma_h2 > 0.0) || !sigma_h2.is_finite() {
            return Err(Error::Domain(format!(
                "sigma_h2 must be positive, got {sigma_h2}"
            )));
        }
        if !(sigma_v2 >= 0.0) || !sigma_v2.is_finite() {
            return Err(Error::Domain(format!(
                "sigma_v2 must be nonnegative, got {sigma_v2}"
            )));
        }
        Ok(Self { sigma_h2, sigma_v2 })
    }

    /// Parameters with `σ_H² = 1` and noise set from a linear SNR at unit power.
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        Self::new(1.0, 10f64.powf(-snr_db / 10.0))
    }

    pub fn sigma_h2(&self) -> f64 {
        self.sigma_h2
    }

    pub fn sigma_v2(&self) -> f64 {
        self.sigma_v2
    }

    /// Composite per-component variance `power·σ_H² + σ_V²` of the received signal.
    pub fn composite_variance(&self, power: f64) -> f64 {
        power * self.sigma_h2 + self.sigma_v2
    }
}

/// `n` received-power values `|X_i|²` measured at one transmit power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    power: f64,
    received_power: Vec<f64>,
}

impl SampleBatch {
    /// Rejects empty batches and negative or non-finite entries.
    pub fn new(power: f64, received_power: Vec<f64>) -> Result<Self> {
        if !(power >= 0.0) || !power.is_finite() {
            return Err(Error::Domain(format!(
                "transmit power must be >= 0, got {power}"
            )));
        }
        if received_power.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if let Some(bad) = received_power
            .iter()
            .find(|v| !(**v >= 0.0) || !v.is_finite())
        {
            return Err(Error::Domain(format!(
                "received power must be finite and >= 0, got {bad}"
            )));
        }
        Ok(Self {
            power,
            received_power,
        })
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn received_power(&self) -> &[f64] {
        &self.received_power
    }

    pub fn n(&self) -> usize {
        self.received_power.len()
    }

    pub fn sample_size(&self) -> SampleSize {
        SampleSize::new(self.n() as u64).expect("batch is nonempty")
    }

    /// Half-mean power `(1/2n) Σ |X_i|²`, with expectation `P_s·σ_H² + σ_V²`.
    pub fn half_mean_power(&self) -> f64 {
        self.received_power.iter().sum::<f64>() / (2.0 * self.n() as f64)
    }

    /// Second-moment estimate `Σ |X_i|² / n` of the Rayleigh envelope.
    pub fn noiseless_second_moment(&self) -> f64 {
        self.received_power.iter().sum::<f64>() / self.n() as f64
    }
}

/// Free-function form of [`SampleBatch::half_mean_power`].
pub fn half_mean_power(batch: &SampleBatch) -> f64 {
    batch.half_mean_power()
}

/// Free-function form of [`SampleBatch::noiseless_second_moment`].
pub fn noiseless_second_moment(batch: &SampleBatch) -> f64 {
    batch.noiseless_second_moment()
}

/// ML estimate `X̄²/P_s` of `σ_H²` from a noiseless batch.
pub fn noiseless_sigma_h2(batch: &SampleBatch) -> Result<f64> {
    if batch.power <= 0.0 {
        return Err(Error::Precondition(
            "noiseless estimate needs a positive transmit power".into(),
        ));
    }
    Ok(batch.half_mean_power() / batch.power)
}

/// Unbiased ML/MV estimates of `σ_H²` and `σ_V²`.
///
/// Negative values are returned unclipped; `negative_component` flags them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointEstimate {
    pub sigma_h2_hat: f64,
    pub sigma_v2_hat: f64,
    pub negative_component: bool,
}

fn check_pair(batch1: &SampleBatch, batch2: &SampleBatch, plan: &SignalPlan) -> Result<()> {
    if batch1.n() != batch2.n() {
        return Err(Error::BatchSizeMismatch(batch1.n(), batch2.n()));
    }
    if batch1.power != plan.p_s1 {
        return Err(Error::PowerMismatch {
            expected: plan.p_s1,
            actual: batch1.power,
        });
    }
    if batch2.power != plan.p_s2 {
        return Err(Error::PowerMismatch {
            expected: plan.p_s2,
            actual: batch2.power,
        });
    }
    Ok(())
}

/// Linear solve of `P_sℓ·σ_H² + σ_V² = X̄ℓ` for the two power levels.
pub fn point_estimates_from_stats(x1: f64, x2: f64, plan: &SignalPlan) -> PointEstimate {
    let dp = plan.delta_p();
    let sigma_h2_hat = (x1 - x2) / dp;
    let sigma_v2_hat = (plan.p_s1 * x2 - plan.p_s2 * x1) / dp;
    PointEstimate {
        sigma_h2_hat,
        sigma_v2_hat,
        negative_component: sigma_h2_hat < 0.0 || sigma_v2_hat < 0.0,
    }
}

pub fn point_estimates(
    batch1: &SampleBatch,
    batch2: &SampleBatch,
    plan: &SignalPlan,
) -> Result<PointEstimate> {
    check_pair(batch1, batch2, plan)?;
    Ok(point_estimates_from_stats(
        batch1.half_mean_power(),
        batch2.half_mean_power(),
        plan,
    ))
}

/// Ratio estimate of `σ_H²/σ_V²` from half-mean powers.
pub fn snr_point_estimate_from_stats(x1: f64, x2: f64, plan: &SignalPlan) -> Result<f64> {
    let denom = plan.p_s1 * x2 - plan.p_s2 * x1;
    if !(denom > 0.0) {
        return Err(Error::NonPositiveNoiseEstimate(denom));
    }
    Ok((x1 - x2) / denom)
}

pub fn snr_point_estimate(
    batch1: &SampleBatch,
    batch2: &SampleBatch,
    plan: &SignalPlan,
) -> Result<f64> {
    check_pair(batch1, batch2, plan)?;
    snr_point_estimate_from_stats(batch1.half_mean_power(), batch2.half_mean_power(), plan)
}

/// Fisher information of `[σ_H², σ_V²]`, its inverse, and the per-parameter
/// Cramér-Rao standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    pub fim: [[f64; 2]; 2],
    pub cov: [[f64; 2]; 2],
    pub crb_h: f64,
    pub crb_v: f64,
}

pub fn fisher_information(
    params: &ChannelParams,
    plan: &SignalPlan,
    n: SampleSize,
) -> Result<CrbReport> {
    let (p1, p2) = (plan.p_s1, plan.p_s2);
    let dp = plan.delta_p();
    if !(dp > 0.0) {
        return Err(Error::Precondition(
            "power difference must be positive".into(),
        ));
    }
    let s1 = params.composite_variance(p1);
    let s2 = params.composite_variance(p2);
    if !(s1 > 0.0 && s2 > 0.0) {
        return Err(Error::Precondition(
            "composite variances must be positive (noise-free batch at zero power)".into(),
        ));
    }
    let nf = n.get() as f64;
    let (q1, q2) = (s1 * s1, s2 * s2);

    let off = nf * (p1 / q1 + p2 / q2);
    let fim = [
        [nf * (p1 * p1 / q1 + p2 * p2 / q2), off],
        [off, nf * (1.0 / q1 + 1.0 / q2)],
    ];

    let scale = 1.0 / (nf * dp * dp);
    let cross = -scale * (p1 * q2 + p2 * q1);
    let cov = [
        [scale * (q1 + q2), cross],
        [cross, scale * (p1 * p1 * q2 + p2 * p2 * q1)],
    ];

    Ok(CrbReport {
        fim,
        cov,
        crb_h: cov[0][0].sqrt(),
        crb_v: cov[1][1].sqrt(),
    })
}

/// Path loss and SNR in decibels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbFigures {
    pub pl_db: f64,
    /// `+inf` when the noise variance is zero.
    pub snr_db: f64,
}

/// `PL = -10 log10(2σ_H²)` and `SNR = 10 log10(P_s) + 10 log10(σ_H²/σ_V²)`.
pub fn db_conversions(p_s: f64, params: &ChannelParams) -> DbFigures {
    let pl_db = -10.0 * (2.0 * params.sigma_h2).log10();
    let snr_db = if params.sigma_v2 == 0.0 {
        f64::INFINITY
    } else {
        10.0 * p_s.log10() + 10.0 * (params.sigma_h2 / params.sigma_v2).log10()
    };
    DbFigures { pl_db, snr_db }
}
