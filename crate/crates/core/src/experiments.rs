//! Monte Carlo verification of the coverage, tightness and optimality claims.
//!
//! Trials run in parallel, each on a stream derived from `(seed, N, trial)`.
//! Per-trial outcomes are collected in trial order and reduced sequentially,
//! so a report depends only on its inputs and never on thread scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{generate_batch, generate_campaign, CampaignConfig, GenerationMethod};
use crate::error::{Error, Result};
use crate::estimator::{
    fisher_information, point_estimates, snr_point_estimate, ChannelParams, SignalPlan,
};
use crate::interval::{noisy_joint_intervals, snr_interval_general};
use crate::planner::{
    apriori_noiseless, eps_for_n, min_n_noiseless, tightness_ratio, AccuracySpec, SampleSize,
};
use crate::rng::derive_key;
use crate::special::normal_upper_quantile;

/// Default number of Monte Carlo campaigns per sample size.
pub const DEFAULT_TRIALS: usize = 500;
const MIN_TRIALS: usize = 100;

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::Precondition(format!(
            "at least {MIN_TRIALS} trials are required, got {trials}"
        )));
    }
    Ok(())
}

/// Seed of campaign `trial` at sample size `n`.
pub fn trial_seed(seed: u64, n: SampleSize, trial: usize) -> u64 {
    derive_key(derive_key(seed, n.get()), trial as u64)
}

fn run_trials<T, F>(trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

fn fraction(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

/// Results at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloRow {
    pub n: SampleSize,
    /// Joint coverage of the simultaneous `σ_H²`/`σ_V²` intervals.
    pub coverage: Option<f64>,
    pub coverage_h: Option<f64>,
    pub coverage_v: Option<f64>,
    pub mean_h: f64,
    pub mean_v: f64,
    pub rmse_h: f64,
    pub rmse_v: f64,
    pub crb_h: Option<f64>,
    pub crb_v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub trials: usize,
    pub seed: u64,
    pub method: GenerationMethod,
    pub rows: Vec<MonteCarloRow>,
}

impl MonteCarloReport {
    pub fn n_grid(&self) -> Vec<SampleSize> {
        self.rows.iter().map(|r| r.n).collect()
    }

    pub fn coverage(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.coverage).collect()
    }

    pub fn rmse_h(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rmse_h).collect()
    }

    pub fn crb_h(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.crb_h).collect()
    }
}

struct Trial {
    h_hat: f64,
    v_hat: f64,
    hit_h: bool,
    hit_v: bool,
}

fn simulate_row(
    params: &ChannelParams,
    plan: &SignalPlan,
    spec: Option<AccuracySpec>,
    n: SampleSize,
    trials: usize,
    seed: u64,
    method: GenerationMethod,
) -> Result<MonteCarloRow> {
    let base = CampaignConfig {
        params: *params,
        plan: *plan,
        n,
        seed,
        method,
    };
    let outcomes = run_trials(trials, |k| {
        let config = base.with_seed(trial_seed(seed, n, k));
        let (b1, b2) = generate_campaign(&config)?;
        let est = point_estimates(&b1, &b2, plan)?;
        let (hit_h, hit_v) = match spec {
            Some(spec) => {
                let (i_h, i_v) =
                    noisy_joint_intervals(b1.half_mean_power(), b2.half_mean_power(), plan, spec);
                (
                    i_h.contains(params.sigma_h2()),
                    i_v.contains(params.sigma_v2()),
                )
            }
            None => (false, false),
        };
        Ok(Trial {
            h_hat: est.sigma_h2_hat,
            v_hat: est.sigma_v2_hat,
            hit_h,
            hit_v,
        })
    })?;

    let m = trials as f64;
    let (mut sum_h, mut sum_v, mut sq_h, mut sq_v) = (0.0, 0.0, 0.0, 0.0);
    let (mut hits, mut hits_h, mut hits_v) = (0, 0, 0);
    for t in &outcomes {
        sum_h += t.h_hat;
        sum_v += t.v_hat;
        sq_h += (t.h_hat - params.sigma_h2()).powi(2);
        sq_v += (t.v_hat - params.sigma_v2()).powi(2);
        hits_h += usize::from(t.hit_h);
        hits_v += usize::from(t.hit_v);
        hits += usize::from(t.hit_h && t.hit_v);
    }
    let crb = fisher_information(params, plan, n).ok();
    Ok(MonteCarloRow {
        n,
        coverage: spec.map(|_| fraction(hits, trials)),
        coverage_h: spec.map(|_| fraction(hits_h, trials)),
        coverage_v: spec.map(|_| fraction(hits_v, trials)),
        mean_h: sum_h / m,
        mean_v: sum_v / m,
        rmse_h: (sq_h / m).sqrt(),
        rmse_v: (sq_v / m).sqrt(),
        crb_h: crb.map(|c| c.crb_h),
        crb_v: crb.map(|c| c.crb_v),
    })
}

/// Empirical coverage of the simultaneous noisy intervals at sample size `n`.
pub fn coverage_experiment(
    params: &ChannelParams,
    plan: &SignalPlan,
    spec: AccuracySpec,
    n: SampleSize,
    trials: usize,
    seed: u64,
    method: GenerationMethod,
) -> Result<MonteCarloReport> {
    check_trials(trials)?;
    let row = simulate_row(params, plan, Some(spec), n, trials, seed, method)?;
    Ok(MonteCarloReport {
        trials,
        seed,
        method,
        rows: vec![row],
    })
}

/// Empirical RMSE of the two-power estimates next to the Cramér-Rao bound.
pub fn rmse_vs_crb(
    params: &ChannelParams,
    plan: &SignalPlan,
    n_grid: &[SampleSize],
    trials: usize,
    seed: u64,
    method: GenerationMethod,
) -> Result<MonteCarloReport> {
    check_trials(trials)?;
    let rows = n_grid
        .iter()
        .map(|&n| simulate_row(params, plan, None, n, trials, seed, method))
        .collect::<Result<Vec<_>>>()?;
    Ok(MonteCarloReport {
        trials,
        seed,
        method,
        rows,
    })
}

/// Fraction of noiseless campaigns whose second-moment estimate falls within
/// relative error `epsilon` of the truth.
pub fn noiseless_coverage(
    epsilon: f64,
    n: SampleSize,
    trials: usize,
    seed: u64,
    method: GenerationMethod,
) -> Result<f64> {
    check_trials(trials)?;
    let base = CampaignConfig::normalized(0.0, n, seed)?.with_method(method);
    let mu = 2.0 * base.params.sigma_h2();
    let hits = run_trials(trials, |k| {
        let config = base.with_seed(trial_seed(seed, n, k));
        let batch = generate_batch(&config, config.plan.p_s1())?;
        Ok(((batch.noiseless_second_moment() - mu) / mu).abs() < epsilon)
    })?;
    Ok(fraction(hits.into_iter().filter(|h| *h).count(), trials))
}

/// Relative-error coverage of the point estimates of `σ_H²`, `σ_V²` and their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeErrorCoverage {
    pub n: SampleSize,
    pub epsilon: f64,
    pub coverage_h: f64,
    pub coverage_v: f64,
    pub coverage_snr: f64,
}

pub fn relative_error_coverage(
    params: &ChannelParams,
    plan: &SignalPlan,
    n: SampleSize,
    epsilon: f64,
    trials: usize,
    seed: u64,
    method: GenerationMethod,
) -> Result<RelativeErrorCoverage> {
    check_trials(trials)?;
    let base = CampaignConfig {
        params: *params,
        plan: *plan,
        n,
        seed,
        method,
    };
    let truth_snr = params.sigma_h2() / params.sigma_v2();
    let within = |est: f64, truth: f64| ((est - truth) / truth).abs() < epsilon;
    let outcomes = run_trials(trials, |k| {
        let config = base.with_seed(trial_seed(seed, n, k));
        let (b1, b2) = generate_campaign(&config)?;
        let est = point_estimates(&b1, &b2, plan)?;
        let snr_hit = snr_point_estimate(&b1, &b2, plan)
            .map(|r| within(r, truth_snr))
            .unwrap_or(false);
        Ok([
            within(est.sigma_h2_hat, params.sigma_h2()),
            within(est.sigma_v2_hat, params.sigma_v2()),
            snr_hit,
        ])
    })?;
    let count = |i: usize| fraction(outcomes.iter().filter(|o| o[i]).count(), trials);
    Ok(RelativeErrorCoverage {
        n,
        epsilon,
        coverage_h: count(0),
        coverage_v: count(1),
        coverage_snr: count(2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioMode {
    Noiseless,
    NoisyH,
    NoisyV,
    Snr,
}

/// Channel setup used by the noisy ratio modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSetup {
    pub params: ChannelParams,
    pub plan: SignalPlan,
    pub seed: u64,
    pub method: GenerationMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub n: SampleSize,
    /// Margin from inverting the a priori bound; absent when `n` is too small.
    pub epsilon: Option<f64>,
    /// `20 log10(upper/lower)`; absent when the lower endpoint is not positive.
    pub ratio_db: Option<f64>,
}

fn ratio_db(lower: f64, upper: f64) -> Option<f64> {
    (lower > 0.0 && upper > 0.0).then(|| 20.0 * (upper / lower).log10())
}

/// Upper/lower endpoint ratios in dB versus sample size, with `ε` obtained by
/// inverting the a priori bound at confidence gap `delta`.
pub fn ratio_curves(
    mode: RatioMode,
    delta: f64,
    n_grid: &[SampleSize],
    setup: &RatioSetup,
) -> Result<Vec<RatioRow>> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "delta must satisfy 0 < delta < 1, got {delta}"
        )));
    }
    n_grid
        .iter()
        .map(|&n| {
            // The noisy bound uses ln(4/δ) = ln(2/(δ/2)).
            let gap = if mode == RatioMode::Noiseless {
                delta
            } else {
                delta / 2.0
            };
            let epsilon = match eps_for_n(n, gap) {
                Ok(e) => e,
                Err(Error::Precondition(_)) => {
                    return Ok(RatioRow {
                        n,
                        epsilon: None,
                        ratio_db: None,
                    })
                }
                Err(e) => return Err(e),
            };
            let spec = AccuracySpec::new(epsilon, delta)?;
            let ratio = match mode {
                RatioMode::Noiseless => ratio_db(1.0 - epsilon, 1.0 + epsilon),
                _ => {
                    let config = CampaignConfig {
                        params: setup.params,
                        plan: setup.plan,
                        n,
                        seed: trial_seed(setup.seed, n, 0),
                        method: setup.method,
                    };
                    let (b1, b2) = generate_campaign(&config)?;
                    let (x1, x2) = (b1.half_mean_power(), b2.half_mean_power());
                    let (i_h, i_v) = noisy_joint_intervals(x1, x2, &setup.plan, spec);
                    match mode {
                        RatioMode::NoisyH => ratio_db(i_h.lower, i_h.upper),
                        RatioMode::NoisyV => ratio_db(i_v.lower, i_v.upper),
                        _ => snr_interval_general(x1, x2, &setup.plan, spec)
                            .ok()
                            .and_then(|i| ratio_db(i.lower, i.upper)),
                    }
                }
            };
            Ok(RatioRow {
                n,
                epsilon: Some(epsilon),
                ratio_db: ratio,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TightnessRow {
    pub delta: f64,
    /// Upper `δ/2` normal quantile.
    pub z: f64,
    /// `2 ln(2/δ) / z²`, the limiting ratio of the a priori to the minimal size.
    pub ratio: f64,
    pub epsilon: f64,
    pub apriori: SampleSize,
    pub min_n: SampleSize,
    /// `apriori / min_n` at the finite margin `epsilon`.
    pub finite_ratio: f64,
}

pub fn tightness_table(delta_grid: &[f64], epsilon: f64) -> Result<Vec<TightnessRow>> {
    delta_grid
        .iter()
        .map(|&delta| {
            let spec = AccuracySpec::new(epsilon, delta)?;
            let apriori = apriori_noiseless(spec);
            let min_n = min_n_noiseless(spec);
            Ok(TightnessRow {
                delta,
                z: normal_upper_quantile(delta / 2.0)?,
                ratio: tightness_ratio(delta)?,
                epsilon,
                apriori,
                min_n,
                finite_ratio: apriori.get() as f64 / min_n.get() as f64,
            })
        })
        .collect()
}

/// Binomial standard error of an estimated proportion `p` over `trials`.
pub fn binomial_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (ChannelParams, SignalPlan) {
        (
            ChannelParams::new(1.0, 0.01).unwrap(),
            SignalPlan::new(1.0, 0.0).unwrap(),
        )
    }

    #[test]
    fn rejects_too_few_trials() {
        let (params, plan) = setup();
        let n = SampleSize::new(10).unwrap();
        let spec = AccuracySpec::new(0.1, 0.05).unwrap();
        assert!(coverage_experiment(&params, &plan, spec, n, 99, 1, Default::default()).is_err());
        assert!(rmse_vs_crb(&params, &plan, &[n], 50, 1, Default::default()).is_err());
    }

    #[test]
    fn reports_are_reproducible() {
        let (params, plan) = setup();
        let grid = [SampleSize::new(20).unwrap(), SampleSize::new(40).unwrap()];
        let a = rmse_vs_crb(&params, &plan, &grid, 100, 5, Default::default()).unwrap();
        let b = rmse_vs_crb(&params, &plan, &grid, 100, 5, Default::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_grid(), grid.to_vec());
        assert!(a
            .rows
            .iter()
            .all(|r| r.rmse_h >= 0.0 && r.coverage.is_none()));
    }

    #[test]
    fn coverage_grows_with_margin() {
        let (params, plan) = setup();
        let n = SampleSize::new(200).unwrap();
        let mut prev = -1.0;
        for e in [0.05, 0.1, 0.2] {
            let spec = AccuracySpec::new(e, 0.05).unwrap();
            let r =
                coverage_experiment(&params, &plan, spec, n, 300, 17, Default::default()).unwrap();
            let c = r.rows[0].coverage.unwrap();
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn noiseless_ratio_curve_value() {
        assert!((ratio_db(0.9, 1.1).unwrap() - 1.743_003_514_378_004).abs() < 1e-12);
        let (params, plan) = setup();
        let setup = RatioSetup {
            params,
            plan,
            seed: 1,
            method: Default::default(),
        };
        let rows = ratio_curves(
            RatioMode::Noiseless,
            0.05,
            &[SampleSize::new(5).unwrap(), SampleSize::new(1000).unwrap()],
            &setup,
        )
        .unwrap();
        assert_eq!(rows[0].epsilon, None);
        let e = rows[1].epsilon.unwrap();
        let expected = 20.0 * ((1.0 + e) / (1.0 - e)).log10();
        assert_eq!(rows[1].ratio_db, Some(expected));
    }

    #[test]
    fn tightness_rows() {
        let rows = tightness_table(&[1e-2, 1e-4], 0.05).unwrap();
        assert!((rows[0].ratio - 1.597_106_235_455_89).abs() < 1e-9);
        assert_eq!(rows[0].apriori.get(), 4380);
        assert_eq!(rows[0].min_n.get(), 2655);
        assert!(rows[1].ratio < rows[0].ratio);
    }
}
