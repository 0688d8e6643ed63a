//! Adapters from parsed arguments to library calls. Each command builds a
//! config, calls the library, and wraps the result in the report envelope;
//! nothing here computes a statistic of its own.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayleigh_core::channel::GenerationMethod;
use rayleigh_core::channel::{generate_campaign, read_batch_csv, write_batch_csv, CampaignConfig};
use rayleigh_core::estimator::{
    db_conversions, fisher_information, noiseless_sigma_h2, point_estimates, snr_point_estimate,
    CrbReport, DbFigures, PointEstimate,
};
use rayleigh_core::experiments::{
    coverage_experiment, ratio_curves, rmse_vs_crb, tightness_table, RatioMode, RatioSetup,
};
use rayleigh_core::interval::{noiseless_interval, noisy_joint_intervals, snr_interval_general};
use rayleigh_core::planner::{
    apriori_noiseless, apriori_noisy, apriori_snr, exact_coverage, min_n_noiseless, min_n_noisy,
    min_n_snr, snr_component_margin,
};
use rayleigh_core::report::{CsvTable, Envelope};
use rayleigh_core::{
    AccuracySpec, ChannelParams, ConfidenceInterval, SampleBatch, SampleSize, SignalPlan,
};
use serde::Serialize;

use crate::args::{
    ChannelArgs, EstimateArgs, ExperimentKind, Format, IntervalArgs, OutputArgs, PlanArgs,
    PlanMode, PowerArgs, RatioKind, SimulateArgs, TargetArgs,
};

/// Rendered report text and where it goes.
pub struct Rendered {
    pub text: String,
    pub out: Option<PathBuf>,
}

impl Rendered {
    pub fn emit(&self) -> Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, &self.text)
                .with_context(|| format!("writing {}", path.display())),
            None => {
                print!("{}", self.text);
                Ok(())
            }
        }
    }
}

fn json_only<C: Serialize, R: Serialize>(
    output: &OutputArgs,
    envelope: Envelope<'_, C, R>,
) -> Result<Rendered> {
    if output.format == Format::Csv {
        bail!(
            "{} reports are JSON only; CSV is available for experiment reports",
            envelope.command
        );
    }
    Ok(Rendered {
        text: envelope.to_json()?,
        out: output.out.clone(),
    })
}

fn spec_of(target: &TargetArgs) -> Result<AccuracySpec> {
    Ok(AccuracySpec::new(target.eps, target.delta)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanConfig {
    pub spec: AccuracySpec,
    pub mode: &'static str,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanResult {
    pub apriori: SampleSize,
    /// Per-level relative-error margin the exact search works at.
    pub margin: f64,
    /// Coverage the exact search must reach at that margin.
    pub target: f64,
    pub min_n: Option<SampleSize>,
    pub exact_coverage: Option<f64>,
}

pub fn plan_report(spec: AccuracySpec, mode: PlanMode, exact: bool) -> Result<PlanResult> {
    let (e, d) = (spec.epsilon(), spec.delta());
    let (apriori, margin, target, search): (_, _, _, fn(AccuracySpec) -> SampleSize) = match mode {
        PlanMode::Noiseless => (apriori_noiseless(spec), e, 1.0 - d, min_n_noiseless),
        PlanMode::Noisy => (apriori_noisy(spec), e, (1.0 - d).sqrt(), min_n_noisy),
        PlanMode::Snr => (
            apriori_snr(spec),
            snr_component_margin(e),
            (1.0 - d).sqrt(),
            min_n_snr,
        ),
    };
    let (min_n, coverage) = if exact {
        let n = search(spec);
        (Some(n), Some(exact_coverage(n, margin)?.value()))
    } else {
        (None, None)
    };
    Ok(PlanResult {
        apriori,
        margin,
        target,
        min_n,
        exact_coverage: coverage,
    })
}

fn mode_name(mode: PlanMode) -> &'static str {
    match mode {
        PlanMode::Noiseless => "noiseless",
        PlanMode::Noisy => "noisy",
        PlanMode::Snr => "snr",
    }
}

pub fn plan(args: &PlanArgs) -> Result<Rendered> {
    let spec = spec_of(&args.target)?;
    let config = PlanConfig {
        spec,
        mode: mode_name(args.mode),
        exact: args.exact,
    };
    let results = plan_report(spec, args.mode, args.exact)?;
    json_only(&args.output, Envelope::new("plan", config, None, results))
}

pub fn load_batch(path: &Path) -> Result<SampleBatch> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let record = read_batch_csv(BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(record.batch)
}

fn path_strings(files: &[PathBuf]) -> Vec<String> {
    files.iter().map(|p| p.display().to_string()).collect()
}

/// Flags override the powers recorded in the batch files; a mismatch is
/// reported by the estimator.
fn plan_for(powers: &PowerArgs, b1: &SampleBatch, b2: &SampleBatch) -> Result<SignalPlan> {
    Ok(SignalPlan::new(
        powers.ps1.unwrap_or(b1.power()),
        powers.ps2.unwrap_or(b2.power()),
    )?)
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateConfig {
    pub files: Vec<String>,
    pub plan: Option<SignalPlan>,
    pub noiseless: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum EstimateResult {
    Noiseless {
        n: usize,
        p_s: f64,
        mu_hat: f64,
        sigma_h2_hat: f64,
    },
    TwoLevel {
        n: usize,
        estimate: PointEstimate,
        snr_hat: Option<f64>,
        db: Option<DbFigures>,
        crb: Option<CrbReport>,
    },
}

pub fn estimate_two_level(
    b1: &SampleBatch,
    b2: &SampleBatch,
    plan: &SignalPlan,
) -> Result<EstimateResult> {
    let estimate = point_estimates(b1, b2, plan)?;
    let snr_hat = snr_point_estimate(b1, b2, plan).ok();
    let fitted = ChannelParams::new(estimate.sigma_h2_hat, estimate.sigma_v2_hat).ok();
    Ok(EstimateResult::TwoLevel {
        n: b1.n(),
        estimate,
        snr_hat,
        db: fitted.map(|p| db_conversions(plan.p_s1(), &p)),
        crb: fitted.and_then(|p| fisher_information(&p, plan, b1.sample_size()).ok()),
    })
}

pub fn estimate(args: &EstimateArgs) -> Result<Rendered> {
    let files = path_strings(&args.files);
    let (config, results) = if args.noiseless {
        if args.files.len() != 1 {
            bail!("--noiseless takes exactly one batch file");
        }
        let batch = load_batch(&args.files[0])?;
        let config = EstimateConfig {
            files,
            plan: None,
            noiseless: true,
        };
        let results = EstimateResult::Noiseless {
            n: batch.n(),
            p_s: batch.power(),
            mu_hat: batch.noiseless_second_moment(),
            sigma_h2_hat: noiseless_sigma_h2(&batch)?,
        };
        (config, results)
    } else {
        if args.files.len() != 2 {
            bail!("two batch files are required (high power first), or pass --noiseless");
        }
        let b1 = load_batch(&args.files[0])?;
        let b2 = load_batch(&args.files[1])?;
        let plan = plan_for(&args.powers, &b1, &b2)?;
        let config = EstimateConfig {
            files,
            plan: Some(plan),
            noiseless: false,
        };
        (config, estimate_two_level(&b1, &b2, &plan)?)
    };
    json_only(
        &args.output,
        Envelope::new("estimate", config, None, results),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalConfig {
    pub files: Vec<String>,
    pub spec: AccuracySpec,
    pub plan: Option<SignalPlan>,
    pub noiseless: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum IntervalResult {
    Noiseless {
        n: SampleSize,
        mu_hat: f64,
        required_n: SampleSize,
        guarantee: bool,
        mu: ConfidenceInterval,
    },
    TwoLevel {
        n: SampleSize,
        x1: f64,
        x2: f64,
        required_n: SampleSize,
        guarantee: bool,
        sigma_h2: ConfidenceInterval,
        sigma_v2: ConfidenceInterval,
        snr: ConfidenceInterval,
    },
}

impl IntervalResult {
    pub fn guarantee(&self) -> bool {
        match self {
            Self::Noiseless { guarantee, .. } | Self::TwoLevel { guarantee, .. } => *guarantee,
        }
    }
}

pub fn noiseless_interval_report(mu_hat: f64, n: SampleSize, spec: AccuracySpec) -> IntervalResult {
    let required_n = min_n_noiseless(spec);
    IntervalResult::Noiseless {
        n,
        mu_hat,
        required_n,
        guarantee: n >= required_n,
        mu: noiseless_interval(mu_hat, spec),
    }
}

pub fn interval_report(
    x1: f64,
    x2: f64,
    n: SampleSize,
    plan: &SignalPlan,
    spec: AccuracySpec,
) -> Result<IntervalResult> {
    let required_n = min_n_noisy(spec);
    let (sigma_h2, sigma_v2) = noisy_joint_intervals(x1, x2, plan, spec);
    Ok(IntervalResult::TwoLevel {
        n,
        x1,
        x2,
        required_n,
        guarantee: n >= required_n,
        sigma_h2,
        sigma_v2,
        snr: snr_interval_general(x1, x2, plan, spec)?,
    })
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.with_context(|| format!("{flag} is required when no batch files are given"))
}

pub fn interval(args: &IntervalArgs) -> Result<Rendered> {
    let spec = spec_of(&args.target)?;
    let files = path_strings(&args.files);
    let (plan, results) = if args.noiseless {
        let (mu_hat, n) = match args.files.as_slice() {
            [] => (
                2.0 * require(args.x1, "--x1")?,
                SampleSize::new(require(args.n, "--n")?)?,
            ),
            [path] => {
                let b = load_batch(path)?;
                (b.noiseless_second_moment(), b.sample_size())
            }
            _ => bail!("--noiseless takes at most one batch file"),
        };
        (None, noiseless_interval_report(mu_hat, n, spec))
    } else {
        let (x1, x2, n, plan) = match args.files.as_slice() {
            [] => {
                let plan = SignalPlan::new(
                    require(args.powers.ps1, "--ps1")?,
                    require(args.powers.ps2, "--ps2")?,
                )?;
                let n = SampleSize::new(require(args.n, "--n")?)?;
                (
                    require(args.x1, "--x1")?,
                    require(args.x2, "--x2")?,
                    n,
                    plan,
                )
            }
            [p1, p2] => {
                let (b1, b2) = (load_batch(p1)?, load_batch(p2)?);
                let plan = plan_for(&args.powers, &b1, &b2)?;
                point_estimates(&b1, &b2, &plan)?;
                (
                    b1.half_mean_power(),
                    b2.half_mean_power(),
                    b1.sample_size(),
                    plan,
                )
            }
            _ => bail!("give two batch files (high power first) or --x1/--x2/--n"),
        };
        (Some(plan), interval_report(x1, x2, n, &plan, spec)?)
    };
    if !results.guarantee() {
        eprintln!("warning: sample size is below the minimum for the stated confidence");
    }
    let config = IntervalConfig {
        files,
        spec,
        plan,
        noiseless: args.noiseless,
    };
    json_only(
        &args.output,
        Envelope::new("interval", config, None, results),
    )
}

pub fn channel_setup(args: &ChannelArgs) -> Result<(ChannelParams, SignalPlan, GenerationMethod)> {
    let params = match args.snr_db {
        Some(db) => ChannelParams::from_snr_db(db)?,
        None => ChannelParams::new(args.sigma_h2, args.sigma_v2)?,
    };
    Ok((
        params,
        SignalPlan::new(args.ps1, args.ps2)?,
        args.method.into(),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateResult {
    pub files: Vec<String>,
}

pub const BATCH_FILE_NAMES: [&str; 2] = ["batch1.csv", "batch2.csv"];

pub fn simulate(args: &SimulateArgs) -> Result<Rendered> {
    let (params, plan, method) = channel_setup(&args.channel)?;
    let config = CampaignConfig {
        params,
        plan,
        n: SampleSize::new(args.n)?,
        seed: args.seed,
        method,
    };
    let (b1, b2) = generate_campaign(&config)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let mut files = Vec::new();
    for (name, batch) in BATCH_FILE_NAMES.iter().zip([&b1, &b2]) {
        let path = args.out.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_batch_csv(std::io::BufWriter::new(file), batch, args.seed)?;
        files.push(path.display().to_string());
    }
    let envelope = Envelope::new(
        "simulate",
        config,
        Some(args.seed),
        SimulateResult { files },
    );
    Ok(Rendered {
        text: envelope.to_json()?,
        out: None,
    })
}

fn sizes(raw: &[u64]) -> Result<Vec<SampleSize>> {
    Ok(raw
        .iter()
        .map(|&n| SampleSize::new(n))
        .collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageConfig {
    pub params: ChannelParams,
    pub plan: SignalPlan,
    pub spec: AccuracySpec,
    pub n: SampleSize,
    pub trials: usize,
    pub method: GenerationMethod,
}

#[derive(Debug, Clone, Serialize)]
pub struct RmseConfig {
    pub params: ChannelParams,
    pub plan: SignalPlan,
    pub n_grid: Vec<SampleSize>,
    pub trials: usize,
    pub method: GenerationMethod,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioConfig {
    pub mode: RatioMode,
    pub delta: f64,
    pub n_grid: Vec<SampleSize>,
    pub setup: RatioSetup,
}

#[derive(Debug, Clone, Serialize)]
pub struct TightnessConfig {
    pub epsilon: f64,
    pub delta_grid: Vec<f64>,
}

fn emit<C: Serialize, R: Serialize + ?Sized + CsvTable>(
    output: &OutputArgs,
    command: &str,
    config: C,
    seed: u64,
    results: &R,
) -> Result<Rendered> {
    let text = match output.format {
        Format::Json => Envelope::new(command, config, Some(seed), results).to_json()?,
        Format::Csv => results.to_csv(),
    };
    Ok(Rendered {
        text,
        out: output.out.clone(),
    })
}

pub fn experiment(kind: &ExperimentKind) -> Result<Rendered> {
    match kind {
        ExperimentKind::Coverage {
            target,
            n,
            channel,
            run,
        } => {
            let spec = spec_of(target)?;
            let (params, plan, method) = channel_setup(channel)?;
            let n = match n {
                Some(n) => SampleSize::new(*n)?,
                None => min_n_noisy(spec),
            };
            let report = coverage_experiment(&params, &plan, spec, n, run.m, run.seed, method)?;
            let config = CoverageConfig {
                params,
                plan,
                spec,
                n,
                trials: run.m,
                method,
            };
            emit(
                &run.output,
                "experiment coverage",
                config,
                run.seed,
                &report,
            )
        }
        ExperimentKind::RmseCrb { n, channel, run } => {
            let (params, plan, method) = channel_setup(channel)?;
            let n_grid = sizes(n)?;
            let report = rmse_vs_crb(&params, &plan, &n_grid, run.m, run.seed, method)?;
            let config = RmseConfig {
                params,
                plan,
                n_grid,
                trials: run.m,
                method,
            };
            emit(
                &run.output,
                "experiment rmse-crb",
                config,
                run.seed,
                &report,
            )
        }
        ExperimentKind::RatioCurves {
            mode,
            delta,
            n,
            channel,
            run,
        } => {
            let (params, plan, method) = channel_setup(channel)?;
            let mode = match mode {
                RatioKind::Noiseless => RatioMode::Noiseless,
                RatioKind::NoisyH => RatioMode::NoisyH,
                RatioKind::NoisyV => RatioMode::NoisyV,
                RatioKind::Snr => RatioMode::Snr,
            };
            let setup = RatioSetup {
                params,
                plan,
                seed: run.seed,
                method,
            };
            let n_grid = sizes(n)?;
            let rows = ratio_curves(mode, *delta, &n_grid, &setup)?;
            let config = RatioConfig {
                mode,
                delta: *delta,
                n_grid,
                setup,
            };
            emit(
                &run.output,
                "experiment ratio-curves",
                config,
                run.seed,
                rows.as_slice(),
            )
        }
        ExperimentKind::Tightness { eps, delta, run } => {
            let rows = tightness_table(delta, *eps)?;
            let config = TightnessConfig {
                epsilon: *eps,
                delta_grid: delta.clone(),
            };
            emit(
                &run.output,
                "experiment tightness",
                config,
                run.seed,
                rows.as_slice(),
            )
        }
    }
}
