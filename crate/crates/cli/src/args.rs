use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayleigh_core::channel::GenerationMethod;

#[derive(Debug, Parser)]
#[command(
    name = "rayleigh",
    version,
    about = "Plan, estimate and verify Rayleigh channel measurements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample size needed for a relative-error target.
    Plan(PlanArgs),
    /// Point estimates from one or two batch files.
    Estimate(EstimateArgs),
    /// Confidence intervals from batch files or half-mean powers.
    Interval(IntervalArgs),
    /// Generate a seeded pair of batch files.
    Simulate(SimulateArgs),
    /// Monte Carlo and tabulation experiments.
    Experiment(ExperimentArgs),
}

fn open_unit(raw: &str) -> Result<f64, String> {
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("`{raw}` is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} violates the bound 0 < value < 1"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct TargetArgs {
    /// Margin of relative error, 0 < eps < 1.
    #[arg(long, value_parser = open_unit)]
    pub eps: f64,
    /// Confidence gap, 0 < delta < 1.
    #[arg(long, value_parser = open_unit)]
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlanMode {
    Noiseless,
    Noisy,
    Snr,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, value_enum, default_value_t = PlanMode::Noiseless)]
    pub mode: PlanMode,
    /// Also report the exact minimal sample size and its coverage.
    #[arg(long)]
    pub exact: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PowerArgs {
    /// High transmit power; taken from the first batch file when absent.
    #[arg(long)]
    pub ps1: Option<f64>,
    /// Low transmit power; taken from the second batch file when absent.
    #[arg(long)]
    pub ps2: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Batch files at the high and low power levels.
    #[arg(required = true, num_args = 1..=2)]
    pub files: Vec<PathBuf>,
    #[command(flatten)]
    pub powers: PowerArgs,
    /// Single batch without noise: estimate the second moment and channel variance.
    #[arg(long)]
    pub noiseless: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct IntervalArgs {
    /// Batch files; alternatively give --x1, --x2 and --n.
    pub files: Vec<PathBuf>,
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub powers: PowerArgs,
    /// Half-mean power at the high level.
    #[arg(long, conflicts_with = "files")]
    pub x1: Option<f64>,
    /// Half-mean power at the low level.
    #[arg(long, conflicts_with = "files")]
    pub x2: Option<f64>,
    /// Samples per level behind --x1/--x2.
    #[arg(long, conflicts_with = "files")]
    pub n: Option<u64>,
    /// Single batch without noise: interval for the second moment.
    #[arg(long)]
    pub noiseless: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    #[arg(long, default_value_t = 1.0)]
    pub sigma_h2: f64,
    #[arg(long, default_value_t = 0.01)]
    pub sigma_v2: f64,
    /// Unit channel variance and noise at this SNR; overrides --sigma-h2/--sigma-v2.
    #[arg(long, conflicts_with_all = ["sigma_h2", "sigma_v2"])]
    pub snr_db: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub ps1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub ps2: f64,
    #[arg(long, value_enum, default_value_t = Method::ComplexGaussian)]
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    ComplexGaussian,
    ExponentialShortcut,
}

impl From<Method> for GenerationMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::ComplexGaussian => GenerationMethod::ComplexGaussian,
            Method::ExponentialShortcut => GenerationMethod::ExponentialShortcut,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub seed: u64,
    /// Directory receiving `batch1.csv` and `batch2.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(subcommand)]
    pub kind: ExperimentKind,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub seed: u64,
    /// Monte Carlo campaigns per sample size.
    #[arg(long, default_value_t = rayleigh_core::experiments::DEFAULT_TRIALS)]
    pub m: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentKind {
    /// Joint coverage of the simultaneous noisy intervals.
    Coverage {
        #[command(flatten)]
        target: TargetArgs,
        /// Samples per level; the exact minimal size when absent.
        #[arg(long)]
        n: Option<u64>,
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// RMSE of the estimates against the Cramer-Rao bound.
    RmseCrb {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_N_GRID)]
        n: Vec<u64>,
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Interval endpoint ratios in dB versus sample size.
    RatioCurves {
        #[arg(long, value_enum, default_value_t = RatioKind::Noiseless)]
        mode: RatioKind,
        #[arg(long, value_parser = open_unit, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_N_GRID)]
        n: Vec<u64>,
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// A priori versus minimal sample sizes across confidence levels.
    Tightness {
        #[arg(long, value_parser = open_unit, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, value_parser = open_unit, value_delimiter = ',', default_values_t = DEFAULT_DELTA_GRID)]
        delta: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
}

pub const DEFAULT_N_GRID: [u64; 10] = [10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000];
pub const DEFAULT_DELTA_GRID: [f64; 6] = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RatioKind {
    Noiseless,
    NoisyH,
    NoisyV,
    Snr,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn margin_bounds_are_enforced_at_parse_time() {
        assert!(open_unit("0.5").is_ok());
        for raw in ["0", "1", "-0.1", "x"] {
            assert!(open_unit(raw).is_err(), "{raw}");
        }
    }
}
