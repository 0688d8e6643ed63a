//! Seeded measurement campaigns from the reduced model `X = H·s + V`.
//!
//! Every batch draws from its own counter-based stream keyed by
//! `(seed, batch label)`, so the two batches of a campaign never share
//! random numbers and a batch can be regenerated in isolation.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{ChannelParams, SampleBatch, SignalPlan};
use crate::planner::SampleSize;
use crate::rng::{derive_key, CounterRng};

const BATCH_LABEL_HIGH: u64 = 1;
const BATCH_LABEL_LOW: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenerationMethod {
    /// Draw `H`, `V` as complex Gaussians and a random BPSK sign per sample.
    #[default]
    ComplexGaussian,
    /// Draw `|X|²` directly as an exponential with mean `2σ_ℓ²`.
    ExponentialShortcut,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub params: ChannelParams,
    pub plan: SignalPlan,
    pub n: SampleSize,
    pub seed: u64,
    pub method: GenerationMethod,
}

impl CampaignConfig {
    /// Unit channel variance and unit high power, with the given noise level.
    pub fn normalized(sigma_v2: f64, n: SampleSize, seed: u64) -> Result<Self> {
        Ok(Self {
            params: ChannelParams::new(1.0, sigma_v2)?,
            plan: SignalPlan::default(),
            n,
            seed,
            method: GenerationMethod::default(),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_method(mut self, method: GenerationMethod) -> Self {
        self.method = method;
        self
    }

    fn batch_label(&self, power: f64) -> Result<u64> {
        if power == self.plan.p_s1() {
            Ok(BATCH_LABEL_HIGH)
        } else if power == self.plan.p_s2() {
            Ok(BATCH_LABEL_LOW)
        } else {
            Err(Error::Precondition(format!(
                "power {power} is neither p_s1={} nor p_s2={}",
                self.plan.p_s1(),
                self.plan.p_s2()
            )))
        }
    }
}

fn fill_complex_gaussian(
    rng: &mut CounterRng,
    params: &ChannelParams,
    power: f64,
    out: &mut [f64],
) {
    let sd_h = params.sigma_h2().sqrt();
    let sd_v = params.sigma_v2().sqrt();
    let amplitude = power.sqrt();
    for slot in out.iter_mut() {
        let (h_re, h_im) = rng.next_normal_pair();
        let (v_re, v_im) = rng.next_normal_pair();
        let symbol = if rng.next_u64() >> 63 == 0 {
            amplitude
        } else {
            -amplitude
        };
        let re = symbol * sd_h * h_re + sd_v * v_re;
        let im = symbol * sd_h * h_im + sd_v * v_im;
        *slot = re * re + im * im;
    }
}

fn fill_exponential(rng: &mut CounterRng, params: &ChannelParams, power: f64, out: &mut [f64]) {
    let mean = 2.0 * params.composite_variance(power);
    for slot in out.iter_mut() {
        *slot = -mean * rng.next_open01().ln();
    }
}

/// Generates the `n` received powers measured at `power`, which must be one of
/// the plan's two levels.
pub fn generate_batch(config: &CampaignConfig, power: f64) -> Result<SampleBatch> {
    let label = config.batch_label(power)?;
    let mut rng = CounterRng::new(derive_key(config.seed, label));
    let mut values = vec![0.0; config.n.get() as usize];
    match config.method {
        GenerationMethod::ComplexGaussian => {
            fill_complex_gaussian(&mut rng, &config.params, power, &mut values)
        }
        GenerationMethod::ExponentialShortcut => {
            fill_exponential(&mut rng, &config.params, power, &mut values)
        }
    }
    SampleBatch::new(power, values)
}

/// Both batches of a campaign, at `p_s1` and `p_s2`.
pub fn generate_campaign(config: &CampaignConfig) -> Result<(SampleBatch, SampleBatch)> {
    Ok((
        generate_batch(config, config.plan.p_s1())?,
        generate_batch(config, config.plan.p_s2())?,
    ))
}

/// A batch together with the seed recorded in its file header.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRecord {
    pub batch: SampleBatch,
    pub seed: u64,
}

pub const BATCH_CSV_HEADER: &str = "power,n,seed";

/// Writes `power,n,seed`, the header values, then one value per line with
/// 17 significant digits.
pub fn write_batch_csv<W: Write>(mut out: W, batch: &SampleBatch, seed: u64) -> Result<()> {
    writeln!(out, "{BATCH_CSV_HEADER}")?;
    writeln!(out, "{},{},{}", batch.power(), batch.n(), seed)?;
    for v in batch.received_power() {
        writeln!(out, "{v:.16e}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_batch_csv<R: BufRead>(input: R) -> Result<BatchRecord> {
    let mut lines = input.lines();
    let mut next_line = |what: &str| -> Result<String> {
        match lines.next() {
            Some(line) => Ok(line?),
            None => Err(Error::Parse(format!("missing {what}"))),
        }
    };
    let header = next_line("header line")?;
    if header.trim() != BATCH_CSV_HEADER {
        return Err(Error::Parse(format!(
            "expected header `{BATCH_CSV_HEADER}`, got `{header}`"
        )));
    }
    let meta = next_line("batch metadata line")?;
    let fields: Vec<&str> = meta.trim().split(',').collect();
    if fields.len() != 3 {
        return Err(Error::Parse(format!(
            "metadata line needs 3 fields, got `{meta}`"
        )));
    }
    let parse_err = |what: &str, raw: &str| Error::Parse(format!("invalid {what} `{raw}`"));
    let power: f64 = fields[0]
        .parse()
        .map_err(|_| parse_err("power", fields[0]))?;
    let n: usize = fields[1].parse().map_err(|_| parse_err("n", fields[1]))?;
    let seed: u64 = fields[2]
        .parse()
        .map_err(|_| parse_err("seed", fields[2]))?;

    let mut values = Vec::with_capacity(n);
    for line in lines {
        let line = line?;
        let raw = line.trim();
        if raw.is_empty() {
            continue;
        }
        values.push(
            raw.parse::<f64>()
                .map_err(|_| parse_err("received power", raw))?,
        );
    }
    if values.len() != n {
        return Err(Error::Parse(format!(
            "header declares n={n} but file holds {} values",
            values.len()
        )));
    }
    Ok(BatchRecord {
        batch: SampleBatch::new(power, values)?,
        seed,
    })
}
