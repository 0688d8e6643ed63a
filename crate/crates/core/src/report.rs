//! JSON and CSV serialization of reports.
//!
//! JSON documents share the envelope `{schema, command, config, seed, results}`.
//! CSV tables carry one row per sample size (or per `δ` for tightness tables);
//! missing values are written as empty fields.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{MonteCarloReport, RatioRow, TightnessRow};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub schema: u32,
    pub command: &'a str,
    pub config: C,
    pub seed: Option<u64>,
    pub results: R,
}

impl<'a, C: Serialize, R: Serialize> Envelope<'a, C, R> {
    pub fn new(command: &'a str, config: C, seed: Option<u64>, results: R) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            command,
            config,
            seed,
            results,
        }
    }

    /// Pretty-printed JSON terminated by a newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

/// A value that renders as a CSV table.
pub trait CsvTable {
    fn to_csv(&self) -> String;
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl CsvTable for MonteCarloReport {
    fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,coverage,coverage_h,coverage_v,mean_h,mean_v,rmse_h,rmse_v,crb_h,crb_v\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.n,
                opt(r.coverage),
                opt(r.coverage_h),
                opt(r.coverage_v),
                r.mean_h,
                r.mean_v,
                r.rmse_h,
                r.rmse_v,
                opt(r.crb_h),
                opt(r.crb_v)
            );
        }
        out
    }
}

impl CsvTable for [RatioRow] {
    fn to_csv(&self) -> String {
        let mut out = String::from("n,epsilon,ratio_db\n");
        for r in self {
            let _ = writeln!(out, "{},{},{}", r.n, opt(r.epsilon), opt(r.ratio_db));
        }
        out
    }
}

impl CsvTable for [TightnessRow] {
    fn to_csv(&self) -> String {
        let mut out = String::from("delta,z,ratio,epsilon,apriori,min_n,finite_ratio\n");
        for r in self {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.delta, r.z, r.ratio, r.epsilon, r.apriori, r.min_n, r.finite_ratio
            );
        }
        out
    }
}
