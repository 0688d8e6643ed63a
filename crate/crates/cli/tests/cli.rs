use std::path::Path;
use std::process::{Command, Output};

use rayleigh_cli::commands::CoverageConfig;
use rayleigh_core::channel::GenerationMethod;
use rayleigh_core::experiments::{coverage_experiment, tightness_table};
use rayleigh_core::report::{CsvTable, Envelope};
use rayleigh_core::{AccuracySpec, ChannelParams, SampleSize, SignalPlan};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rayleigh"))
        .args(args)
        .output()
        .unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn close(v: &Value, expected: f64, tol: f64) -> bool {
    (v.as_f64().unwrap() - expected).abs() < tol
}

fn write_batch(path: &Path, power: f64, values: &[f64]) {
    let mut text = format!("power,n,seed\n{power},{},0\n", values.len());
    for v in values {
        text.push_str(&format!("{v}\n"));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn plan_reports_bounds() {
    let v = json(&[
        "plan",
        "--eps",
        "0.05",
        "--delta",
        "0.01",
        "--mode",
        "noiseless",
    ]);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["results"]["apriori"], 4380);
    assert!(v["results"]["min_n"].is_null());
    let v = json(&[
        "plan", "--eps", "0.05", "--delta", "0.01", "--mode", "noisy", "--exact",
    ]);
    assert_eq!(v["results"]["apriori"], 4953);
    assert_eq!(v["results"]["min_n"], 3153);
    assert!(v["results"]["exact_coverage"].as_f64().unwrap() >= 0.99f64.sqrt());
}

#[test]
fn invalid_margin_is_a_usage_error() {
    let out = run(&["plan", "--eps", "1.5", "--delta", "0.01"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("0 < value < 1"));
}

#[test]
fn interval_from_stats() {
    let base = [
        "interval", "--x1", "1.01", "--x2", "0.01", "--ps1", "1", "--ps2", "0",
    ];
    let eps = ["--eps", "0.1", "--delta", "0.05"];
    let v = json(&[&base[..], &eps, &["--n", "100"]].concat());
    let r = &v["results"];
    assert!(close(&r["sigma_h2"]["lower"], 0.907_071, 1e-6));
    assert!(close(&r["sigma_h2"]["upper"], 1.113_131, 1e-6));
    assert!(close(&r["sigma_v2"]["lower"], 0.009_090_9, 1e-7));
    assert!(close(&r["sigma_v2"]["upper"], 0.011_111_1, 1e-7));
    assert!(close(&r["snr"]["lower"], 81.6364, 1e-4));
    assert!(close(&r["snr"]["upper"], 122.4444, 1e-4));
    assert_eq!(r["guarantee"], false);
    let v = json(&[&base[..], &eps, &["--n", "501"]].concat());
    assert_eq!(v["results"]["guarantee"], true);
}

#[test]
fn interval_propagates_denominator_error() {
    let out = run(&[
        "interval", "--x1", "2.02", "--x2", "1.02", "--ps1", "2", "--ps2", "1", "--n", "10",
        "--eps", "0.1", "--delta", "0.05",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("denominator"));
}

#[test]
fn estimate_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let (f1, f2) = (dir.path().join("hi.csv"), dir.path().join("lo.csv"));
    write_batch(&f1, 1.0, &[2.02; 4]);
    write_batch(&f2, 0.0, &[0.02; 4]);
    let v = json(&["estimate", f1.to_str().unwrap(), f2.to_str().unwrap()]);
    let r = &v["results"];
    assert!(close(&r["estimate"]["sigma_h2_hat"], 1.0, 1e-12));
    assert!(close(&r["estimate"]["sigma_v2_hat"], 0.01, 1e-12));
    assert!(close(&r["db"]["snr_db"], 20.0, 1e-9));

    let v = json(&["estimate", "--noiseless", f1.to_str().unwrap()]);
    assert!(close(&v["results"]["sigma_h2_hat"], 1.01, 1e-12));
    assert!(close(&v["results"]["mu_hat"], 2.02, 1e-12));

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert!(
        !run(&["estimate", empty.to_str().unwrap(), f2.to_str().unwrap()])
            .status
            .success()
    );

    let short = dir.path().join("short.csv");
    write_batch(&short, 0.0, &[0.02; 3]);
    let out = run(&["estimate", f1.to_str().unwrap(), short.to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn simulate_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = run(&[
            "simulate",
            "--n",
            "200",
            "--seed",
            "9",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    for name in ["batch1.csv", "batch2.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(name)).unwrap());
    }
    let v = json(&[
        "estimate",
        a.path().join("batch1.csv").to_str().unwrap(),
        a.path().join("batch2.csv").to_str().unwrap(),
    ]);
    assert_eq!(v["results"]["n"], 200);
}

#[test]
fn experiments_require_a_seed() {
    for kind in ["coverage", "rmse-crb", "ratio-curves", "tightness"] {
        let out = run(&["experiment", kind, "--eps", "0.1", "--delta", "0.05"]);
        assert!(!out.status.success(), "{kind}");
    }
}

#[test]
fn experiment_output_matches_library() {
    let out = run(&[
        "experiment",
        "coverage",
        "--eps",
        "0.1",
        "--delta",
        "0.05",
        "--n",
        "150",
        "--m",
        "200",
        "--seed",
        "31",
        "--snr-db",
        "20",
    ]);
    assert!(out.status.success());
    let params = ChannelParams::from_snr_db(20.0).unwrap();
    let plan = SignalPlan::new(1.0, 0.0).unwrap();
    let spec = AccuracySpec::new(0.1, 0.05).unwrap();
    let n = SampleSize::new(150).unwrap();
    let method = GenerationMethod::ComplexGaussian;
    let report = coverage_experiment(&params, &plan, spec, n, 200, 31, method).unwrap();
    let config = CoverageConfig {
        params,
        plan,
        spec,
        n,
        trials: 200,
        method,
    };
    let expected = Envelope::new("experiment coverage", config, Some(31), &report)
        .to_json()
        .unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);

    let out = run(&[
        "experiment",
        "tightness",
        "--eps",
        "0.05",
        "--seed",
        "1",
        "--format",
        "csv",
    ]);
    let rows = tightness_table(&[1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12], 0.05).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), rows.to_csv());
}

#[test]
fn tightness_table_first_row() {
    let v = json(&["experiment", "tightness", "--seed", "1"]);
    let first = &v["results"][0];
    assert!(close(&first["delta"], 0.01, 1e-15));
    assert!(close(&first["ratio"], 1.597_10, 1e-5));
}

#[test]
fn experiment_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, format) in ["json", "json", "csv", "csv"].iter().enumerate() {
        let path = dir.path().join(format!("r{i}"));
        let out = run(&[
            "experiment",
            "rmse-crb",
            "--snr-db",
            "20",
            "--m",
            "150",
            "--n",
            "20,200",
            "--seed",
            "8",
            "--format",
            format,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        outputs.push(std::fs::read(path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[2], outputs[3]);
    assert!(String::from_utf8_lossy(&outputs[2]).starts_with("n,coverage,"));
}

#[test]
fn ratio_curves_run() {
    for mode in ["noiseless", "noisy-h", "noisy-v", "snr"] {
        let v = json(&[
            "experiment",
            "ratio-curves",
            "--mode",
            mode,
            "--n",
            "5,100,1000",
            "--seed",
            "2",
        ]);
        let rows = v["results"].as_array().unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0]["epsilon"].is_null());
        assert!(rows[2]["ratio_db"].as_f64().unwrap() < rows[1]["ratio_db"].as_f64().unwrap());
    }
}
