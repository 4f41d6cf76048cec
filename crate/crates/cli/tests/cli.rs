use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use inar_core::formats::{read_path_csv, read_samples_csv};
use inar_core::simulate::{simulate_path, RngStream};
use inar_core::ModelParams;
use serde_json::Value;

fn inar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inar"))
        .current_dir(dir)
        .env_remove("INAR_THREADS")
        .args(args)
        .output()
        .unwrap()
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).to_string();
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("error:")).collect();
    assert_eq!(lines.len(), 1, "stderr: {text}");
    lines[0].to_string()
}

const SMALL_MC: &str = r#"{"case": "case2", "nu": 100, "kernel": "lags:[0.8]", "T": 200, "p": 3, "n_experiments": 40, "seed": 9}"#;

#[test]
fn simulate_zero_immigration_gives_zero_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = inar(
        dir.path(),
        &[
            "simulate", "--nu", "0", "--kernel", "none", "--T", "100", "--seed", "1", "--out",
            "p.csv",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let path = read_path_csv(&fs::read_to_string(dir.path().join("p.csv")).unwrap()).unwrap();
    assert_eq!(path.counts, vec![0; 100]);
}

#[test]
fn simulate_round_trips_in_memory_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = inar(
        dir.path(),
        &[
            "simulate",
            "--nu",
            "100",
            "--kernel",
            "geometric:0.25",
            "--T",
            "500",
            "--seed",
            "17",
            "--stream",
            "3",
            "--out",
            "p.csv",
        ],
    );
    assert!(out.status.success());
    let from_file = read_path_csv(&fs::read_to_string(dir.path().join("p.csv")).unwrap()).unwrap();
    let params = ModelParams::geometric(100.0, 0.25).unwrap();
    let direct = simulate_path(&params, 500, &mut RngStream::new(17, 3)).unwrap();
    assert_eq!(from_file.counts, direct.counts);
}

#[test]
fn estimate_writes_result_and_intervals() {
    let dir = tempfile::tempdir().unwrap();
    assert!(inar(
        dir.path(),
        &[
            "simulate",
            "--nu",
            "100",
            "--kernel",
            "lags:[0.8]",
            "--T",
            "2000",
            "--seed",
            "5"
        ]
    )
    .status
    .success());
    let out = inar(
        dir.path(),
        &["estimate", "--path", "path.csv", "--p", "2", "--ci", "0.95"],
    );
    assert!(out.status.success(), "{out:?}");
    let json: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("estimate.json")).unwrap())
            .unwrap();
    assert_eq!(json["T"], 2000);
    assert_eq!(json["p"], 2);
    assert_eq!(json["tool"], "inar");
    assert!(json["base_seed"].is_null());
    let beta1 = json["beta_hat"][0].as_f64().unwrap();
    assert!((beta1 - 0.8).abs() < 0.1, "{beta1}");
    let ci = json["confidence_intervals"].as_array().unwrap();
    assert_eq!(ci.len(), 3);
    for c in ci {
        assert!(c["lower"].as_f64().unwrap() < c["estimate"].as_f64().unwrap());
    }
    let table = fs::read_to_string(dir.path().join("ci.csv")).unwrap();
    assert!(table.starts_with("component,estimate,std_error,lower,upper\nmu_hat,"));
}

#[test]
fn estimate_on_zero_path_is_singular() {
    let dir = tempfile::tempdir().unwrap();
    assert!(inar(
        dir.path(),
        &[
            "simulate", "--nu", "0", "--kernel", "none", "--T", "50", "--seed", "1", "--out",
            "p.csv"
        ]
    )
    .status
    .success());
    let out = inar(dir.path(), &["estimate", "--path", "p.csv", "--p", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error: SingularDesign: "));
}

#[test]
fn mc_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), SMALL_MC).unwrap();
    let a = inar(
        dir.path(),
        &[
            "mc",
            "--config",
            "cfg.json",
            "--out-dir",
            "a",
            "--threads",
            "1",
        ],
    );
    assert!(a.status.success(), "{a:?}");
    let b = Command::new(env!("CARGO_BIN_EXE_inar"))
        .current_dir(dir.path())
        .env("INAR_THREADS", "3")
        .args(["mc", "--config", "cfg.json", "--out-dir", "b"])
        .output()
        .unwrap();
    assert!(b.status.success());
    for file in [
        "summary.json",
        "samples.csv",
        "qq_mu_hat.csv",
        "hist_beta2.csv",
    ] {
        assert_eq!(
            fs::read(dir.path().join("a").join(file)).unwrap(),
            fs::read(dir.path().join("b").join(file)).unwrap(),
            "{file}"
        );
    }

    let json: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/summary.json")).unwrap())
            .unwrap();
    assert_eq!(json["base_seed"], 9);
    assert_eq!(json["case"], "case2");
    assert_eq!(json["samples_for_normality"], "raw");
    assert_eq!(json["mean_theta"].as_array().unwrap().len(), 4);
    assert_eq!(json["config_digest"].as_str().unwrap().len(), 16);
    for name in ["mu_hat", "beta1", "beta2"] {
        let p = json["normality"][name]["sw_p"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }

    let samples =
        read_samples_csv(&fs::read_to_string(dir.path().join("a/samples.csv")).unwrap()).unwrap();
    assert_eq!(samples.columns, vec!["mu_hat", "beta1", "beta2", "beta3"]);
    assert_eq!(samples.rows.len(), 40);
    let hist = fs::read_to_string(dir.path().join("a/hist_beta2.csv")).unwrap();
    assert!(hist.starts_with("bin_left,bin_right,count\n"));
    assert_eq!(hist.lines().count(), 31);
    assert!(fs::read_to_string(dir.path().join("a/qq_beta1.csv"))
        .unwrap()
        .starts_with("z,value\n"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), SMALL_MC).unwrap();
    assert!(inar(
        dir.path(),
        &["mc", "--config", "cfg.json", "--out-dir", "a"]
    )
    .status
    .success());
    assert!(inar(
        dir.path(),
        &[
            "mc",
            "--config",
            "cfg.json",
            "--out-dir",
            "b",
            "--seed",
            "10"
        ]
    )
    .status
    .success());
    let a: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/summary.json")).unwrap())
            .unwrap();
    let b: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b/summary.json")).unwrap())
            .unwrap();
    assert_eq!(b["base_seed"], 10);
    assert_ne!(a["config_digest"], b["config_digest"]);
    assert_ne!(a["mean_theta"], b["mean_theta"]);
}

#[test]
fn normality_reads_samples_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), SMALL_MC).unwrap();
    assert!(inar(dir.path(), &["mc", "--config", "cfg.json"])
        .status
        .success());
    let out = inar(
        dir.path(),
        &[
            "normality",
            "--samples",
            "samples.csv",
            "--components",
            "mu_hat,beta3",
            "--out-dir",
            "n",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let json: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("n/normality.json")).unwrap())
            .unwrap();
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(
        json["components"]["mu_hat"]["jb_p"],
        summary["normality"]["mu_hat"]["jb_p"]
    );
    assert_eq!(json["components"]["beta3"]["sample_size"], 40);
    assert!(dir.path().join("n/qq_beta3.csv").exists());

    let missing = inar(
        dir.path(),
        &[
            "normality",
            "--samples",
            "samples.csv",
            "--components",
            "beta9",
        ],
    );
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr_line(&missing).starts_with("error: ValidationError: `components`"));
}

#[test]
fn config_errors_are_single_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.json"),
        SMALL_MC.replace("\"seed\": 9", "\"seed\": 9, \"alpha_decay\": 1"),
    )
    .unwrap();
    let out = inar(dir.path(), &["mc", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    let line = stderr_line(&out);
    assert!(
        line.starts_with("error: ParseError: line 1, column"),
        "{line}"
    );
    assert!(line.contains("alpha_decay"));

    fs::write(
        dir.path().join("neg.json"),
        SMALL_MC.replace("\"nu\": 100", "\"nu\": -1"),
    )
    .unwrap();
    let out = inar(dir.path(), &["mc", "--config", "neg.json"]);
    assert!(stderr_line(&out).starts_with("error: ValidationError: `nu`"));

    let out = inar(dir.path(), &["mc", "--config", "absent.json"]);
    assert!(stderr_line(&out).starts_with("error: IoError: "));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(inar(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(inar(dir.path(), &["estimate"]).status.code(), Some(2));
    assert_eq!(
        inar(dir.path(), &["simulate", "--T", "ten"]).status.code(),
        Some(2)
    );
    let bad_env = Command::new(env!("CARGO_BIN_EXE_inar"))
        .current_dir(dir.path())
        .env("INAR_THREADS", "many")
        .args(["simulate", "--nu", "1", "--T", "5", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(2));
}

#[test]
fn malformed_path_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.csv"), "n,x\n1,4\n2,x\n").unwrap();
    let out = inar(dir.path(), &["estimate", "--path", "p.csv", "--p", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error: FormatError: malformed input at line 3"));
}
