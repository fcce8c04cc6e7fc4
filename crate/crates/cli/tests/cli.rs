use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use psborrow_cli::fixture::{self, FIXTURE_SEED, N_HISTORICAL, N_INTERNAL};
use psborrow_cli::manifest::sha256_file;
use psborrow_cli::{
    cmd_analyze, cmd_simulate, parse_dataset_csv, write_dataset_csv, AnalysisConfig, CliError,
    SimulateConfig,
};
use psborrow_core::{Estimator, OutcomeKind, PsPolicy};
use serde_json::Value;

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/aml_synthetic.csv")
}

fn analysis(boots: usize, out: &Path) -> AnalysisConfig {
    AnalysisConfig {
        input: fixture_path(),
        outcome: OutcomeKind::Binomial,
        columns: fixture::roles(),
        boots,
        seed: 17,
        level: 0.95,
        grid_step: 0.02,
        policy: PsPolicy::Fail,
        odds_cap: None,
        out_dir: out.to_path_buf(),
        threads: None,
    }
}

fn simulation(out: &Path) -> SimulateConfig {
    SimulateConfig {
        outcome: OutcomeKind::Normal,
        ps: vec![5],
        bs: vec![0.0, 0.15, 0.3, 0.6],
        beta: 0.3,
        n0: 100,
        nh: 100,
        nsim: 10,
        boots: 20,
        seed: 3,
        grid_step: 0.02,
        policy: PsPolicy::Fail,
        odds_cap: None,
        out_dir: out.to_path_buf(),
        threads: None,
    }
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn bundled_fixture_parses() {
    let loaded =
        parse_dataset_csv(&fixture_path(), &fixture::roles(), OutcomeKind::Binomial).unwrap();
    assert_eq!(loaded.dataset.p(), 8);
    assert_eq!(loaded.dataset.n_internal(), N_INTERNAL);
    assert_eq!(loaded.dataset.n_historical(), N_HISTORICAL);
    assert_eq!(loaded.covariates, fixture::COVARIATES);
    assert_eq!(
        loaded.dataset,
        fixture::synthetic_aml(FIXTURE_SEED).unwrap()
    );
}

#[test]
fn written_dataset_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let data = fixture::synthetic_aml(11).unwrap();
    write_dataset_csv(&path, &data, &fixture::roles()).unwrap();
    let back = parse_dataset_csv(&path, &fixture::roles(), OutcomeKind::Binomial).unwrap();
    assert_eq!(back.dataset, data);
}

#[test]
fn smoke_analysis_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let report = cmd_analyze(&analysis(2, dir.path())).unwrap();
    assert_eq!(report.summaries.len(), 4);
    for est in Estimator::ALL {
        let draws = fs::read_to_string(dir.path().join(format!("draws_{est}.csv"))).unwrap();
        assert_eq!(draws.lines().count(), 3, "{est}");
        assert_eq!(report.summary(est).draws, 2);
    }
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
    let balance = fs::read_to_string(dir.path().join("balance.csv")).unwrap();
    assert!(balance.starts_with("covariate,estimate,raw_diff,weighted_diff"));
    assert_eq!(balance.lines().count(), 9);

    let m = manifest(dir.path());
    assert_eq!(m["seed"], 17);
    assert_eq!(m["boots"], 2);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    for entry in m["outputs"].as_array().unwrap() {
        let file = dir.path().join(entry["file"].as_str().unwrap());
        assert_eq!(
            sha256_file(&file).unwrap(),
            entry["sha256"].as_str().unwrap()
        );
    }
}

#[test]
fn fixture_posterior_brackets_ipw_median() {
    let dir = tempfile::tempdir().unwrap();
    let report = cmd_analyze(&analysis(1000, dir.path())).unwrap();
    let med = |e| report.summary(e).median;
    let (lo, hi) = (med(Estimator::FullBorrowing), med(Estimator::NoBorrowing));
    let ipw = med(Estimator::DynamicIpw);
    assert!(
        ipw >= lo.min(hi) && ipw <= lo.max(hi),
        "{ipw} outside [{lo}, {hi}]"
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, threads) in dirs.iter().zip([None, Some(1), Some(4)]) {
        let mut cfg = analysis(50, dir.path());
        cfg.threads = threads;
        cmd_analyze(&cfg).unwrap();
    }
    for est in Estimator::ALL {
        let name = format!("draws_{est}.csv");
        let first = fs::read(dirs[0].path().join(&name)).unwrap();
        for d in &dirs[1..] {
            assert_eq!(first, fs::read(d.path().join(&name)).unwrap());
        }
    }
    let hash = |d: &tempfile::TempDir| manifest(d.path())["config_hash"].clone();
    assert_eq!(hash(&dirs[0]), hash(&dirs[2]));
}

#[test]
fn manifest_alone_reproduces_outputs() {
    let first = tempfile::tempdir().unwrap();
    cmd_analyze(&analysis(30, first.path())).unwrap();
    let m = manifest(first.path());
    let mut cfg: AnalysisConfig = serde_json::from_value(m["config"].clone()).unwrap();
    let second = tempfile::tempdir().unwrap();
    cfg.out_dir = second.path().to_path_buf();
    cmd_analyze(&cfg).unwrap();
    let again = manifest(second.path());
    assert_eq!(m["outputs"], again["outputs"]);
    assert_eq!(m["input_sha256"], again["input_sha256"]);

    let sim_dir = tempfile::tempdir().unwrap();
    let mut sim = simulation(sim_dir.path());
    sim.bs = vec![0.3];
    sim.nsim = 3;
    cmd_simulate(&sim).unwrap();
    let sm = manifest(sim_dir.path());
    let mut replay: SimulateConfig = serde_json::from_value(sm["config"].clone()).unwrap();
    let replay_dir = tempfile::tempdir().unwrap();
    replay.out_dir = replay_dir.path().to_path_buf();
    cmd_simulate(&replay).unwrap();
    assert_eq!(sm["outputs"], manifest(replay_dir.path())["outputs"]);
}

#[test]
fn simulate_grid_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let report = cmd_simulate(&simulation(dir.path())).unwrap();
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert_eq!(report.rows.len(), 16);
    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(
        lines.next().unwrap(),
        "p,b,method,bias,variance,mse,variance_ratio,estimate_variance,draws,dropped"
    );
    assert_eq!(lines.count(), 16);
    let draws = fs::read_to_string(dir.path().join("draws_dynamic_ipw.csv")).unwrap();
    assert_eq!(draws.lines().count(), 1 + 4 * 10 * 20);
    assert!(report.failures.is_empty());
}

#[test]
fn failing_cell_is_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = simulation(dir.path());
    cfg.ps = vec![1];
    // b = 8 separates the cohorts completely.
    cfg.bs = vec![0.0, 8.0];
    cfg.nsim = 3;
    let err = cmd_simulate(&cfg).unwrap_err();
    assert!(matches!(
        err,
        CliError::CellFailures {
            failed: 1,
            total: 2
        }
    ));
    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 5);
    let failures = &manifest(dir.path())["details"]["failures"];
    assert_eq!(failures[0]["b"], 8.0);
}

fn psborrow(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_psborrow"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn binary_reports_errors_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(
        &bad,
        "y,historical,x\n1.0,0,0.5\n2.0,0,0.1\n0.5,1,oops\n1.5,1,0.2\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let output = psborrow(&[
        "analyze",
        "--input",
        bad.to_str().unwrap(),
        "--boots",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    let err: Value = serde_json::from_slice(&output.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "non_numeric");
    assert_eq!(err["error"]["line"], 4);

    let output = psborrow(&[
        "analyze",
        "--input",
        "/nonexistent.csv",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    let err: Value = serde_json::from_slice(&output.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "io");
}

#[test]
fn binary_runs_fixture_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("aml.csv");
    assert!(psborrow(&["fixture", "--out", data.to_str().unwrap()])
        .status
        .success());
    assert_eq!(fs::read(&data).unwrap(), fs::read(fixture_path()).unwrap());
    let out = dir.path().join("out");
    let output = psborrow(&[
        "analyze",
        "--input",
        data.to_str().unwrap(),
        "--outcome",
        "binomial",
        "--outcome-col",
        "cr2",
        "--boots",
        "20",
        "--threads",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 4);
    assert!(out.join("manifest.json").exists());
}
