//! End-to-end runs of the `causal-rulefit` binary on small simulated data.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use causal_rulefit::model::{CausalRuleFitModel, FitMeta};
use causal_rulefit::{load_model, save_model, FitConfig, PropensitySource};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_causal-rulefit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let j = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[j].parse().unwrap()).collect()
}

/// A temporary directory holding a simulated data set `data.csv`.
fn simulated(n: usize, p: usize) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    ok(&[
        "simulate", "--scenario", "2", "--n", &n.to_string(), "--p", &p.to_string(),
        "--seed", "5", "--out", s(&data),
    ]);
    (dir, data)
}

/// Fits a small model on `data` and returns its path.
fn quick_fit(dir: &Path, data: &Path) -> PathBuf {
    let model = dir.join("model.json");
    ok(&[
        "fit", "--data", s(data), "--pscore-col", "pscore", "--trees", "30", "--folds", "3",
        "--lambda-path", "20", "--seed", "2", "--model", s(&model),
    ]);
    model
}

#[test]
fn simulate_writes_the_documented_layout() {
    let (dir, data) = simulated(600, 50);
    let (header, rows) = read_csv(&data);
    assert_eq!(rows.len(), 600);
    assert_eq!(header.len(), 54);
    assert_eq!(&header[..3], ["y", "t", "pscore"]);
    assert_eq!(header[3], "x1");
    assert_eq!(header[53], "true_tau");

    let again = dir.path().join("again.csv");
    ok(&[
        "simulate", "--scenario", "2", "--n", "600", "--p", "50", "--seed", "5", "--out", s(&again),
    ]);
    assert_eq!(std::fs::read(&data).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn simulate_rejects_unknown_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    for scenario in ["0", "13"] {
        let res = run(&["simulate", "--scenario", scenario, "--out", s(&out)]);
        assert_eq!(res.status.code(), Some(2), "scenario {scenario}");
    }
    assert!(!out.exists());
}

#[test]
fn fit_predict_inspect_evaluate() {
    let (dir, data) = simulated(300, 6);
    let model = quick_fit(dir.path(), &data);
    assert!(model.exists());
    let loaded = load_model(&model).unwrap();
    assert_eq!(loaded.meta.n, 300);
    assert_eq!(loaded.meta.p, 6);
    assert_eq!(loaded.meta.config.gbt.trees, 30);

    // Effects, one per row, and the arm predictions differ by them.
    let preds = dir.path().join("preds.csv");
    ok(&["predict", "--model", s(&model), "--data", s(&data), "--both-arms", "--out", s(&preds)]);
    let tau = column(&preds, "tau_hat");
    let f0 = column(&preds, "f0");
    let f1 = column(&preds, "f1");
    assert_eq!(tau.len(), 300);
    for i in 0..tau.len() {
        assert!((f1[i] - f0[i] - tau[i]).abs() <= 1e-9 * (1.0 + tau[i].abs()));
    }

    // Without --out the effects go to standard output.
    let stdout = ok(&["predict", "--model", s(&model), "--data", s(&data)]);
    assert_eq!(stdout.lines().count(), 301);
    assert_eq!(stdout.lines().next(), Some("tau_hat"));

    let table = dir.path().join("terms.csv");
    ok(&["inspect", "--model", s(&model), "--all", "--out", s(&table)]);
    let (header, rows) = read_csv(&table);
    assert_eq!(header, ["kind", "term", "importance", "coefficient", "support"]);
    assert_eq!(rows.len(), loaded.rules.len() + loaded.linear.len());
    let top = ok(&["inspect", "--model", s(&model), "--all", "--top", "1"]);
    assert!(top.lines().count() <= 2);

    let mse: f64 = ok(&["evaluate", "--data", s(&data), "--data", s(&preds)]).trim().parse().unwrap();
    assert!(mse.is_finite() && mse >= 0.0);
}

#[test]
fn fit_rejects_bad_propensities() {
    let (dir, data) = simulated(100, 5);
    let model = dir.path().join("m.json");
    let out = run(&["fit", "--data", s(&data), "--pscore", "1.5", "--model", s(&model)]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["fit", "--data", s(&data), "--model", s(&model)]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "fit", "--data", s(&data), "--pscore", "0.5", "--pscore-col", "pscore", "--model", s(&model),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!model.exists());
}

#[test]
fn predict_names_a_missing_feature() {
    let (dir, data) = simulated(200, 5);
    let model = quick_fit(dir.path(), &data);
    let (header, rows) = read_csv(&data);
    let keep: Vec<usize> = (0..header.len()).filter(|&j| header[j] != "x3").collect();
    let cut = dir.path().join("cut.csv");
    let mut w = csv::Writer::from_path(&cut).unwrap();
    w.write_record(keep.iter().map(|&j| &header[j])).unwrap();
    for r in &rows {
        w.write_record(keep.iter().map(|&j| &r[j])).unwrap();
    }
    w.flush().unwrap();
    let out = run(&["predict", "--model", s(&model), "--data", s(&cut)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("x3"));
}

#[test]
fn inspect_of_intercept_only_model_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let model = CausalRuleFitModel {
        intercept: 1.5,
        rules: Vec::new(),
        linear: Vec::new(),
        meta: FitMeta {
            seed: 0,
            lambda: 1.0,
            n: 10,
            p: 1,
            feature_names: vec!["x1".into()],
            cv_error: None,
            propensity: PropensitySource::Constant(0.5),
            config: FitConfig::default(),
        },
    };
    let path = dir.path().join("empty.json");
    save_model(&model, &path).unwrap();
    let stdout = ok(&["inspect", "--model", s(&path)]);
    assert_eq!(stdout.lines().count(), 1, "only the header: {stdout}");
}

#[test]
fn tune_on_a_single_point_grid() {
    let (dir, data) = simulated(150, 5);
    let table = dir.path().join("tune.csv");
    let stdout = ok(&[
        "tune", "--data", s(&data), "--pscore-col", "pscore", "--trees", "20", "--mean-depth", "3",
        "--subsample", "0.5", "--shrinkage", "0.1", "--folds", "3", "--repeats", "1",
        "--lambda-path", "10", "--out", s(&table),
    ]);
    assert!(stdout.starts_with("best: trees 20"));
    let (header, rows) = read_csv(&table);
    assert_eq!(header, ["trees", "mean_depth", "subsample", "shrinkage", "cv_error"]);
    assert_eq!(rows.len(), 1);
    assert!(rows[0][4].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn evaluate_reports_mean_squared_error() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let same = write("same.csv", "true_tau,tau_hat\n1.5,1.5\n-2,-2\n");
    assert_eq!(ok(&["evaluate", "--data", s(&same)]).trim(), "0");
    let truth = write("truth.csv", "true_tau\n0\n0\n");
    let pred = write("pred.csv", "tau_hat\n1\n1\n");
    assert_eq!(ok(&["evaluate", "--data", s(&truth), "--data", s(&pred)]).trim(), "1");
    let short = write("short.csv", "tau_hat\n1\n");
    let out = run(&["evaluate", "--data", s(&truth), "--data", s(&short)]);
    assert!(!out.status.success());
}

#[test]
fn config_file_fills_in_flags_and_command_line_wins() {
    let (dir, data) = simulated(150, 5);
    let config = dir.path().join("fit.toml");
    std::fs::write(
        &config,
        format!(
            "data = \"{}\"\npscore-col = \"pscore\"\ntrees = 15\nshrinkage = 0.2\nfolds = 3\nlambda-path = 10\n",
            s(&data)
        ),
    )
    .unwrap();
    let model = dir.path().join("m.json");
    ok(&["fit", "--config", s(&config), "--trees", "12", "--model", s(&model)]);
    let loaded = load_model(&model).unwrap();
    assert_eq!(loaded.meta.config.gbt.trees, 12);
    assert_eq!(loaded.meta.config.gbt.shrinkage, 0.2);

    std::fs::write(&config, "no-such-flag = 3\n").unwrap();
    let out = run(&["fit", "--config", s(&config), "--data", s(&data), "--pscore", "0.5", "--model", s(&model)]);
    assert_eq!(out.status.code(), Some(2));
}
