//! End-to-end tests of the `ftime` binary against synthetic source files.

use factor_timing::{synthetic, Month};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ftime")
}

/// Synthetic source files plus a config covering all four models with cheap
/// hyperparameters; returns the config path.
fn setup(dir: &Path, seed: u64) -> PathBuf {
    let start = Month::new(199001).unwrap();
    let data = synthetic::generate(start, 120, seed);
    fs::write(dir.join("factors.csv"), &data.factor_csv).unwrap();
    fs::write(dir.join("predictors.csv"), &data.predictor_csv).unwrap();
    let config = format!(
        r#"
[data]
factor_csv = "{f}"
predictor_csv = "{p}"

[split]
train_start = 199001
train_end = 199612
test_start = 199701
test_end = 199912

[timing]
gamma = 2.0
weight_cap = 5.0

[[models]]
kind = "ols_ct"

[[models]]
kind = "ridge"

[[models]]
kind = "random_forest"
rf = {{ n_trees = 10 }}

[[models]]
kind = "nn3"
nn = {{ epochs = 120 }}

[[costs]]
kind = "none"

[[costs]]
kind = "proportional"
rate = 0.0020

[[costs]]
kind = "quadratic"
rate = 0.0050

[run]
seed = 42
"#,
        f = dir.join("factors.csv").display(),
        p = dir.join("predictors.csv").display(),
    );
    let path = dir.join("config.toml");
    fs::write(&path, config).unwrap();
    path
}

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn ingest_summarizes_without_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let config = setup(tmp.path(), 1);
    let out = run(&["ingest", "--config", config.to_str().unwrap()], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("120 months"), "{text}");
    assert!(text.contains("199001..199912"), "{text}");
    assert!(!tmp.path().join("out").exists(), "no files without --dump");

    let dumped = run(
        &["ingest", "--config", config.to_str().unwrap(), "--out", "o2", "--dump"],
        tmp.path(),
    );
    assert!(dumped.status.success());
    let aligned = fs::read_to_string(tmp.path().join("o2/aligned.csv")).unwrap();
    assert!(aligned.starts_with("yyyymm,cma,mkt_rf,tms,dfy,corpr,tms_lag1,dfy_lag1,cma_lag1\n"));
    assert_eq!(aligned.lines().count(), 121);
}

#[test]
fn missing_input_file_exits_2_with_path() {
    let tmp = tempfile::tempdir().unwrap();
    let config = setup(tmp.path(), 2);
    fs::remove_file(tmp.path().join("predictors.csv")).unwrap();
    let out = run(&["ingest", "--config", config.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("predictors.csv"));
}

#[test]
fn config_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let config = setup(tmp.path(), 3);
    // Strip the model sections out of the config.
    let text = fs::read_to_string(&config).unwrap();
    let no_models: String = text
        .split("[[models]]")
        .next()
        .unwrap()
        .to_string()
        + text.split("[[costs]]").skip(1).map(|s| format!("[[costs]]{s}")).collect::<String>().as_str();
    fs::write(tmp.path().join("broken.toml"), no_models).unwrap();
    let out = run(
        &["run", "--config", tmp.path().join("broken.toml").to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("models"));

    let usage = run(&["run", "--bogus-flag"], tmp.path());
    assert_eq!(usage.status.code(), Some(1));
}

#[test]
fn run_writes_all_tables_and_report_prints_them() {
    let tmp = tempfile::tempdir().unwrap();
    let config = setup(tmp.path(), 4);
    let out = run(
        &["run", "--config", config.to_str().unwrap(), "--out", "res", "--dump"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));

    let dir = tmp.path().join("res");
    for file in [
        "aligned.csv",
        "forecast_ols_ct.csv",
        "forecast_ridge.csv",
        "forecast_random_forest.csv",
        "forecast_nn3.csv",
        "weights_ols_ct.csv",
        "weights_constant.csv",
        "backtest_ols_ct_none.csv",
        "backtest_nn3_prop20bps.csv",
        "backtest_constant_quad50bps.csv",
        "backtest_ridge_prop20bps_opt.csv",
        "oos_r2.csv",
        "sharpe_table.csv",
        "intervals.csv",
        "summary.json",
        "config_resolved.toml",
    ] {
        assert!(dir.join(file).exists(), "missing {file}");
    }

    let r2 = fs::read_to_string(dir.join("oos_r2.csv")).unwrap();
    assert_eq!(r2.lines().count(), 5, "header + 4 model rows: {r2}");
    assert!(r2.contains("ols_ct,Linear Regression - OLS (Campbell-Thompson),"));
    assert!(r2.contains("nn3,Neural Network - NN3,"));

    let sharpe = fs::read_to_string(dir.join("sharpe_table.csv")).unwrap();
    assert!(sharpe.starts_with("strategy,test\n"), "{sharpe}");
    assert_eq!(sharpe.lines().count(), 6, "4 models + constant: {sharpe}");

    // Interval rows: 4 models + benchmark, two costly regimes each.
    let intervals = fs::read_to_string(dir.join("intervals.csv")).unwrap();
    assert_eq!(intervals.lines().count(), 11, "{intervals}");

    // Forecast series aligned to the 36 test months.
    let forecast = fs::read_to_string(dir.join("forecast_ols_ct.csv")).unwrap();
    assert_eq!(forecast.lines().count(), 37);
    assert!(forecast.starts_with("yyyymm,actual,forecast\n"));

    let report = run(&["report", "--out", "res"], tmp.path());
    assert!(report.status.success(), "{}", stderr(&report));
    let text = stdout(&report);
    assert!(text.contains("OOS R²"));
    assert!(text.contains("Sharpe ratio by horizon"));
    assert!(text.contains("rebalancing intervals"));
    assert!(text.contains("Neural Network - NN3"));
    assert!(text.contains("config digest"));
}

#[test]
fn report_on_missing_directory_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["report", "--out", "nowhere"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing artifacts"));
}

#[test]
fn no_cost_only_run_omits_interval_table() {
    let tmp = tempfile::tempdir().unwrap();
    let config = setup(tmp.path(), 5);
    let text = fs::read_to_string(&config).unwrap();
    // Keep only the no-cost regime.
    let trimmed = text.replace(
        "[[costs]]\nkind = \"proportional\"\nrate = 0.0020\n\n[[costs]]\nkind = \"quadratic\"\nrate = 0.0050\n",
        "",
    );
    assert!(trimmed.len() < text.len());
    fs::write(&config, trimmed).unwrap();

    let out = run(
        &["run", "--config", config.to_str().unwrap(), "--out", "nc"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let intervals = fs::read_to_string(tmp.path().join("nc/intervals.csv")).unwrap();
    assert_eq!(intervals, "model,cost,interval\n");

    let report = run(&["report", "--out", "nc"], tmp.path());
    assert!(report.status.success());
    assert!(!stdout(&report).contains("rebalancing intervals"));
}

fn file_map(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut map = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        map.insert(
            entry.file_name().to_string_lossy().into_owned(),
            fs::read(entry.path()).unwrap(),
        );
    }
    map
}

#[test]
fn identical_configs_produce_byte_identical_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = setup(tmp.path(), 6);
    for out_dir in ["a", "b"] {
        let out = run(
            &["run", "--config", config.to_str().unwrap(), "--out", out_dir, "--dump"],
            tmp.path(),
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let a = file_map(&tmp.path().join("a"));
    let b = file_map(&tmp.path().join("b"));
    assert_eq!(a.len(), b.len());
    for (name, bytes) in &a {
        assert_eq!(Some(bytes), b.get(name), "file {name} differs between runs");
    }

    // A different seed must change model-dependent outputs.
    let out = run(
        &["run", "--config", config.to_str().unwrap(), "--out", "c", "--seed", "7"],
        tmp.path(),
    );
    assert!(out.status.success());
    let c = file_map(&tmp.path().join("c"));
    assert_ne!(
        a.get("forecast_random_forest.csv"),
        c.get("forecast_random_forest.csv"),
        "seed override must reach the forest refits"
    );
}
