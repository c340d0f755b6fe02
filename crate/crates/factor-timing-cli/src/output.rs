//! Output artifacts: per-strategy CSV series, the three summary tables,
//! `summary.json`, and the resolved-config echo. All numeric cells use
//! Rust's shortest round-trip float formatting, so identical runs produce
//! byte-identical files.

use crate::config::ResolvedConfig;
use crate::error::CliError;
use crate::pipeline::{Loaded, RunResults, StrategyRun};
use factor_timing::{IntervalScore, PeriodMetrics};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
pub struct Summary {
    pub config_digest: String,
    pub data: DataSummary,
    pub period_labels: Vec<String>,
    pub oos_r2: Vec<R2Row>,
    pub sharpe: Vec<SharpeRow>,
    pub intervals: Vec<IntervalRow>,
    pub strategies: Vec<StrategySummary>,
    pub inference: InferenceSummary,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DataSummary {
    pub months: usize,
    pub first: String,
    pub last: String,
    pub first_usable: String,
    pub train_months: usize,
    pub test_months: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct R2Row {
    pub model: String,
    pub label: String,
    pub oos_r2: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SharpeRow {
    pub strategy: String,
    pub sharpe: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IntervalRow {
    pub model: String,
    pub cost: String,
    pub interval: usize,
    pub validation: Vec<ValidationCell>,
    pub holdout_terminal_wealth: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ValidationCell {
    pub interval: usize,
    pub terminal_wealth: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StrategySummary {
    pub key: String,
    pub label: String,
    pub seed: Option<u64>,
    pub oos_r2: Option<f64>,
    pub periods: Vec<PeriodCell>,
    pub costs: Vec<CostCell>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PeriodCell {
    pub label: String,
    pub sharpe: f64,
    pub terminal_wealth: f64,
    pub max_drawdown: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CostCell {
    pub cost: String,
    pub monthly_terminal_wealth: f64,
    pub monthly_total_cost: f64,
    pub selected_interval: Option<usize>,
    pub holdout_terminal_wealth: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InferenceSummary {
    pub n_obs: usize,
    pub r_squared: f64,
    pub terms: Vec<TermRow>,
    pub vif: Vec<VifRow>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TermRow {
    pub name: String,
    pub coefficient: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VifRow {
    pub feature: String,
    /// Formatted value; perfect collinearity renders as `inf`.
    pub value: String,
}

fn period_cells(metrics: &[PeriodMetrics]) -> Vec<PeriodCell> {
    metrics
        .iter()
        .map(|m| PeriodCell {
            label: m.label.clone(),
            sharpe: m.sharpe,
            terminal_wealth: m.terminal_wealth,
            max_drawdown: m.max_drawdown,
        })
        .collect()
}

fn validation_cells(scores: &[IntervalScore]) -> Vec<ValidationCell> {
    scores
        .iter()
        .map(|s| ValidationCell { interval: s.interval, terminal_wealth: s.terminal_wealth })
        .collect()
}

pub fn build_summary(cfg: &ResolvedConfig, results: &RunResults) -> Summary {
    let period_labels: Vec<String> = cfg.periods.iter().map(|p| p.label.clone()).collect();

    let oos_r2 = results
        .strategies
        .iter()
        .filter_map(|s| {
            s.oos_r2.map(|r2| R2Row { model: s.key.clone(), label: s.label.clone(), oos_r2: r2 })
        })
        .collect();

    let sharpe = results
        .strategies
        .iter()
        .map(|s| SharpeRow {
            strategy: s.label.clone(),
            sharpe: s.no_cost_metrics.iter().map(|m| m.sharpe).collect(),
        })
        .collect();

    let mut intervals = Vec::new();
    for s in &results.strategies {
        for run in &s.cost_runs {
            if let Some(sel) = &run.selection {
                intervals.push(IntervalRow {
                    model: s.key.clone(),
                    cost: run.cost.label(),
                    interval: sel.interval,
                    validation: validation_cells(&sel.validation),
                    holdout_terminal_wealth: sel.holdout.terminal_wealth(),
                });
            }
        }
    }

    let strategies = results
        .strategies
        .iter()
        .map(|s| StrategySummary {
            key: s.key.clone(),
            label: s.label.clone(),
            seed: s.spec.as_ref().map(|spec| spec.seed),
            oos_r2: s.oos_r2,
            periods: period_cells(&s.no_cost_metrics),
            costs: s
                .cost_runs
                .iter()
                .map(|run| CostCell {
                    cost: run.cost.label(),
                    monthly_terminal_wealth: run.monthly.terminal_wealth(),
                    monthly_total_cost: run.monthly.total_cost_dollar(),
                    selected_interval: run.selection.as_ref().map(|sel| sel.interval),
                    holdout_terminal_wealth: run
                        .selection
                        .as_ref()
                        .map(|sel| sel.holdout.terminal_wealth()),
                })
                .collect(),
        })
        .collect();

    let feature_names = cfg.dataset.features.clone();
    let mut term_names = vec!["intercept".to_string()];
    term_names.extend(feature_names.iter().cloned());
    let inference = InferenceSummary {
        n_obs: results.inference.n_obs,
        r_squared: results.inference.r_squared,
        terms: term_names
            .iter()
            .enumerate()
            .map(|(i, name)| TermRow {
                name: name.clone(),
                coefficient: results.inference.coefficients[i],
                std_error: results.inference.std_errors[i],
                t_stat: results.inference.t_stats[i],
                p_value: results.inference.p_values[i],
            })
            .collect(),
        vif: feature_names
            .iter()
            .zip(&results.inference.vif)
            .map(|(f, v)| VifRow { feature: f.clone(), value: format!("{v}") })
            .collect(),
    };

    Summary {
        config_digest: results.digest.clone(),
        data: DataSummary {
            months: results.data.months,
            first: results.data.first.clone(),
            last: results.data.last.clone(),
            first_usable: results.data.first_usable.clone(),
            train_months: results.data.train_months,
            test_months: results.data.test_months,
        },
        period_labels,
        oos_r2,
        sharpe,
        intervals,
        strategies,
        inference,
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(&format!("writing {}", path.display()), e))
}

fn oos_r2_csv(summary: &Summary) -> String {
    let mut out = String::from("model,label,oos_r2\n");
    for row in &summary.oos_r2 {
        out.push_str(&format!("{},{},{}\n", row.model, row.label, row.oos_r2));
    }
    out
}

fn sharpe_csv(summary: &Summary) -> String {
    let mut out = String::from("strategy");
    for label in &summary.period_labels {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for row in &summary.sharpe {
        out.push_str(&row.strategy);
        for v in &row.sharpe {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

fn intervals_csv(summary: &Summary) -> String {
    let mut out = String::from("model,cost,interval\n");
    for row in &summary.intervals {
        out.push_str(&format!("{},{},{}\n", row.model, row.cost, row.interval));
    }
    out
}

fn write_strategy_series(dir: &Path, s: &StrategyRun) -> Result<(), CliError> {
    if let Some(fs_) = &s.forecast {
        write(&dir.join(format!("forecast_{}.csv", s.key)), &fs_.to_csv())?;
    }
    write(&dir.join(format!("weights_{}.csv", s.key)), &s.weights.to_csv())?;
    for run in &s.cost_runs {
        let label = run.cost.label();
        write(
            &dir.join(format!("backtest_{}_{}.csv", s.key, label)),
            &run.monthly.to_csv(),
        )?;
        if let Some(sel) = &run.selection {
            write(
                &dir.join(format!("backtest_{}_{}_opt.csv", s.key, label)),
                &sel.holdout.to_csv(),
            )?;
        }
    }
    Ok(())
}

pub fn write_run(
    cfg: &ResolvedConfig,
    loaded: &Loaded,
    results: &RunResults,
    dump: bool,
) -> Result<(), CliError> {
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(&format!("creating {}", dir.display()), e))?;

    let summary = build_summary(cfg, results);
    for s in &results.strategies {
        write_strategy_series(dir, s)?;
    }
    write(&dir.join("oos_r2.csv"), &oos_r2_csv(&summary))?;
    write(&dir.join("sharpe_table.csv"), &sharpe_csv(&summary))?;
    write(&dir.join("intervals.csv"), &intervals_csv(&summary))?;
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Numeric(format!("serializing summary: {e}")))?;
    write(&dir.join("summary.json"), &(json + "\n"))?;
    write(&dir.join("config_resolved.toml"), &cfg.to_toml())?;
    if dump {
        write(&dir.join("aligned.csv"), &loaded.ds.to_csv())?;
    }
    Ok(())
}

pub fn cmd_report(dir: &Path) -> Result<(), CliError> {
    let path = dir.join("summary.json");
    let raw = fs::read_to_string(&path).map_err(|e| {
        CliError::Data(format!("missing artifacts: cannot read {}: {e}", path.display()))
    })?;
    let summary: Summary = serde_json::from_str(&raw)
        .map_err(|e| CliError::Data(format!("corrupt summary {}: {e}", path.display())))?;

    println!("data: {} months ({}..{}), train {} / test {}",
        summary.data.months,
        summary.data.first,
        summary.data.last,
        summary.data.train_months,
        summary.data.test_months,
    );
    println!("config digest: {}", summary.config_digest);

    println!("\nOOS R² (zero-mean)");
    for row in &summary.oos_r2 {
        println!("  {:<48} {:>10.6}", row.label, row.oos_r2);
    }

    println!("\nSharpe ratio by horizon (no transaction cost)");
    print!("  {:<48}", "strategy");
    for label in &summary.period_labels {
        print!(" {label:>11}");
    }
    println!();
    for row in &summary.sharpe {
        print!("  {:<48}", row.strategy);
        for v in &row.sharpe {
            print!(" {v:>11.4}");
        }
        println!();
    }

    if !summary.intervals.is_empty() {
        println!("\nValidation-selected rebalancing intervals");
        println!("  {:<16} {:<12} {:>8} {:>18}", "model", "cost", "interval", "holdout wealth");
        for row in &summary.intervals {
            println!(
                "  {:<16} {:<12} {:>8} {:>18.6}",
                row.model, row.cost, row.interval, row.holdout_terminal_wealth
            );
        }
    }

    println!("\nTraining-period least-squares fit (unrestricted)");
    println!(
        "  n = {}, R² = {:.6}",
        summary.inference.n_obs, summary.inference.r_squared
    );
    println!(
        "  {:<12} {:>12} {:>12} {:>9} {:>10}",
        "term", "coef", "se", "t", "p"
    );
    for t in &summary.inference.terms {
        println!(
            "  {:<12} {:>12.6} {:>12.6} {:>9.3} {:>10.6}",
            t.name, t.coefficient, t.std_error, t.t_stat, t.p_value
        );
    }
    print!("  VIF:");
    for v in &summary.inference.vif {
        print!(" {}={}", v.feature, v.value);
    }
    println!();
    Ok(())
}
