//! The ingest/run computations behind the CLI commands.
//!
//! `run` computes everything in memory first and only then writes the
//! output directory, so a failed run leaves no partial artifacts behind.

use crate::config::ResolvedConfig;
use crate::error::CliError;
use crate::output;
use factor_timing::{
    build_dataset_with, constant_weight_series, expanding_window_forecast, fit_ols, oos_r2,
    ols_inference, parse_factor_csv, parse_predictor_csv, run_backtest, select_rebalance_interval,
    static_forecast, subperiod_metrics, timed_weights, AlignedDataset, BacktestReport, CostKind,
    CostModel, ForecastSeries, IntervalSelection, ModelKind, ModelSpec, MonthlySeries,
    PeriodMetrics, RegressionSummary, WeightSeries,
};
use std::fs;
use std::path::Path;

pub struct Loaded {
    pub ds: AlignedDataset,
    pub realized: MonthlySeries,
    pub test_returns: MonthlySeries,
    pub train_values: Vec<f64>,
}

pub fn load(cfg: &ResolvedConfig) -> Result<Loaded, CliError> {
    let read = |path: &Path| -> Result<String, CliError> {
        fs::read_to_string(path).map_err(|e| CliError::io(&format!("reading {}", path.display()), e))
    };
    let factors = parse_factor_csv(&read(&cfg.data.factor_csv)?, cfg.data.factor_unit)?;
    let predictors = parse_predictor_csv(&read(&cfg.data.predictor_csv)?, cfg.data.predictor_unit)?;
    let ds = build_dataset_with(&factors, &predictors, &cfg.dataset)?;

    // Validates both partitions against the panel before any model work.
    factor_timing::split(&ds, &cfg.split)?;

    let realized = ds.target_series();
    let test_returns = realized.slice(cfg.split.test_start, cfg.split.test_end);
    let train_values = realized
        .slice(cfg.split.train_start, cfg.split.train_end)
        .values()
        .to_vec();
    Ok(Loaded { ds, realized, test_returns, train_values })
}

/// One cost regime applied to one weight series.
pub struct CostRun {
    pub cost: CostModel,
    /// Monthly rebalancing over the whole test period.
    pub monthly: BacktestReport,
    /// Validation-selected interval, absent for the no-cost regime.
    pub selection: Option<IntervalSelection>,
}

/// A strategy (model or the constant benchmark) taken through weights,
/// backtests and metrics.
pub struct StrategyRun {
    pub key: String,
    pub label: String,
    pub spec: Option<ModelSpec>,
    pub forecast: Option<ForecastSeries>,
    pub oos_r2: Option<f64>,
    pub weights: WeightSeries,
    pub no_cost_metrics: Vec<PeriodMetrics>,
    pub cost_runs: Vec<CostRun>,
}

pub struct RunResults {
    pub digest: String,
    pub strategies: Vec<StrategyRun>,
    pub inference: RegressionSummary,
    pub data: DataFacts,
}

pub struct DataFacts {
    pub months: usize,
    pub first: String,
    pub last: String,
    pub first_usable: String,
    pub train_months: usize,
    pub test_months: usize,
}

fn facts(cfg: &ResolvedConfig, loaded: &Loaded) -> DataFacts {
    let ds = &loaded.ds;
    DataFacts {
        months: ds.months().len(),
        first: ds.months().first().map(|m| m.to_string()).unwrap_or_default(),
        last: ds.months().last().map(|m| m.to_string()).unwrap_or_default(),
        first_usable: ds.first_usable_month().to_string(),
        train_months: ds.months_between(cfg.split.train_start, cfg.split.train_end).len(),
        test_months: ds.months_between(cfg.split.test_start, cfg.split.test_end).len(),
    }
}

fn backtests_for(
    cfg: &ResolvedConfig,
    weights: &WeightSeries,
    returns: &MonthlySeries,
) -> Result<(Vec<CostRun>, Vec<PeriodMetrics>), CliError> {
    let mut runs = Vec::with_capacity(cfg.costs.len());
    for cost in &cfg.costs {
        let monthly = run_backtest(weights, returns, cost, 1, 1.0)?;
        let selection = if cost.kind == CostKind::None {
            None
        } else {
            Some(select_rebalance_interval(
                weights,
                returns,
                cost,
                &cfg.grid(),
                cfg.rebalance.validation_fraction,
            )?)
        };
        runs.push(CostRun { cost: *cost, monthly, selection });
    }
    // The no-cost subperiod table is computed whether or not a no-cost
    // regime was requested.
    let no_cost = match runs.iter().find(|r| r.cost.kind == CostKind::None) {
        Some(r) => r.monthly.clone(),
        None => run_backtest(weights, returns, &CostModel::none(), 1, 1.0)?,
    };
    let metrics = subperiod_metrics(&no_cost, &cfg.periods)?;
    Ok((runs, metrics))
}

pub fn compute(cfg: &ResolvedConfig, loaded: &Loaded) -> Result<RunResults, CliError> {
    let mut strategies = Vec::with_capacity(cfg.models.len() + 1);

    for spec in &cfg.models {
        let forecast = match spec.kind {
            ModelKind::Nn3 => static_forecast(&loaded.ds, &cfg.split, spec)?,
            _ => expanding_window_forecast(&loaded.ds, &cfg.split, spec)?,
        };
        let r2 = oos_r2(&forecast)?;
        let weights = timed_weights(&forecast, &loaded.realized, &cfg.timing)?;
        let (cost_runs, no_cost_metrics) = backtests_for(cfg, &weights, &loaded.test_returns)?;
        strategies.push(StrategyRun {
            key: spec.kind.key().to_string(),
            label: spec.kind.label().to_string(),
            spec: Some(spec.clone()),
            forecast: Some(forecast),
            oos_r2: Some(r2),
            weights,
            no_cost_metrics,
            cost_runs,
        });
    }

    // Unconditional benchmark: constant weight from the training sample.
    let benchmark_weights = constant_weight_series(
        loaded.test_returns.months(),
        &loaded.train_values,
        &cfg.timing,
    )?;
    let (cost_runs, no_cost_metrics) =
        backtests_for(cfg, &benchmark_weights, &loaded.test_returns)?;
    strategies.push(StrategyRun {
        key: "constant".to_string(),
        label: "Constant (unconditional optimal)".to_string(),
        spec: None,
        forecast: None,
        oos_r2: None,
        weights: benchmark_weights,
        no_cost_metrics,
        cost_runs,
    });

    // Training-period least-squares inference (unrestricted fit).
    let (x_train, y_train) = loaded.ds.design_between(cfg.split.train_start, cfg.split.train_end);
    let unrestricted = fit_ols(&x_train, &y_train, false)?;
    let inference = ols_inference(&unrestricted, &x_train, &y_train)?;

    Ok(RunResults {
        digest: cfg.digest(),
        strategies,
        inference,
        data: facts(cfg, loaded),
    })
}

pub fn cmd_ingest(cfg: &ResolvedConfig, dump: bool) -> Result<(), CliError> {
    let loaded = load(cfg)?;
    let f = facts(cfg, &loaded);
    println!(
        "aligned panel: {} months ({}..{}), usable for fitting from {}",
        f.months, f.first, f.last, f.first_usable
    );
    println!("train: {} months, test: {} months", f.train_months, f.test_months);
    println!(
        "features: {} -> target `{}`",
        loaded.ds.feature_names().join(", "),
        loaded.ds.target_name()
    );
    if dump {
        fs::create_dir_all(&cfg.out_dir)
            .map_err(|e| CliError::io(&format!("creating {}", cfg.out_dir.display()), e))?;
        let path = cfg.out_dir.join("aligned.csv");
        fs::write(&path, loaded.ds.to_csv())
            .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn cmd_run(cfg: &ResolvedConfig, dump: bool) -> Result<(), CliError> {
    let loaded = load(cfg)?;
    let results = compute(cfg, &loaded)?;
    output::write_run(cfg, &loaded, &results, dump)?;
    println!("run complete: {} strategies -> {}", results.strategies.len(), cfg.out_dir.display());
    for s in &results.strategies {
        if let Some(r2) = s.oos_r2 {
            println!("  {:<44} OOS R² {:+.6}", s.label, r2);
        }
    }
    Ok(())
}
