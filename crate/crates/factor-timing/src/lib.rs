//! A deterministic factor-timing research engine.
//!
//! The pipeline: ingest the monthly factor and predictor files, merge them
//! into an aligned panel with lagged features ([`dataio`]), forecast the
//! investment-factor premium one month ahead with four from-scratch
//! regressors ([`models`], [`harness`]), turn forecasts into mean-variance
//! optimal weights ([`timing`]), and simulate the strategies under
//! transaction-cost regimes with validation-based rebalancing-interval
//! selection ([`backtest`]).
//!
//! Everything is reproducible: fits are deterministic given `(data, spec,
//! seed)`, per-refit and per-tree generators derive from stable hashes, and
//! the parallel feature never changes results — only wall-clock time.

pub mod backtest;
pub mod dataio;
mod exec;
pub mod harness;
pub mod linalg;
pub mod models;
pub mod month;
pub mod series;
pub mod synthetic;
pub mod timing;

pub use backtest::{
    cost_scaling_check, default_periods, run_backtest, select_rebalance_interval, sharpe,
    subperiod_metrics, BacktestError, BacktestReport, CostKind, CostModel, IntervalScore,
    IntervalSelection, PeriodMetrics, PeriodSpec,
};
pub use dataio::{
    build_dataset, build_dataset_with, parse_factor_csv, parse_predictor_csv, split,
    AlignedDataset, DataError, DatasetConfig, MonthlyPanel, SplitSpec, Unit,
};
pub use harness::{
    expanding_window_forecast, oos_r2, static_forecast, ForecastSeries, HarnessError,
};
pub use models::{
    fit_nn3, fit_ols, fit_random_forest, fit_ridge, ols_inference, FittedModel, ForestParams,
    ModelError, ModelKind, ModelSpec, NetParams, Predictor, RegressionSummary,
};
pub use month::Month;
pub use series::MonthlySeries;
pub use timing::{
    constant_weight, constant_weight_series, expanding_variance, optimal_weight, timed_weights,
    TimingConfig, TimingError, WeightSeries,
};
