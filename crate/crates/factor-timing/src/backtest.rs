//! Wealth-path simulation under the three cost regimes, Sharpe ratios over
//! subperiods, and validation-set selection of the rebalancing interval.
//!
//! Conventions: strategy return is the excess return `weight * factor
//! return` (the risk-free leg contributes zero excess). The held weight
//! only changes at rebalance months and stays constant in between. Trades
//! are charged at the rebalance month on the dollar position change
//! `wealth * |new - old|`, including the initial entry from zero; the entry
//! charge is reported separately so it can be excluded downstream.

use crate::exec;
use crate::month::Month;
use crate::series::MonthlySeries;
use crate::timing::WeightSeries;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BacktestError {
    #[error("weights and returns are misaligned: {0}")]
    Misalignment(String),
    #[error("returns have zero volatility; Sharpe is undefined")]
    ZeroVolatility,
    #[error("{got} months is too few (need at least {need})")]
    TooFewMonths { got: usize, need: usize },
    #[error("period `{0}` does not overlap the report")]
    EmptyPeriod(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Transaction-cost regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    None,
    Proportional,
    Quadratic,
}

/// Cost model: `rate * |dollar change|` (proportional) or
/// `rate * (dollar change)^2` (quadratic, i.e. linear market impact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub kind: CostKind,
    #[serde(default)]
    pub rate: f64,
}

impl CostModel {
    pub fn none() -> Self {
        CostModel { kind: CostKind::None, rate: 0.0 }
    }

    pub fn proportional(rate: f64) -> Self {
        CostModel { kind: CostKind::Proportional, rate }
    }

    pub fn quadratic(rate: f64) -> Self {
        CostModel { kind: CostKind::Quadratic, rate }
    }

    pub fn validate(&self) -> Result<(), BacktestError> {
        if self.rate.is_nan() || self.rate < 0.0 {
            return Err(BacktestError::InvalidArgument(format!(
                "cost rate must be >= 0, got {}",
                self.rate
            )));
        }
        Ok(())
    }

    /// Dollar cost of moving `delta_dollars` of position.
    fn charge(&self, delta_dollars: f64) -> f64 {
        match self.kind {
            CostKind::None => 0.0,
            CostKind::Proportional => self.rate * delta_dollars.abs(),
            CostKind::Quadratic => self.rate * delta_dollars * delta_dollars,
        }
    }

    /// Stable label for file names: `none`, `prop20bps`, `quad50bps`.
    pub fn label(&self) -> String {
        let bps = self.rate * 1e4;
        let fmt_bps = if (bps - bps.round()).abs() < 1e-9 {
            format!("{}", bps.round() as i64)
        } else {
            format!("{bps}")
        };
        match self.kind {
            CostKind::None => "none".to_string(),
            CostKind::Proportional => format!("prop{fmt_bps}bps"),
            CostKind::Quadratic => format!("quad{fmt_bps}bps"),
        }
    }
}

/// One simulated strategy path.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub months: Vec<Month>,
    /// The weight the strategy wanted each month.
    pub target_weight: Vec<f64>,
    /// The weight actually held (changes only at rebalance months).
    pub held_weight: Vec<f64>,
    /// `held_weight * factor return`.
    pub gross: Vec<f64>,
    /// Cost as a fraction of the wealth the month started from.
    pub cost_frac: Vec<f64>,
    /// Cost in dollars.
    pub cost_dollar: Vec<f64>,
    /// `gross - cost_frac`.
    pub net: Vec<f64>,
    /// End-of-month wealth; `wealth[t] = wealth[t-1] * (1 + net[t])`.
    pub wealth: Vec<f64>,
    pub rebalance_interval: usize,
    pub initial_wealth: f64,
    /// Dollar cost of the initial entry trade at month 0.
    pub entry_cost_dollar: f64,
    /// True when wealth hit zero and the path was truncated.
    pub bankrupt: bool,
}

impl BacktestReport {
    pub fn terminal_wealth(&self) -> f64 {
        self.wealth.last().copied().unwrap_or(self.initial_wealth)
    }

    pub fn total_cost_dollar(&self) -> f64 {
        self.cost_dollar.iter().sum()
    }

    /// Wealth path with the realized risk-free leg added back
    /// (`1 + net + rf` compounding); for level studies.
    pub fn wealth_with_rf(&self, rf: &MonthlySeries) -> Result<Vec<f64>, BacktestError> {
        let mut wealth = Vec::with_capacity(self.months.len());
        let mut w = self.initial_wealth;
        for (m, net) in self.months.iter().zip(&self.net) {
            let r = rf.value_at(*m).ok_or_else(|| {
                BacktestError::Misalignment(format!("risk-free series missing {m}"))
            })?;
            w *= 1.0 + net + r;
            wealth.push(w);
        }
        Ok(wealth)
    }

    /// CSV dump, header `yyyymm,target_weight,held_weight,gross,cost,net,wealth`
    /// (`cost` is the fraction-of-wealth column).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("yyyymm,target_weight,held_weight,gross,cost,net,wealth\n");
        for i in 0..self.months.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.months[i],
                self.target_weight[i],
                self.held_weight[i],
                self.gross[i],
                self.cost_frac[i],
                self.net[i],
                self.wealth[i],
            ));
        }
        out
    }
}

/// Simulate a weight series against realized factor returns.
///
/// The held weight is set to the target at months `0, interval,
/// 2*interval, ...` and held constant in between. At each rebalance the
/// dollar position change is `wealth * |new - old|`, charged per the cost
/// model and deducted that month. Wealth compounds as
/// `wealth * (1 + held*r - cost/wealth)`; a non-positive wealth truncates
/// the path with the `bankrupt` flag set.
pub fn run_backtest(
    ws: &WeightSeries,
    returns: &MonthlySeries,
    cost: &CostModel,
    interval: usize,
    initial_wealth: f64,
) -> Result<BacktestReport, BacktestError> {
    cost.validate()?;
    if interval == 0 {
        return Err(BacktestError::InvalidArgument("interval must be >= 1".into()));
    }
    if initial_wealth.is_nan() || initial_wealth <= 0.0 {
        return Err(BacktestError::InvalidArgument(format!(
            "initial wealth must be positive, got {initial_wealth}"
        )));
    }
    if ws.is_empty() {
        return Err(BacktestError::TooFewMonths { got: 0, need: 1 });
    }
    if ws.months() != returns.months() {
        return Err(BacktestError::Misalignment(format!(
            "weights cover {}..{} but returns cover {}..{}",
            ws.months().first().map(|m| m.to_string()).unwrap_or_default(),
            ws.months().last().map(|m| m.to_string()).unwrap_or_default(),
            returns.months().first().map(|m| m.to_string()).unwrap_or_default(),
            returns.months().last().map(|m| m.to_string()).unwrap_or_default(),
        )));
    }

    let n = ws.len();
    let mut report = BacktestReport {
        months: ws.months().to_vec(),
        target_weight: ws.weights().to_vec(),
        held_weight: Vec::with_capacity(n),
        gross: Vec::with_capacity(n),
        cost_frac: Vec::with_capacity(n),
        cost_dollar: Vec::with_capacity(n),
        net: Vec::with_capacity(n),
        wealth: Vec::with_capacity(n),
        rebalance_interval: interval,
        initial_wealth,
        entry_cost_dollar: 0.0,
        bankrupt: false,
    };

    let mut wealth = initial_wealth;
    let mut held = 0.0;
    for (i, (&target, &r)) in ws.weights().iter().zip(returns.values()).enumerate() {
        let mut cost_dollar = 0.0;
        if i % interval == 0 {
            let delta_dollars = wealth * (target - held);
            cost_dollar = cost.charge(delta_dollars);
            if i == 0 {
                report.entry_cost_dollar = cost_dollar;
            }
            held = target;
        }
        let cost_frac = cost_dollar / wealth;
        let gross = held * r;
        let net = gross - cost_frac;
        wealth *= 1.0 + net;

        report.held_weight.push(held);
        report.gross.push(gross);
        report.cost_frac.push(cost_frac);
        report.cost_dollar.push(cost_dollar);
        report.net.push(net);
        report.wealth.push(wealth);

        if wealth <= 0.0 {
            report.bankrupt = true;
            report.months.truncate(i + 1);
            report.target_weight.truncate(i + 1);
            break;
        }
    }
    Ok(report)
}

/// Annualized Sharpe ratio of monthly returns: `mean(excess) /
/// stdev(excess) * sqrt(12)`, sample standard deviation. `rf = None` means
/// the inputs are already excess returns.
pub fn sharpe(net_returns: &[f64], rf: Option<&[f64]>) -> Result<f64, BacktestError> {
    let n = net_returns.len();
    if n < 2 {
        return Err(BacktestError::TooFewMonths { got: n, need: 2 });
    }
    let excess: Vec<f64> = match rf {
        Some(rf) => {
            if rf.len() != n {
                return Err(BacktestError::Misalignment(format!(
                    "{} returns vs {} risk-free months",
                    n,
                    rf.len()
                )));
            }
            net_returns.iter().zip(rf).map(|(r, f)| r - f).collect()
        }
        None => net_returns.to_vec(),
    };
    let mean = excess.iter().sum::<f64>() / n as f64;
    let var = excess.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n as f64 - 1.0);
    if var == 0.0 {
        return Err(BacktestError::ZeroVolatility);
    }
    Ok(mean / var.sqrt() * 12.0_f64.sqrt())
}

/// A labelled inclusive month range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSpec {
    pub label: String,
    pub start: Month,
    pub end: Month,
}

impl PeriodSpec {
    pub fn new(label: impl Into<String>, start: Month, end: Month) -> Result<Self, BacktestError> {
        if start > end {
            return Err(BacktestError::InvalidArgument("period start after end".into()));
        }
        Ok(PeriodSpec { label: label.into(), start, end })
    }

    /// Inclusive calendar-year span, January through December.
    pub fn years(start_year: u32, end_year: u32) -> Self {
        PeriodSpec {
            label: format!("{start_year}-{end_year}"),
            start: Month::new(start_year * 100 + 1).expect("valid year"),
            end: Month::new(end_year * 100 + 12).expect("valid year"),
        }
    }
}

/// The four evaluation horizons used throughout: full test period, the
/// pre-crisis years, crisis and recovery, and the late sample. The spans
/// deliberately overlap at their boundary years.
pub fn default_periods() -> Vec<PeriodSpec> {
    vec![
        PeriodSpec::years(2003, 2022),
        PeriodSpec::years(2003, 2007),
        PeriodSpec::years(2007, 2015),
        PeriodSpec::years(2015, 2022),
    ]
}

/// Per-period performance metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodMetrics {
    pub label: String,
    pub sharpe: f64,
    /// Growth of one dollar over the period months.
    pub terminal_wealth: f64,
    /// Largest peak-to-trough fraction of the within-period wealth path.
    pub max_drawdown: f64,
}

/// Metrics for each requested period over the report's net returns. Wealth
/// is re-normalized to 1 at each period start.
pub fn subperiod_metrics(
    report: &BacktestReport,
    periods: &[PeriodSpec],
) -> Result<Vec<PeriodMetrics>, BacktestError> {
    periods
        .iter()
        .map(|p| {
            let nets: Vec<f64> = report
                .months
                .iter()
                .zip(&report.net)
                .filter(|(m, _)| **m >= p.start && **m <= p.end)
                .map(|(_, v)| *v)
                .collect();
            if nets.is_empty() {
                return Err(BacktestError::EmptyPeriod(p.label.clone()));
            }
            let mut wealth = 1.0f64;
            let mut peak = 1.0f64;
            let mut max_drawdown = 0.0f64;
            for r in &nets {
                wealth *= 1.0 + r;
                peak = peak.max(wealth);
                max_drawdown = max_drawdown.max((peak - wealth) / peak);
            }
            Ok(PeriodMetrics {
                label: p.label.clone(),
                sharpe: sharpe(&nets, None)?,
                terminal_wealth: wealth,
                max_drawdown,
            })
        })
        .collect()
}

/// One row of the validation table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalScore {
    pub interval: usize,
    pub terminal_wealth: f64,
}

/// Outcome of the validation-set interval search.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSelection {
    /// Winning interval (highest validation terminal wealth, ties to the
    /// smaller interval).
    pub interval: usize,
    pub validation: Vec<IntervalScore>,
    /// The chosen interval applied to the holdout months (the remainder
    /// after the validation prefix), starting from one dollar.
    pub holdout: BacktestReport,
}

/// Learn the rebalancing interval on the leading `validation_fraction` of
/// the months by net terminal wealth, then apply it to the remainder.
pub fn select_rebalance_interval(
    ws: &WeightSeries,
    returns: &MonthlySeries,
    cost: &CostModel,
    grid: &[usize],
    validation_fraction: f64,
) -> Result<IntervalSelection, BacktestError> {
    if grid.is_empty() {
        return Err(BacktestError::InvalidArgument("interval grid is empty".into()));
    }
    if validation_fraction.is_nan() || validation_fraction <= 0.0 || validation_fraction >= 1.0 {
        return Err(BacktestError::InvalidArgument(format!(
            "validation fraction must be in (0, 1), got {validation_fraction}"
        )));
    }
    let n = ws.len();
    let n_validation = (n as f64 * validation_fraction).floor() as usize;
    let max_interval = *grid.iter().max().unwrap();
    if n_validation < max_interval {
        return Err(BacktestError::TooFewMonths { got: n_validation, need: max_interval });
    }
    if n_validation >= n {
        return Err(BacktestError::TooFewMonths { got: n - n_validation, need: 1 });
    }

    let val_ws = ws.head(n_validation);
    let val_returns = returns.slice(
        val_ws.months()[0],
        *val_ws.months().last().unwrap(),
    );
    let scores: Vec<Result<IntervalScore, BacktestError>> =
        exec::map_indexed(grid.len(), |i| {
            let interval = grid[i];
            run_backtest(&val_ws, &val_returns, cost, interval, 1.0).map(|r| IntervalScore {
                interval,
                terminal_wealth: r.terminal_wealth(),
            })
        });
    let validation = scores.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut best = &validation[0];
    for score in &validation[1..] {
        let better = score.terminal_wealth > best.terminal_wealth
            || (score.terminal_wealth == best.terminal_wealth && score.interval < best.interval);
        if better {
            best = score;
        }
    }

    let holdout_ws = ws.tail(n_validation);
    let holdout_returns = returns.slice(
        holdout_ws.months()[0],
        *holdout_ws.months().last().unwrap(),
    );
    let holdout = run_backtest(&holdout_ws, &holdout_returns, cost, best.interval, 1.0)?;

    Ok(IntervalSelection { interval: best.interval, validation, holdout })
}

/// Ratio of first-month dollar costs between two reports of the same
/// strategy at different initial wealth; under quadratic costs an `N`-times
/// larger account pays `N^2` times more on the first trade.
pub fn cost_scaling_check(small: &BacktestReport, large: &BacktestReport) -> f64 {
    large.entry_cost_dollar / small.entry_cost_dollar
}
