//! Mean-variance optimal factor weights.
//!
//! The per-month weight is `forecast / (gamma * variance)`, with the
//! variance estimated on an expanding window of realized returns through
//! the *prior* month so the weight is computable at the start of the month
//! it applies to. The unconditional benchmark uses the training-sample
//! mean and variance and never changes.

use crate::harness::ForecastSeries;
use crate::month::Month;
use crate::series::MonthlySeries;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TimingError {
    #[error("{got} observations through {upto} (need at least {need})")]
    TooFewObservations { got: usize, need: usize, upto: Month },
    #[error("return history has zero variance")]
    ZeroVariance,
    #[error("variance must be positive, got {0}")]
    NonpositiveVariance(f64),
    #[error("invalid timing config: {0}")]
    InvalidConfig(String),
}

/// Risk aversion and the optional weight bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    pub gamma: f64,
    /// Symmetric cap on |weight|; `None` leaves weights unconstrained.
    pub weight_cap: Option<f64>,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig { gamma: 2.0, weight_cap: None }
    }
}

impl TimingConfig {
    pub fn validate(&self) -> Result<(), TimingError> {
        if self.gamma.is_nan() || self.gamma <= 0.0 {
            return Err(TimingError::InvalidConfig(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if let Some(cap) = self.weight_cap {
            if cap.is_nan() || cap <= 0.0 {
                return Err(TimingError::InvalidConfig(format!("weight_cap must be > 0, got {cap}")));
            }
        }
        Ok(())
    }
}

/// Per-month factor weights over the test period, with the variance each
/// weight was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSeries {
    months: Vec<Month>,
    weight: Vec<f64>,
    variance_used: Vec<f64>,
}

impl WeightSeries {
    pub fn new(months: Vec<Month>, weight: Vec<f64>, variance_used: Vec<f64>) -> Self {
        assert_eq!(months.len(), weight.len());
        assert_eq!(months.len(), variance_used.len());
        WeightSeries { months, weight, variance_used }
    }

    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    pub fn months(&self) -> &[Month] {
        &self.months
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn variances(&self) -> &[f64] {
        &self.variance_used
    }

    /// Prefix of the first `n` months.
    pub fn head(&self, n: usize) -> WeightSeries {
        WeightSeries {
            months: self.months[..n].to_vec(),
            weight: self.weight[..n].to_vec(),
            variance_used: self.variance_used[..n].to_vec(),
        }
    }

    /// Suffix starting at month index `n`.
    pub fn tail(&self, n: usize) -> WeightSeries {
        WeightSeries {
            months: self.months[n..].to_vec(),
            weight: self.weight[n..].to_vec(),
            variance_used: self.variance_used[n..].to_vec(),
        }
    }

    /// CSV dump, header `yyyymm,weight,variance_used`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("yyyymm,weight,variance_used\n");
        for ((m, w), v) in self.months.iter().zip(&self.weight).zip(&self.variance_used) {
            out.push_str(&format!("{m},{w},{v}\n"));
        }
        out
    }
}

fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

/// Unbiased variance of all realized returns from the start of `returns`
/// through `upto` inclusive.
pub fn expanding_variance(returns: &MonthlySeries, upto: Month) -> Result<f64, TimingError> {
    let window = returns.values_through(upto);
    if window.len() < 2 {
        return Err(TimingError::TooFewObservations { got: window.len(), need: 2, upto });
    }
    let var = sample_variance(window);
    if var == 0.0 {
        return Err(TimingError::ZeroVariance);
    }
    Ok(var)
}

/// `forecast / (gamma * variance)`, clipped to the configured cap.
pub fn optimal_weight(forecast: f64, variance: f64, cfg: &TimingConfig) -> Result<f64, TimingError> {
    cfg.validate()?;
    if variance.is_nan() || variance <= 0.0 {
        return Err(TimingError::NonpositiveVariance(variance));
    }
    let raw = forecast / (cfg.gamma * variance);
    Ok(match cfg.weight_cap {
        Some(cap) => raw.clamp(-cap, cap),
        None => raw,
    })
}

/// Weight for each forecast month, pairing the month-`t` forecast with the
/// expanding variance of realized returns through `t - 1`.
pub fn timed_weights(
    fs: &ForecastSeries,
    realized: &MonthlySeries,
    cfg: &TimingConfig,
) -> Result<WeightSeries, TimingError> {
    cfg.validate()?;
    let mut weights = Vec::with_capacity(fs.len());
    let mut variances = Vec::with_capacity(fs.len());
    for (t, f) in fs.months().iter().zip(fs.forecast()) {
        let var = expanding_variance(realized, t.prev())?;
        weights.push(optimal_weight(*f, var, cfg)?);
        variances.push(var);
    }
    Ok(WeightSeries::new(fs.months().to_vec(), weights, variances))
}

/// The unconditional benchmark weight: training-sample mean over
/// `gamma * variance`.
pub fn constant_weight(train_returns: &[f64], cfg: &TimingConfig) -> Result<f64, TimingError> {
    cfg.validate()?;
    if train_returns.len() < 2 {
        return Err(TimingError::TooFewObservations {
            got: train_returns.len(),
            need: 2,
            upto: Month::new(999912).unwrap(),
        });
    }
    let mean = train_returns.iter().sum::<f64>() / train_returns.len() as f64;
    let var = sample_variance(train_returns);
    if var == 0.0 {
        return Err(TimingError::ZeroVariance);
    }
    Ok(mean / (cfg.gamma * var))
}

/// The benchmark as a [`WeightSeries`] over the given test months.
pub fn constant_weight_series(
    months: &[Month],
    train_returns: &[f64],
    cfg: &TimingConfig,
) -> Result<WeightSeries, TimingError> {
    let w = constant_weight(train_returns, cfg)?;
    let var = sample_variance(train_returns);
    Ok(WeightSeries::new(
        months.to_vec(),
        vec![w; months.len()],
        vec![var; months.len()],
    ))
}
