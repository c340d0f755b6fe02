//! One-step-ahead out-of-sample forecasting and its score.
//!
//! The expanding-window driver refits every test month on all data observed
//! so far (training period plus elapsed test months) and predicts the next
//! month. The static driver fits once on the training partition; that is
//! the contract used for the network model. Forecasts are scored with the
//! zero-mean out-of-sample R², which benchmarks against a zero forecast
//! rather than the historical mean.

use crate::dataio::{AlignedDataset, SplitSpec};
use crate::exec;
use crate::linalg::DenseMatrix;
use crate::models::{derive_seed, ModelError, ModelKind, ModelSpec, Predictor};
use crate::month::Month;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("model fit failed at month {month}: {source}")]
    AtMonth { month: Month, source: ModelError },
    #[error("static fit failed: {0}")]
    StaticFit(ModelError),
    #[error("{0}")]
    Unsupported(String),
    #[error("no test months inside the split")]
    NoTestMonths,
    #[error("features undefined at month {0}")]
    MissingFeatures(Month),
    #[error("all actuals are zero; zero-mean R² is undefined")]
    ZeroDenominator,
    #[error("forecast series is empty")]
    Empty,
}

/// Aligned per-month forecasts and realized targets over the test period.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSeries {
    months: Vec<Month>,
    forecast: Vec<f64>,
    actual: Vec<f64>,
}

impl ForecastSeries {
    pub fn new(months: Vec<Month>, forecast: Vec<f64>, actual: Vec<f64>) -> Self {
        assert_eq!(months.len(), forecast.len());
        assert_eq!(months.len(), actual.len());
        ForecastSeries { months, forecast, actual }
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

    pub fn forecast(&self) -> &[f64] {
        &self.forecast
    }

    pub fn actual(&self) -> &[f64] {
        &self.actual
    }

    /// CSV dump, header `yyyymm,actual,forecast`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("yyyymm,actual,forecast\n");
        for ((m, a), f) in self.months.iter().zip(&self.actual).zip(&self.forecast) {
            out.push_str(&format!("{m},{a},{f}\n"));
        }
        out
    }
}

fn test_months(ds: &AlignedDataset, split: &SplitSpec) -> Result<Vec<Month>, HarnessError> {
    let months = ds.months_between(split.test_start, split.test_end).to_vec();
    if months.is_empty() {
        return Err(HarnessError::NoTestMonths);
    }
    Ok(months)
}

fn actuals(ds: &AlignedDataset, months: &[Month]) -> Result<Vec<f64>, HarnessError> {
    months
        .iter()
        .map(|m| ds.target_at(*m).ok_or(HarnessError::MissingFeatures(*m)))
        .collect()
}

/// Expanding-window forecasting with a caller-supplied fitter; the public
/// entry point routes model specs through this, and tests drive it with
/// stub models. The fitter sees all usable rows strictly before the month
/// it must predict.
pub fn expanding_window_forecast_with<F, P>(
    ds: &AlignedDataset,
    split: &SplitSpec,
    fit: F,
) -> Result<ForecastSeries, HarnessError>
where
    F: Fn(&DenseMatrix, &[f64], Month) -> Result<P, ModelError> + Sync + Send,
    P: Predictor + Send,
{
    let months = test_months(ds, split)?;
    // Refits are independent given the immutable dataset; collect in month
    // order so results match the sequential schedule bit for bit.
    let results: Vec<Result<f64, HarnessError>> = exec::map_indexed(months.len(), |i| {
        let t = months[i];
        let (x, y) = ds.design_before(t);
        let model = fit(&x, &y, t).map_err(|e| HarnessError::AtMonth { month: t, source: e })?;
        let features = ds.features_at(t).ok_or(HarnessError::MissingFeatures(t))?;
        model
            .predict(&features)
            .map_err(|e| HarnessError::AtMonth { month: t, source: e })
    });
    let forecast = results.into_iter().collect::<Result<Vec<f64>, _>>()?;
    let actual = actuals(ds, &months)?;
    Ok(ForecastSeries::new(months, forecast, actual))
}

/// Refit `spec` each test month on everything observed so far and predict
/// one step ahead. Per-refit seeds derive from `(spec.seed, month)` so the
/// refits are independent yet reproducible.
pub fn expanding_window_forecast(
    ds: &AlignedDataset,
    split: &SplitSpec,
    spec: &ModelSpec,
) -> Result<ForecastSeries, HarnessError> {
    if spec.kind == ModelKind::Nn3 {
        return Err(HarnessError::Unsupported(
            "nn3 runs with static_forecast; expanding refits are not part of its contract".into(),
        ));
    }
    expanding_window_forecast_with(ds, split, |x, y, month| {
        spec.clone()
            .with_seed(derive_seed(spec.seed, u64::from(month.as_u32())))
            .fit(x, y)
    })
}

/// Static fit with a caller-supplied fitter over the training partition.
pub fn static_forecast_with<F, P>(
    ds: &AlignedDataset,
    split: &SplitSpec,
    fit: F,
) -> Result<ForecastSeries, HarnessError>
where
    F: FnOnce(&DenseMatrix, &[f64]) -> Result<P, ModelError>,
    P: Predictor,
{
    let months = test_months(ds, split)?;
    let (x, y) = ds.design_between(split.train_start, split.train_end);
    let model = fit(&x, &y).map_err(HarnessError::StaticFit)?;
    let mut forecast = Vec::with_capacity(months.len());
    for t in &months {
        let features = ds.features_at(*t).ok_or(HarnessError::MissingFeatures(*t))?;
        forecast.push(
            model
                .predict(&features)
                .map_err(|e| HarnessError::AtMonth { month: *t, source: e })?,
        );
    }
    let actual = actuals(ds, &months)?;
    Ok(ForecastSeries::new(months, forecast, actual))
}

/// Fit once on the training partition and predict every test month with the
/// frozen model. Required for the network model; usable for any kind.
pub fn static_forecast(
    ds: &AlignedDataset,
    split: &SplitSpec,
    spec: &ModelSpec,
) -> Result<ForecastSeries, HarnessError> {
    static_forecast_with(ds, split, |x, y| spec.fit(x, y))
}

/// Out-of-sample R² without demeaning: `1 - SSE / sum(actual^2)`. A zero
/// forecast scores exactly 0; a perfect forecast scores 1.
pub fn oos_r2(fs: &ForecastSeries) -> Result<f64, HarnessError> {
    if fs.is_empty() {
        return Err(HarnessError::Empty);
    }
    let denom: f64 = fs.actual.iter().map(|a| a * a).sum();
    if denom == 0.0 {
        return Err(HarnessError::ZeroDenominator);
    }
    let sse: f64 = fs
        .actual
        .iter()
        .zip(&fs.forecast)
        .map(|(a, f)| (a - f) * (a - f))
        .sum();
    Ok(1.0 - sse / denom)
}
