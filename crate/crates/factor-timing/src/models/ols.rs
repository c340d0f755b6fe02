//! Least squares via the normal equations, plus classical inference.

use super::{check_design, FittedModel, ModelError, ModelKind, ModelSpec};
use crate::linalg::{self, DenseMatrix, LinalgError, Standardizer};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// A linear model in (optionally standardized) feature space.
#[derive(Debug, Clone)]
pub struct LinearFit {
    pub(crate) spec: ModelSpec,
    pub intercept: f64,
    pub slopes: Vec<f64>,
    pub standardizer: Standardizer,
    /// Fit-time diagnostics, e.g. zero-variance features dropped by ridge.
    pub notes: Vec<String>,
}

impl LinearFit {
    /// Linear response before any truncation.
    pub(crate) fn raw_predict(&self, x: &[f64]) -> f64 {
        let z = self.standardizer.transform_row(x);
        self.intercept + self.slopes.iter().zip(&z).map(|(b, v)| b * v).sum::<f64>()
    }

    /// Coefficients folded back to raw feature units (intercept first).
    pub fn coefficients_raw(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.slopes.len() + 1);
        let mut intercept = self.intercept;
        for ((b, m), s) in self
            .slopes
            .iter()
            .zip(&self.standardizer.means)
            .zip(&self.standardizer.stds)
        {
            intercept -= b * m / s;
        }
        out.push(intercept);
        for (b, s) in self.slopes.iter().zip(&self.standardizer.stds) {
            out.push(b / s);
        }
        out
    }
}

/// Prepend an intercept column of ones.
fn with_intercept(x: &DenseMatrix) -> DenseMatrix {
    let rows: Vec<Vec<f64>> = x
        .iter_rows()
        .map(|r| {
            let mut row = Vec::with_capacity(r.len() + 1);
            row.push(1.0);
            row.extend_from_slice(r);
            row
        })
        .collect();
    DenseMatrix::from_rows(&rows)
}

fn solve_normal_equations(design: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>, ModelError> {
    let gram = design.gram();
    let xty = design.tr_mul_vec(y);
    linalg::solve(&gram, &xty).map_err(|e| match e {
        LinalgError::Singular => ModelError::SingularDesign,
        LinalgError::Shape(s) => ModelError::InvalidSpec(s),
    })
}

pub(super) fn fit_with_spec(
    x: &DenseMatrix,
    y: &[f64],
    spec: ModelSpec,
) -> Result<LinearFit, ModelError> {
    check_design(x, y)?;
    let need = x.cols() + 1;
    if x.rows() < need {
        return Err(ModelError::TooFewRows { got: x.rows(), need });
    }
    let design = with_intercept(x);
    let beta = solve_normal_equations(&design, y)?;
    Ok(LinearFit {
        spec,
        intercept: beta[0],
        slopes: beta[1..].to_vec(),
        standardizer: Standardizer::identity(x.cols()),
        notes: Vec::new(),
    })
}

/// Ordinary least squares with an intercept. With `ct_truncate` the fitted
/// model floors its predictions at zero; the coefficients are unrestricted
/// either way.
pub fn fit_ols(x: &DenseMatrix, y: &[f64], ct_truncate: bool) -> Result<FittedModel, ModelError> {
    let mut spec = ModelSpec::new(ModelKind::OlsCt);
    spec.ct_truncate = ct_truncate;
    fit_with_spec(x, y, spec).map(FittedModel::Linear)
}

/// Classical homoskedastic inference for a least-squares fit.
#[derive(Debug, Clone)]
pub struct RegressionSummary {
    /// Intercept first, then one coefficient per feature.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Variance inflation factor per feature; `f64::INFINITY` marks perfect
    /// collinearity.
    pub vif: Vec<f64>,
    pub n_obs: usize,
    pub r_squared: f64,
}

/// Regression summary (coefficients, standard errors, two-sided t-tests,
/// VIF) for an OLS fit. The summary describes the unrestricted linear
/// model, so any prediction floor on the fitted model is ignored here.
pub fn ols_inference(
    model: &FittedModel,
    x: &DenseMatrix,
    y: &[f64],
) -> Result<RegressionSummary, ModelError> {
    let linear = match model {
        FittedModel::Linear(m) if m.spec.kind == ModelKind::OlsCt => m,
        _ => {
            return Err(ModelError::InvalidSpec(
                "inference is defined for least-squares fits only".into(),
            ))
        }
    };
    check_design(x, y)?;
    let n = x.rows();
    let k = x.cols() + 1;
    if n < k + 1 {
        return Err(ModelError::TooFewRows { got: n, need: k + 1 });
    }

    let residuals: Vec<f64> = x
        .iter_rows()
        .zip(y)
        .map(|(row, &yi)| yi - linear.raw_predict(row))
        .collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let dof = (n - k) as f64;
    let sigma2 = rss / dof;

    let design = with_intercept(x);
    let gram_inv = linalg::invert(&design.gram()).map_err(|e| match e {
        LinalgError::Singular => ModelError::SingularDesign,
        LinalgError::Shape(s) => ModelError::InvalidSpec(s),
    })?;

    let mut coefficients = vec![linear.intercept];
    coefficients.extend_from_slice(&linear.slopes);
    let std_errors: Vec<f64> = (0..k).map(|j| (sigma2 * gram_inv.get(j, j)).sqrt()).collect();
    let t_stats: Vec<f64> = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, se)| b / se)
        .collect();
    let t_dist = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| ModelError::InvalidSpec(format!("t distribution: {e}")))?;
    let p_values: Vec<f64> = t_stats
        .iter()
        .map(|t| (2.0 * (1.0 - t_dist.cdf(t.abs()))).clamp(0.0, 1.0))
        .collect();

    let y_mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 0.0 };

    Ok(RegressionSummary {
        coefficients,
        std_errors,
        t_stats,
        p_values,
        residuals,
        vif: variance_inflation(x),
        n_obs: n,
        r_squared,
    })
}

/// VIF_j = 1 / (1 - R²_j) from regressing feature j on the others (with
/// intercept). Perfect collinearity is reported as infinity, not an error.
fn variance_inflation(x: &DenseMatrix) -> Vec<f64> {
    let p = x.cols();
    let n = x.rows();
    if p == 1 {
        // A lone feature has nothing to be inflated by.
        return vec![1.0];
    }
    (0..p)
        .map(|j| {
            let target: Vec<f64> = (0..n).map(|r| x.get(r, j)).collect();
            let mean = target.iter().sum::<f64>() / n as f64;
            let sst: f64 = target.iter().map(|v| (v - mean).powi(2)).sum();
            if sst == 0.0 {
                return f64::INFINITY;
            }
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|r| {
                    (0..p)
                        .filter(|&c| c != j)
                        .map(|c| x.get(r, c))
                        .collect()
                })
                .collect();
            let others = DenseMatrix::from_rows(&rows);
            let design = with_intercept(&others);
            let beta = match solve_normal_equations(&design, &target) {
                Ok(b) => b,
                Err(_) => return f64::INFINITY,
            };
            let sse: f64 = design
                .iter_rows()
                .zip(&target)
                .map(|(row, &t)| {
                    let fitted: f64 = row.iter().zip(&beta).map(|(v, b)| v * b).sum();
                    (t - fitted).powi(2)
                })
                .sum();
            let r2 = 1.0 - sse / sst;
            if r2 >= 1.0 - 1e-12 {
                f64::INFINITY
            } else {
                1.0 / (1.0 - r2)
            }
        })
        .collect()
}
