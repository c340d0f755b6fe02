//! Ridge regression on standardized features with an unpenalized intercept.

use super::ols::LinearFit;
use super::{check_design, FittedModel, ModelError, ModelKind, ModelSpec};
use crate::linalg::{self, DenseMatrix, LinalgError, Standardizer};

pub(super) fn fit_with_spec(
    x: &DenseMatrix,
    y: &[f64],
    spec: ModelSpec,
) -> Result<LinearFit, ModelError> {
    check_design(x, y)?;
    if x.rows() < 2 {
        return Err(ModelError::TooFewRows { got: x.rows(), need: 2 });
    }
    let lambda = spec.ridge_lambda;
    if lambda.is_nan() || lambda < 0.0 {
        return Err(ModelError::InvalidSpec("ridge_lambda must be >= 0".into()));
    }

    let (standardizer, degenerate) = Standardizer::fit(x);
    let mut notes = Vec::new();
    for &j in &degenerate {
        notes.push(format!("feature {j} has zero variance; coefficient pinned to 0"));
    }

    let z = standardizer.transform(x);
    let n = x.rows();
    let p = x.cols();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let y_centered: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    // Solve (Z'Z + lambda I) b = Z'y on the centered problem; columns are
    // centered by standardization so the intercept decouples to mean(y).
    // Zero-variance features are excluded from the system entirely.
    let keep: Vec<usize> = (0..p).filter(|j| !degenerate.contains(j)).collect();
    let mut slopes = vec![0.0; p];
    if !keep.is_empty() {
        let rows: Vec<Vec<f64>> = z
            .iter_rows()
            .map(|r| keep.iter().map(|&j| r[j]).collect())
            .collect();
        let zk = DenseMatrix::from_rows(&rows);
        let mut gram = zk.gram();
        for j in 0..keep.len() {
            gram.set(j, j, gram.get(j, j) + lambda);
        }
        let rhs = zk.tr_mul_vec(&y_centered);
        let beta = linalg::solve(&gram, &rhs).map_err(|e| match e {
            LinalgError::Singular => ModelError::SingularDesign,
            LinalgError::Shape(s) => ModelError::InvalidSpec(s),
        })?;
        for (&j, b) in keep.iter().zip(beta) {
            slopes[j] = b;
        }
    }

    Ok(LinearFit {
        spec,
        intercept: y_mean,
        slopes,
        standardizer,
        notes,
    })
}

/// Ridge with penalty `lambda` on the slopes of standardized features; the
/// intercept is unpenalized. `lambda = 0` reproduces least squares.
pub fn fit_ridge(x: &DenseMatrix, y: &[f64], lambda: f64) -> Result<FittedModel, ModelError> {
    let mut spec = ModelSpec::new(ModelKind::Ridge);
    spec.ridge_lambda = lambda;
    fit_with_spec(x, y, spec).map(FittedModel::Linear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit_ols, Predictor};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(seed: u64, n: usize) -> (DenseMatrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 0.3 - 0.8 * r[0] + 0.5 * r[1] + rng.gen_range(-0.2..0.2))
            .collect();
        (DenseMatrix::from_rows(&rows), y)
    }

    #[test]
    fn zero_penalty_reproduces_ols() {
        let (x, y) = random_instance(11, 25);
        let ridge = fit_ridge(&x, &y, 0.0).unwrap();
        let ols = fit_ols(&x, &y, false).unwrap();
        let (FittedModel::Linear(r), FittedModel::Linear(o)) = (&ridge, &ols) else {
            panic!("expected linear fits");
        };
        for (a, b) in r.coefficients_raw().iter().zip(o.coefficients_raw().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn huge_penalty_shrinks_to_mean() {
        let (x, y) = random_instance(5, 30);
        let model = fit_ridge(&x, &y, 1e12).unwrap();
        let FittedModel::Linear(m) = &model else { panic!() };
        assert!(m.slopes.iter().all(|b| b.abs() < 1e-6));
        let y_mean = y.iter().sum::<f64>() / y.len() as f64;
        assert_abs_diff_eq!(m.intercept, y_mean, epsilon = 1e-12);
    }

    #[test]
    fn single_feature_closed_form() {
        // slope = sum(z*y) / (sum(z^2) + lambda) on the standardized feature.
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![2.0], vec![4.0], vec![7.0]]);
        let y = [0.2, 0.5, 0.3, 0.9];
        let model = fit_ridge(&x, &y, 1.0).unwrap();
        let FittedModel::Linear(m) = &model else { panic!() };

        let mean = 3.5;
        let sd = ((2.5f64.powi(2) + 1.5f64.powi(2) + 0.5f64.powi(2) + 3.5f64.powi(2)) / 3.0).sqrt();
        let z: Vec<f64> = [1.0, 2.0, 4.0, 7.0].iter().map(|v| (v - mean) / sd).collect();
        let y_mean = y.iter().sum::<f64>() / 4.0;
        let num: f64 = z.iter().zip(&y).map(|(zi, yi)| zi * (yi - y_mean)).sum();
        let den: f64 = z.iter().map(|zi| zi * zi).sum::<f64>() + 1.0;
        assert_abs_diff_eq!(m.slopes[0], num / den, epsilon = 1e-12);
    }

    #[test]
    fn zero_variance_feature_dropped_with_note() {
        let x = DenseMatrix::from_rows(&[
            vec![1.0, 5.0],
            vec![2.0, 5.0],
            vec![3.0, 5.0],
            vec![4.0, 5.0],
        ]);
        let y = [1.0, 2.0, 3.0, 4.0];
        let model = fit_ridge(&x, &y, 0.5).unwrap();
        let FittedModel::Linear(m) = &model else { panic!() };
        assert_eq!(m.slopes[1], 0.0);
        assert_eq!(m.notes.len(), 1);
        assert!(model.predict(&[2.5, 5.0]).unwrap().is_finite());
    }

    proptest! {
        // Slope norm is non-increasing in lambda.
        #[test]
        fn shrinkage_is_monotone(seed in 0u64..50) {
            let (x, y) = random_instance(seed, 20);
            let mut last = f64::INFINITY;
            for lambda in [0.0, 0.1, 1.0, 10.0, 100.0, 1e4] {
                let model = fit_ridge(&x, &y, lambda).unwrap();
                let FittedModel::Linear(m) = &model else { unreachable!() };
                let norm: f64 = m.slopes.iter().map(|b| b * b).sum::<f64>().sqrt();
                prop_assert!(norm <= last + 1e-12);
                last = norm;
            }
        }
    }
}
