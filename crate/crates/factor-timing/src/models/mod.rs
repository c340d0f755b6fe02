//! The four candidate premium regressors behind one fit/predict contract.
//!
//! All of them are implemented here from first principles: least squares on
//! the normal equations, ridge on standardized features, a best-first CART
//! random forest, and a small fully-connected network trained by full-batch
//! gradient descent. Every fit is deterministic given `(data, spec, seed)`.

mod forest;
mod nn;
mod ols;
mod ridge;

pub use forest::{fit_random_forest, ForestFit, Tree};
pub use nn::{fit_nn3, Network, NetworkFit};
pub use ols::{fit_ols, ols_inference, LinearFit, RegressionSummary};
pub use ridge::fit_ridge;

use crate::linalg::DenseMatrix;
use serde::{Deserialize, Serialize};

/// Default base seed used when a spec does not pin one.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("design matrix is singular to working precision")]
    SingularDesign,
    #[error("{got} rows is too few (need at least {need})")]
    TooFewRows { got: usize, need: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("feature arity mismatch: model expects {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("training diverged at epoch {epoch} (non-finite loss)")]
    DivergedTraining { epoch: usize },
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
}

/// Model family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Least squares with the prediction floored at zero.
    OlsCt,
    Ridge,
    RandomForest,
    Nn3,
}

impl ModelKind {
    /// Stable identifier used in file names and config keys.
    pub fn key(self) -> &'static str {
        match self {
            ModelKind::OlsCt => "ols_ct",
            ModelKind::Ridge => "ridge",
            ModelKind::RandomForest => "random_forest",
            ModelKind::Nn3 => "nn3",
        }
    }

    /// Human-readable strategy label for tables.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::OlsCt => "Linear Regression - OLS (Campbell-Thompson)",
            ModelKind::Ridge => "Linear Regression - Ridge",
            ModelKind::RandomForest => "Random Forest Regressor",
            ModelKind::Nn3 => "Neural Network - NN3",
        }
    }
}

/// Random-forest hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Cap on leaves per tree; growth is best-first by SSE reduction.
    pub max_leaf_nodes: usize,
    /// Features considered per split.
    pub feature_subsample: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_leaf_nodes: 6,
            feature_subsample: 2,
            bootstrap: true,
        }
    }
}

/// Network hyperparameters. The architecture is pinned to three hidden
/// layers of 32/16/8 ReLU units with a linear head; training is full-batch
/// gradient descent on mean squared error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetParams {
    pub layer_widths: [usize; 3],
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for NetParams {
    fn default() -> Self {
        NetParams {
            layer_widths: [32, 16, 8],
            epochs: 2000,
            learning_rate: 0.01,
        }
    }
}

/// Full specification of one candidate model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub ridge_lambda: f64,
    pub rf: ForestParams,
    pub nn: NetParams,
    pub seed: u64,
    /// Floor predictions at zero (the economic sign restriction); on only
    /// for [`ModelKind::OlsCt`] by construction.
    pub ct_truncate: bool,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            ridge_lambda: 1.0,
            rf: ForestParams::default(),
            nn: NetParams::default(),
            seed: DEFAULT_SEED,
            ct_truncate: kind == ModelKind::OlsCt,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.rf.max_leaf_nodes < 2 {
            return Err(ModelError::InvalidSpec("max_leaf_nodes must be >= 2".into()));
        }
        if self.rf.n_trees == 0 {
            return Err(ModelError::InvalidSpec("n_trees must be >= 1".into()));
        }
        if self.rf.feature_subsample == 0 {
            return Err(ModelError::InvalidSpec("feature_subsample must be >= 1".into()));
        }
        if self.nn.layer_widths != [32, 16, 8] {
            return Err(ModelError::InvalidSpec("layer widths are pinned to [32, 16, 8]".into()));
        }
        if self.ridge_lambda.is_nan() || self.ridge_lambda < 0.0 {
            return Err(ModelError::InvalidSpec("ridge_lambda must be >= 0".into()));
        }
        if self.nn.epochs == 0 || !self.nn.learning_rate.is_finite() || self.nn.learning_rate <= 0.0 {
            return Err(ModelError::InvalidSpec("bad network training parameters".into()));
        }
        Ok(())
    }

    /// Fit this spec on the given design. Dispatches to the family fitters;
    /// the spec travels with the fitted model.
    pub fn fit(&self, x: &DenseMatrix, y: &[f64]) -> Result<FittedModel, ModelError> {
        self.validate()?;
        match self.kind {
            ModelKind::OlsCt => ols::fit_with_spec(x, y, self.clone()).map(FittedModel::Linear),
            ModelKind::Ridge => ridge::fit_with_spec(x, y, self.clone()).map(FittedModel::Linear),
            ModelKind::RandomForest => {
                forest::fit_with_spec(x, y, self.clone()).map(FittedModel::Forest)
            }
            ModelKind::Nn3 => nn::fit_with_spec(x, y, self.clone()).map(FittedModel::Network),
        }
    }
}

/// Anything that can produce a point forecast from a feature vector. The
/// forecasting harness is generic over this, which keeps it testable with
/// stub models.
pub trait Predictor {
    fn predict(&self, x: &[f64]) -> Result<f64, ModelError>;
}

/// A trained model with its spec and standardization state.
#[derive(Debug, Clone)]
pub enum FittedModel {
    Linear(LinearFit),
    Forest(ForestFit),
    Network(NetworkFit),
}

impl FittedModel {
    pub fn spec(&self) -> &ModelSpec {
        match self {
            FittedModel::Linear(m) => &m.spec,
            FittedModel::Forest(m) => &m.spec,
            FittedModel::Network(m) => &m.spec,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            FittedModel::Linear(m) => m.slopes.len(),
            FittedModel::Forest(m) => m.n_features,
            FittedModel::Network(m) => m.standardizer.n_features(),
        }
    }
}

impl Predictor for FittedModel {
    fn predict(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.n_features() {
            return Err(ModelError::ArityMismatch { expected: self.n_features(), got: x.len() });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(ModelError::NonFinite("feature vector"));
        }
        let raw = match self {
            FittedModel::Linear(m) => m.raw_predict(x),
            FittedModel::Forest(m) => m.raw_predict(x),
            FittedModel::Network(m) => m.raw_predict(x),
        };
        if self.spec().ct_truncate {
            Ok(raw.max(0.0))
        } else {
            Ok(raw)
        }
    }
}

/// Stable seed derivation for per-tree and per-refit generators
/// (splitmix64 over the pair). Pinned constants; never change them, or
/// seeded runs stop being reproducible across versions.
pub(crate) fn derive_seed(base: u64, index: u64) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix64(base ^ splitmix64(index))
}

pub(crate) fn check_design(x: &DenseMatrix, y: &[f64]) -> Result<(), ModelError> {
    if x.rows() != y.len() {
        return Err(ModelError::InvalidSpec(format!(
            "design has {} rows but target has {}",
            x.rows(),
            y.len()
        )));
    }
    if !x.has_only_finite() {
        return Err(ModelError::NonFinite("design matrix"));
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(ModelError::NonFinite("target vector"));
    }
    Ok(())
}
