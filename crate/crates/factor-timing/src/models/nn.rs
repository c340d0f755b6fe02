//! Fully-connected network (32/16/8 ReLU hidden units, linear head)
//! trained by full-batch gradient descent on mean squared error.
//!
//! Inputs are standardized with fitting-sample statistics. Initialization
//! is He-style uniform from a seeded generator, and the full-batch sweep
//! accumulates in sample order, so training is bit-reproducible.

use super::{check_design, FittedModel, ModelError, ModelKind, ModelSpec, NetParams};
use crate::linalg::{DenseMatrix, Standardizer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One dense layer, weights stored row-major `(out x in)`.
#[derive(Debug, Clone)]
struct Layer {
    w: Vec<f64>,
    b: Vec<f64>,
    n_in: usize,
    n_out: usize,
}

impl Layer {
    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.n_out {
            let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
            let z: f64 = row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>() + self.b[o];
            out.push(z);
        }
    }
}

/// The bare network: parameter access, loss and analytic gradient are all
/// public so the gradient can be checked against finite differences.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    /// He-style uniform initialization, `U(-sqrt(6/fan_in), +sqrt(6/fan_in))`,
    /// biases zero.
    pub fn init(dims: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let layers = dims
            .windows(2)
            .map(|d| {
                let (n_in, n_out) = (d[0], d[1]);
                let limit = (6.0 / n_in as f64).sqrt();
                let w: Vec<f64> = (0..n_in * n_out).map(|_| rng.gen_range(-limit..limit)).collect();
                Layer { w, b: vec![0.0; n_out], n_in, n_out }
            })
            .collect();
        Network { layers }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers.first().map_or(0, |l| l.n_in)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Flattened parameters, layer by layer, weights then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params(), "parameter count mismatch");
        let mut i = 0;
        for l in &mut self.layers {
            let nw = l.w.len();
            let nb = l.b.len();
            l.w.copy_from_slice(&flat[i..i + nw]);
            i += nw;
            l.b.copy_from_slice(&flat[i..i + nb]);
            i += nb;
        }
    }

    /// Scalar response to one (already standardized) input row.
    pub fn forward(&self, x: &[f64]) -> f64 {
        let last = self.layers.len() - 1;
        let mut a = x.to_vec();
        let mut z = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            layer.forward(&a, &mut z);
            if l < last {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            std::mem::swap(&mut a, &mut z);
        }
        a[0]
    }

    /// Mean squared error over the rows of `x`.
    pub fn loss(&self, x: &DenseMatrix, y: &[f64]) -> f64 {
        let n = x.rows() as f64;
        x.iter_rows()
            .zip(y)
            .map(|(row, &yi)| {
                let e = self.forward(row) - yi;
                e * e
            })
            .sum::<f64>()
            / n
    }

    /// Analytic gradient of [`Network::loss`] in [`Network::params`] layout.
    pub fn grad(&self, x: &DenseMatrix, y: &[f64]) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let n = x.rows() as f64;
        let mut gw: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.w.len()]).collect();
        let mut gb: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.b.len()]).collect();

        for (row, &yi) in x.iter_rows().zip(y) {
            // Forward pass keeping pre-activations and activations.
            let mut activations: Vec<Vec<f64>> = vec![row.to_vec()];
            let mut preacts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
            for (l, layer) in self.layers.iter().enumerate() {
                let mut z = Vec::new();
                layer.forward(activations.last().unwrap(), &mut z);
                preacts.push(z.clone());
                if l < last {
                    for v in &mut z {
                        *v = v.max(0.0);
                    }
                }
                activations.push(z);
            }
            let out = activations.last().unwrap()[0];

            // Backward pass; d(mean loss)/d(out) = 2 (out - y) / n.
            let mut delta = vec![2.0 * (out - yi) / n];
            for l in (0..self.layers.len()).rev() {
                let input = &activations[l];
                for (o, &d) in delta.iter().enumerate() {
                    let base = o * self.layers[l].n_in;
                    for (i, &a) in input.iter().enumerate() {
                        gw[l][base + i] += d * a;
                    }
                    gb[l][o] += d;
                }
                if l == 0 {
                    break;
                }
                let layer = &self.layers[l];
                let mut prev = vec![0.0; layer.n_in];
                for (o, &d) in delta.iter().enumerate() {
                    let wrow = &layer.w[o * layer.n_in..(o + 1) * layer.n_in];
                    for (p, &w) in prev.iter_mut().zip(wrow) {
                        *p += w * d;
                    }
                }
                for (p, &z) in prev.iter_mut().zip(&preacts[l - 1]) {
                    if z <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }

        let mut flat = Vec::with_capacity(self.n_params());
        for (w, b) in gw.into_iter().zip(gb) {
            flat.extend(w);
            flat.extend(b);
        }
        flat
    }

    fn step(&mut self, grad: &[f64], lr: f64) {
        let mut i = 0;
        for l in &mut self.layers {
            for w in &mut l.w {
                *w -= lr * grad[i];
                i += 1;
            }
            for b in &mut l.b {
                *b -= lr * grad[i];
                i += 1;
            }
        }
    }
}

/// A trained network with its input standardizer.
#[derive(Debug, Clone)]
pub struct NetworkFit {
    pub(crate) spec: ModelSpec,
    network: Network,
    pub(crate) standardizer: Standardizer,
    pub initial_loss: f64,
    pub final_loss: f64,
}

impl NetworkFit {
    pub fn network(&self) -> &Network {
        &self.network
    }

    pub(crate) fn raw_predict(&self, x: &[f64]) -> f64 {
        self.network.forward(&self.standardizer.transform_row(x))
    }
}

pub(super) fn fit_with_spec(
    x: &DenseMatrix,
    y: &[f64],
    spec: ModelSpec,
) -> Result<NetworkFit, ModelError> {
    check_design(x, y)?;
    if x.rows() < 2 {
        return Err(ModelError::TooFewRows { got: x.rows(), need: 2 });
    }
    let params = spec.nn.clone();
    let (standardizer, _) = Standardizer::fit(x);
    let z = standardizer.transform(x);

    let dims = [
        x.cols(),
        params.layer_widths[0],
        params.layer_widths[1],
        params.layer_widths[2],
        1,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut network = Network::init(&dims, &mut rng);

    let initial_loss = network.loss(&z, y);
    if !initial_loss.is_finite() {
        return Err(ModelError::DivergedTraining { epoch: 0 });
    }
    for epoch in 0..params.epochs {
        let grad = network.grad(&z, y);
        network.step(&grad, params.learning_rate);
        let loss = network.loss(&z, y);
        if !loss.is_finite() {
            return Err(ModelError::DivergedTraining { epoch: epoch + 1 });
        }
    }
    let final_loss = network.loss(&z, y);

    Ok(NetworkFit { spec, network, standardizer, initial_loss, final_loss })
}

/// Train the 3-hidden-layer network; deterministic given `(data, params,
/// seed)`.
pub fn fit_nn3(
    x: &DenseMatrix,
    y: &[f64],
    params: &NetParams,
    seed: u64,
) -> Result<FittedModel, ModelError> {
    let mut spec = ModelSpec::new(ModelKind::Nn3).with_seed(seed);
    spec.nn = params.clone();
    spec.validate()?;
    fit_with_spec(x, y, spec).map(FittedModel::Network)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Predictor;
    use rand::Rng as _;

    fn toy_data(seed: u64, n: usize) -> (DenseMatrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| (r[0] * 1.3).tanh() - 0.4 * r[1] + 0.2 * r[2].powi(2))
            .collect();
        (DenseMatrix::from_rows(&rows), y)
    }

    /// Max relative disagreement between analytic and central-difference
    /// gradients at the network's current parameters.
    fn gradient_gap(network: &Network, x: &DenseMatrix, y: &[f64]) -> f64 {
        let analytic = network.grad(x, y);
        let theta = network.params();
        let h = 1e-5;
        let mut probe = network.clone();
        let mut worst = 0.0f64;
        for i in 0..theta.len() {
            let mut t = theta.clone();
            t[i] += h;
            probe.set_params(&t);
            let up = probe.loss(x, y);
            t[i] = theta[i] - h;
            probe.set_params(&t);
            let down = probe.loss(x, y);
            let numeric = (up - down) / (2.0 * h);
            let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((analytic[i] - numeric).abs() / denom);
        }
        worst
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let (x, y) = toy_data(31, 10);
        let (st, _) = Standardizer::fit(&x);
        let z = st.transform(&x);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let network = Network::init(&[3, 32, 16, 8, 1], &mut rng);
        assert!(gradient_gap(&network, &z, &y) < 1e-4);
    }

    #[test]
    fn training_descends_on_toy_data() {
        let (x, y) = toy_data(5, 24);
        let params = NetParams { epochs: 300, ..NetParams::default() };
        let model = fit_nn3(&x, &y, &params, 11).unwrap();
        let FittedModel::Network(fit) = &model else { panic!() };
        assert!(fit.final_loss.is_finite());
        assert!(fit.final_loss <= fit.initial_loss);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let (x, y) = toy_data(9, 20);
        let params = NetParams { epochs: 120, ..NetParams::default() };
        let a = fit_nn3(&x, &y, &params, 4).unwrap();
        let b = fit_nn3(&x, &y, &params, 4).unwrap();
        for r in 0..20 {
            assert_eq!(
                a.predict(x.row(r)).unwrap().to_bits(),
                b.predict(x.row(r)).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn absurd_learning_rate_reports_divergence() {
        let (x, y) = toy_data(2, 16);
        let params = NetParams { epochs: 200, learning_rate: 1e12, ..NetParams::default() };
        match fit_nn3(&x, &y, &params, 1) {
            Err(ModelError::DivergedTraining { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn frozen_model_is_a_function() {
        let (x, y) = toy_data(13, 18);
        let params = NetParams { epochs: 50, ..NetParams::default() };
        let model = fit_nn3(&x, &y, &params, 3).unwrap();
        let q = [0.2, -0.4, 0.9];
        assert_eq!(model.predict(&q).unwrap().to_bits(), model.predict(&q).unwrap().to_bits());
        assert!(matches!(
            model.predict(&[1.0]).unwrap_err(),
            ModelError::ArityMismatch { expected: 3, got: 1 }
        ));
    }
}
