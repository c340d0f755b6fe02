//! Random-forest regression built from best-first CART trees.
//!
//! Trees grow by repeatedly splitting whichever current leaf offers the
//! largest SSE reduction, until the leaf cap is reached or no split
//! improves. Split thresholds are midpoints between consecutive distinct
//! feature values; ties in reduction resolve to the lower feature index,
//! then the lower threshold, so fits are order-independent. Each tree draws
//! from its own generator seeded from `(seed, tree_index)`, which makes the
//! forest identical at any thread count.

use super::{check_design, derive_seed, FittedModel, ForestParams, ModelError, ModelKind, ModelSpec};
use crate::exec;
use crate::linalg::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// A fitted regression tree. Descend with `x[feature] <= threshold` going
/// left.
#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    reduction: f64,
    feature: usize,
    threshold: f64,
}

struct GrowNode {
    rows: Vec<usize>,
    value: f64,
    candidate: Option<Candidate>,
    split: Option<(usize, f64, usize, usize)>,
}

fn mean_of(y: &[f64], rows: &[usize]) -> f64 {
    rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64
}

/// Distinct features to consider at one node, ascending.
fn sample_features(p: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if k >= p {
        return (0..p).collect();
    }
    let mut pool: Vec<usize> = (0..p).collect();
    for i in 0..k {
        let j = rng.gen_range(i..p);
        pool.swap(i, j);
    }
    let mut chosen = pool[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Best (feature, threshold) over the allowed features, or `None` when no
/// split strictly reduces SSE. Scored with prefix sums of the sorted
/// targets; reduction ties keep the first candidate in (feature, threshold)
/// order.
fn best_candidate(
    x: &DenseMatrix,
    y: &[f64],
    rows: &[usize],
    features: &[usize],
) -> Option<Candidate> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let total: f64 = rows.iter().map(|&r| y[r]).sum();
    let parent_score = total * total / n as f64;
    let mut best: Option<Candidate> = None;
    let mut order = rows.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
        let mut sum_left = 0.0;
        for i in 1..n {
            sum_left += y[order[i - 1]];
            let prev = x.get(order[i - 1], f);
            let next = x.get(order[i], f);
            if prev == next {
                continue;
            }
            let mut threshold = prev + (next - prev) * 0.5;
            if threshold >= next {
                // Adjacent floats can round the midpoint onto `next`; fall
                // back so the `<= threshold` rule still separates the rows.
                threshold = prev;
            }
            let sum_right = total - sum_left;
            let nl = i as f64;
            let nr = (n - i) as f64;
            let reduction = sum_left * sum_left / nl + sum_right * sum_right / nr - parent_score;
            if reduction > 0.0 && best.is_none_or(|b| reduction > b.reduction) {
                best = Some(Candidate { reduction, feature: f, threshold });
            }
        }
    }
    best
}

fn grow_tree(
    x: &DenseMatrix,
    y: &[f64],
    rows: Vec<usize>,
    params: &ForestParams,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let p = x.cols();
    let mut arena: Vec<GrowNode> = Vec::new();

    let create = |rows: Vec<usize>, arena: &mut Vec<GrowNode>, rng: &mut ChaCha8Rng| -> usize {
        let value = mean_of(y, &rows);
        let candidate = if rows.len() >= 2 {
            let features = sample_features(p, params.feature_subsample, rng);
            best_candidate(x, y, &rows, &features)
        } else {
            None
        };
        arena.push(GrowNode { rows, value, candidate, split: None });
        arena.len() - 1
    };

    create(rows, &mut arena, rng);
    let mut leaves = 1;
    while leaves < params.max_leaf_nodes {
        // Frontier scan: unsplit nodes with a candidate; best reduction
        // wins, earliest-created node on ties.
        let mut chosen: Option<(usize, f64)> = None;
        for (id, node) in arena.iter().enumerate() {
            if node.split.is_some() {
                continue;
            }
            if let Some(c) = node.candidate {
                if chosen.is_none_or(|(_, r)| c.reduction > r) {
                    chosen = Some((id, c.reduction));
                }
            }
        }
        let Some((id, _)) = chosen else { break };
        let c = arena[id].candidate.unwrap();
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = arena[id]
            .rows
            .iter()
            .partition(|&&r| x.get(r, c.feature) <= c.threshold);
        debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());
        let left = create(left_rows, &mut arena, rng);
        let right = create(right_rows, &mut arena, rng);
        arena[id].split = Some((c.feature, c.threshold, left, right));
        arena[id].rows.clear();
        leaves += 1;
    }

    let nodes = arena
        .into_iter()
        .map(|g| match g.split {
            Some((feature, threshold, left, right)) => Node::Split { feature, threshold, left, right },
            None => Node::Leaf { value: g.value },
        })
        .collect();
    Tree { nodes }
}

/// A fitted forest; prediction is the mean of the per-tree predictions.
#[derive(Debug, Clone)]
pub struct ForestFit {
    pub(crate) spec: ModelSpec,
    trees: Vec<Tree>,
    pub(crate) n_features: usize,
    pub y_min: f64,
    pub y_max: f64,
}

impl ForestFit {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub(crate) fn raw_predict(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        sum / self.trees.len() as f64
    }
}

pub(super) fn fit_with_spec(
    x: &DenseMatrix,
    y: &[f64],
    spec: ModelSpec,
) -> Result<ForestFit, ModelError> {
    check_design(x, y)?;
    if x.rows() < 2 {
        return Err(ModelError::TooFewRows { got: x.rows(), need: 2 });
    }
    let n = x.rows();
    let params = spec.rf.clone();
    let seed = spec.seed;
    let trees: Vec<Tree> = exec::map_indexed(params.n_trees, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        let rows: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        grow_tree(x, y, rows, &params, &mut rng)
    });
    let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ForestFit { spec, trees, n_features: x.cols(), y_min, y_max })
}

/// Fit a random forest; fully deterministic given `(data, params, seed)`.
pub fn fit_random_forest(
    x: &DenseMatrix,
    y: &[f64],
    params: &ForestParams,
    seed: u64,
) -> Result<FittedModel, ModelError> {
    let mut spec = ModelSpec::new(ModelKind::RandomForest).with_seed(seed);
    spec.rf = params.clone();
    spec.validate()?;
    fit_with_spec(x, y, spec).map(FittedModel::Forest)
}
