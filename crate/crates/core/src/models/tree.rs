//! Greedy CART regression trees and bagged forests of them.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::DataMatrix;
use crate::models::{split_target, ModelError, OutputKind, Predict, PredictorHandle};

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        prediction: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { prediction } => return *prediction,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Best variance-reducing split over all features for the rows in `ids`.
/// Deterministic: strictly-greater gain comparison keeps the first best in
/// (feature, threshold) order.
fn best_split(
    predictors: &DataMatrix,
    y: &[f64],
    ids: &[usize],
    min_samples_leaf: usize,
) -> Option<SplitChoice> {
    let n = ids.len();
    if n < 2 * min_samples_leaf {
        return None;
    }
    let total_sum: f64 = ids.iter().map(|&i| y[i]).sum();
    let total_sq: f64 = ids.iter().map(|&i| y[i] * y[i]).sum();
    let parent_sse = total_sq - total_sum * total_sum / n as f64;

    let mut best: Option<SplitChoice> = None;
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for feature in 0..predictors.n_cols() {
        order.clear();
        order.extend_from_slice(ids);
        order.sort_by(|&a, &b| {
            predictors
                .value(a, feature)
                .partial_cmp(&predictors.value(b, feature))
                .expect("finite values")
                .then(a.cmp(&b))
        });

        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for pos in 0..n - 1 {
            let yi = y[order[pos]];
            left_sum += yi;
            left_sq += yi * yi;
            let left_n = pos + 1;
            let right_n = n - left_n;
            if left_n < min_samples_leaf || right_n < min_samples_leaf {
                continue;
            }
            let v_here = predictors.value(order[pos], feature);
            let v_next = predictors.value(order[pos + 1], feature);
            if v_here == v_next {
                continue;
            }
            let right_sum = total_sum - left_sum;
            let right_sq = total_sq - left_sq;
            let sse = (left_sq - left_sum * left_sum / left_n as f64)
                + (right_sq - right_sum * right_sum / right_n as f64);
            let gain = parent_sse - sse;
            if gain > best.as_ref().map_or(0.0, |b| b.gain) {
                best = Some(SplitChoice {
                    feature,
                    threshold: 0.5 * (v_here + v_next),
                    gain,
                });
            }
        }
    }
    best
}

fn grow(
    predictors: &DataMatrix,
    y: &[f64],
    ids: &[usize],
    depth_left: usize,
    min_samples_leaf: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mean = ids.iter().map(|&i| y[i]).sum::<f64>() / ids.len() as f64;
    if depth_left == 0 {
        nodes.push(Node::Leaf { prediction: mean });
        return nodes.len() - 1;
    }
    match best_split(predictors, y, ids, min_samples_leaf) {
        None => {
            nodes.push(Node::Leaf { prediction: mean });
            nodes.len() - 1
        }
        Some(split) => {
            let (left_ids, right_ids): (Vec<usize>, Vec<usize>) = ids
                .iter()
                .partition(|&&i| predictors.value(i, split.feature) <= split.threshold);
            let slot = nodes.len();
            nodes.push(Node::Leaf { prediction: mean }); // placeholder
            let left = grow(predictors, y, &left_ids, depth_left - 1, min_samples_leaf, nodes);
            let right = grow(predictors, y, &right_ids, depth_left - 1, min_samples_leaf, nodes);
            nodes[slot] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            slot
        }
    }
}

fn fit_tree_on_ids(
    predictors: &DataMatrix,
    y: &[f64],
    ids: &[usize],
    max_depth: usize,
    min_samples_leaf: usize,
) -> Tree {
    let mut nodes = Vec::new();
    grow(predictors, y, ids, max_depth, min_samples_leaf, &mut nodes);
    Tree { nodes }
}

impl Predict for Tree {
    fn predict_row(&self, row: &[f64]) -> f64 {
        self.predict(row)
    }
}

/// Greedy CART regression tree minimizing within-node variance; leaves
/// predict the node mean.
pub fn fit_tree(
    data: &DataMatrix,
    target: usize,
    max_depth: usize,
    min_samples_leaf: usize,
) -> Result<PredictorHandle, ModelError> {
    if max_depth == 0 {
        return Err(ModelError::InvalidHyperparameter(
            "max_depth must be >= 1".to_string(),
        ));
    }
    if min_samples_leaf == 0 {
        return Err(ModelError::InvalidHyperparameter(
            "min_samples_leaf must be >= 1".to_string(),
        ));
    }
    let (predictors, y) = split_target(data, target)?;
    let ids: Vec<usize> = (0..predictors.n_rows()).collect();
    let tree = fit_tree_on_ids(&predictors, &y, &ids, max_depth, min_samples_leaf);
    Ok(PredictorHandle::from_model(
        Arc::new(tree),
        OutputKind::RegressionScore,
        format!("tree(max_depth={max_depth},min_samples_leaf={min_samples_leaf})"),
        predictors.n_cols(),
    ))
}

struct Forest {
    trees: Vec<Tree>,
}

impl Predict for Forest {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut acc = 0.0;
        for tree in &self.trees {
            acc += tree.predict(row);
        }
        acc / self.trees.len() as f64
    }
}

/// Average of `n_trees` CART trees fit on bags drawn with replacement.
/// `bag_fraction = 1.0` uses the full dataset unsampled for every tree, so a
/// one-tree forest at full fraction equals the single tree; fractions below
/// 1.0 draw `round(fraction × n)` rows with replacement, seeded per tree.
pub fn fit_forest(
    data: &DataMatrix,
    target: usize,
    n_trees: usize,
    bag_fraction: f64,
    seed: u64,
    max_depth: usize,
    min_samples_leaf: usize,
) -> Result<PredictorHandle, ModelError> {
    if n_trees == 0 {
        return Err(ModelError::InvalidHyperparameter(
            "n_trees must be >= 1".to_string(),
        ));
    }
    if !(bag_fraction.is_finite() && 0.0 < bag_fraction && bag_fraction <= 1.0) {
        return Err(ModelError::InvalidHyperparameter(format!(
            "bag_fraction must be in (0, 1], got {bag_fraction}"
        )));
    }
    if max_depth == 0 || min_samples_leaf == 0 {
        return Err(ModelError::InvalidHyperparameter(
            "tree parameters must be >= 1".to_string(),
        ));
    }
    let (predictors, y) = split_target(data, target)?;
    let n = predictors.n_rows();
    let bag_size = ((bag_fraction * n as f64).round() as usize).max(min_samples_leaf * 2).min(n);

    let mut trees = Vec::with_capacity(n_trees);
    for t in 0..n_trees {
        let ids: Vec<usize> = if bag_fraction >= 1.0 {
            (0..n).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64).wrapping_mul(0x9E3779B97F4A7C15).rotate_left(17) ^ seed);
            (0..bag_size)
                .map(|_| rng.gen_range(0..n as u64) as usize)
                .collect()
        };
        trees.push(fit_tree_on_ids(&predictors, &y, &ids, max_depth, min_samples_leaf));
    }
    Ok(PredictorHandle::from_model(
        Arc::new(Forest { trees }),
        OutputKind::RegressionScore,
        format!("forest(n_trees={n_trees},bag_fraction={bag_fraction},seed={seed})"),
        predictors.n_cols(),
    ))
}
