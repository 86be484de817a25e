//! CART trees shared by the decision-tree classifier, the forest, and the
//! boosting stages.
//!
//! Classification trees minimize weighted Gini impurity and store the
//! positive-class rate of the routed rows in each leaf; regression trees
//! minimize summed squared error and store the target mean. Ties between
//! candidate splits resolve to the lowest feature index, then the lowest
//! threshold, by scanning features and thresholds in ascending order and
//! keeping the first strict improvement.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A tree node in the arena; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A binary tree over feature thresholds. Rows with
/// `row[feature] <= threshold` route left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Index of the leaf a row routes to.
    #[cfg(test)]
    pub(crate) fn leaf_of(&self, row: &[f64]) -> usize {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { .. } => return idx,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Feature indices this tree splits on.
    pub fn used_features(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        used.sort_unstable();
        used.dedup();
        used
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SplitCriterion {
    /// Binary-label Gini impurity; leaf value is the positive rate.
    Gini,
    /// Squared-error reduction; leaf value is the target mean.
    MeanSquaredError,
}

/// Which features each node may split on.
pub(crate) enum FeatureSampling<'r> {
    All,
    /// Draw `k` distinct features per node from the given generator.
    Subset { k: usize, rng: &'r mut ChaCha8Rng },
}

struct BuildContext<'a, 'r> {
    rows: &'a [Vec<f64>],
    targets: &'a [f64],
    criterion: SplitCriterion,
    max_depth: usize,
    min_leaf: usize,
    sampling: FeatureSampling<'r>,
    nodes: Vec<Node>,
}

/// Grow a tree over `indices` (duplicates allowed, as bootstrap samples
/// produce them).
pub(crate) fn build(
    rows: &[Vec<f64>],
    targets: &[f64],
    indices: &[usize],
    criterion: SplitCriterion,
    max_depth: usize,
    min_leaf: usize,
    sampling: FeatureSampling<'_>,
) -> Tree {
    debug_assert_eq!(rows.len(), targets.len());
    debug_assert!(!indices.is_empty());
    let mut ctx = BuildContext {
        rows,
        targets,
        criterion,
        max_depth,
        min_leaf,
        sampling,
        nodes: Vec::new(),
    };
    ctx.nodes.push(Node::Leaf { value: 0.0 });
    grow(&mut ctx, 0, indices, 0);
    Tree { nodes: ctx.nodes }
}

/// Train a probability classification tree on binary labels.
pub(crate) fn train_classifier(
    rows: &[Vec<f64>],
    labels: &[u8],
    cfg: &super::TrainConfig,
) -> Tree {
    let targets: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let indices: Vec<usize> = (0..rows.len()).collect();
    build(
        rows,
        &targets,
        &indices,
        SplitCriterion::Gini,
        cfg.tree_max_depth,
        cfg.tree_min_leaf,
        FeatureSampling::All,
    )
}

fn grow(ctx: &mut BuildContext<'_, '_>, node: usize, indices: &[usize], depth: usize) {
    let mean = indices.iter().map(|&i| ctx.targets[i]).sum::<f64>() / indices.len() as f64;

    let can_split = depth < ctx.max_depth && indices.len() >= 2 * ctx.min_leaf;
    let best = if can_split { find_best_split(ctx, indices) } else { None };

    match best {
        None => {
            ctx.nodes[node] = Node::Leaf { value: mean };
        }
        Some((feature, threshold)) => {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                .iter()
                .partition(|&&i| ctx.rows[i][feature] <= threshold);
            let left = ctx.nodes.len();
            ctx.nodes.push(Node::Leaf { value: 0.0 });
            let right = ctx.nodes.len();
            ctx.nodes.push(Node::Leaf { value: 0.0 });
            ctx.nodes[node] = Node::Split {
                feature,
                threshold,
                left,
                right,
            };
            grow(ctx, left, &left_idx, depth + 1);
            grow(ctx, right, &right_idx, depth + 1);
        }
    }
}

/// Weighted child impurity of a prefix/suffix partition, up to constants
/// shared by all candidates at the node.
fn partition_score(
    criterion: SplitCriterion,
    n_left: f64,
    sum_left: f64,
    sumsq_left: f64,
    n_right: f64,
    sum_right: f64,
    sumsq_right: f64,
) -> f64 {
    match criterion {
        SplitCriterion::Gini => {
            // Binary labels: n * gini = 2 * pos * (n - pos) / n.
            2.0 * sum_left * (n_left - sum_left) / n_left
                + 2.0 * sum_right * (n_right - sum_right) / n_right
        }
        SplitCriterion::MeanSquaredError => {
            // Summed squared error around each child's mean.
            (sumsq_left - sum_left * sum_left / n_left)
                + (sumsq_right - sum_right * sum_right / n_right)
        }
    }
}

fn find_best_split(ctx: &mut BuildContext<'_, '_>, indices: &[usize]) -> Option<(usize, f64)> {
    let d = ctx.rows[0].len();
    let features: Vec<usize> = match &mut ctx.sampling {
        FeatureSampling::All => (0..d).collect(),
        FeatureSampling::Subset { k, rng } => sample_features(rng, d, *k),
    };

    let n = indices.len() as f64;
    let total_sum: f64 = indices.iter().map(|&i| ctx.targets[i]).sum();
    let total_sumsq: f64 = indices.iter().map(|&i| ctx.targets[i] * ctx.targets[i]).sum();
    let parent = match ctx.criterion {
        SplitCriterion::Gini => 2.0 * total_sum * (n - total_sum) / n,
        SplitCriterion::MeanSquaredError => total_sumsq - total_sum * total_sum / n,
    };
    if parent <= 1e-12 {
        return None; // already pure
    }

    let mut best: Option<(f64, usize, f64)> = None;
    let mut sorted: Vec<(f64, f64)> = Vec::with_capacity(indices.len());
    for &feature in &features {
        sorted.clear();
        sorted.extend(
            indices
                .iter()
                .map(|&i| (ctx.rows[i][feature], ctx.targets[i])),
        );
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut n_left = 0.0;
        let mut sum_left = 0.0;
        let mut sumsq_left = 0.0;
        for w in 0..sorted.len() - 1 {
            let (value, target) = sorted[w];
            n_left += 1.0;
            sum_left += target;
            sumsq_left += target * target;
            let next_value = sorted[w + 1].0;
            if value == next_value {
                continue;
            }
            let left_count = w + 1;
            let right_count = sorted.len() - left_count;
            if left_count < ctx.min_leaf || right_count < ctx.min_leaf {
                continue;
            }
            let threshold = value + (next_value - value) / 2.0;
            // Guard against midpoints collapsing onto a neighbor.
            if !(threshold >= value && threshold < next_value) {
                continue;
            }
            let score = partition_score(
                ctx.criterion,
                n_left,
                sum_left,
                sumsq_left,
                n - n_left,
                total_sum - sum_left,
                total_sumsq - sumsq_left,
            );
            let improves = match best {
                None => score < parent - 1e-12,
                Some((best_score, _, _)) => score < best_score,
            };
            if improves {
                best = Some((score, feature, threshold));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

fn sample_features(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..d).collect();
    for i in 0..k.min(d) {
        let j = rng.random_range(i..d);
        pool.swap(i, j);
    }
    pool.truncate(k.min(d));
    pool.sort_unstable();
    pool
}
