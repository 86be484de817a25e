//! First-order gradient boosting on log-loss.
//!
//! Boosting starts from the log-odds of the training positive rate and
//! repeatedly fits a squared-error regression tree to the current
//! pseudo-residuals `y - p`, so each new tree corrects the errors left by
//! the ensemble so far. This is the first-order form of gradient tree
//! boosting; second-order leaf weights and regularization terms are
//! deliberately out of scope.

use serde::{Deserialize, Serialize};

use super::logistic::{logit, sigmoid};
use super::tree::{self, FeatureSampling, SplitCriterion, Tree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    /// Log-odds of the training positive rate.
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl BoostedModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.score(row))
    }

    /// Raw additive score before the sigmoid.
    pub fn score(&self, row: &[f64]) -> f64 {
        self.base_score
            + self.learning_rate
                * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }
}

pub(crate) fn train(rows: &[Vec<f64>], labels: &[u8], cfg: &super::TrainConfig) -> BoostedModel {
    let n = rows.len();
    let pos_rate = labels.iter().filter(|&&l| l == 1).count() as f64 / n as f64;
    let base_score = logit(pos_rate);
    let indices: Vec<usize> = (0..n).collect();

    let mut scores = vec![base_score; n];
    let mut trees = Vec::with_capacity(cfg.gbt_n_rounds);
    let mut residuals = vec![0.0; n];
    for _ in 0..cfg.gbt_n_rounds {
        for i in 0..n {
            residuals[i] = f64::from(labels[i]) - sigmoid(scores[i]);
        }
        let tree = tree::build(
            rows,
            &residuals,
            &indices,
            SplitCriterion::MeanSquaredError,
            cfg.gbt_max_depth,
            cfg.tree_min_leaf,
            FeatureSampling::All,
        );
        for (score, row) in scores.iter_mut().zip(rows) {
            *score += cfg.gbt_learning_rate * tree.predict(row);
        }
        trees.push(tree);
    }
    BoostedModel {
        base_score,
        learning_rate: cfg.gbt_learning_rate,
        trees,
    }
}
