//! ROC curves and AUC.
//!
//! AUC is computed as the trapezoidal area under the tie-grouped ROC curve,
//! which equals the Mann-Whitney statistic P(score_pos > score_neg) +
//! 0.5 * P(tie) over all positive/negative pairs.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// ROC points from (0,0) to (1,1) plus the area under them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocResult {
    /// (false positive rate, true positive rate) pairs, both non-decreasing.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Compute the ROC curve and AUC of `scores` against binary `labels`.
///
/// Tied scores collapse into a single ROC point, which credits tied
/// positive/negative pairs with 0.5 in the area.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<RocResult> {
    if scores.len() != labels.len() {
        return Err(Error::Validation(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Validation("scores contain NaN".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));

    let mut points = Vec::with_capacity(scores.len() + 1);
    points.push((0.0, 0.0));
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        // Consume the whole tie group at this threshold.
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }

    let mut auc = 0.0;
    for w in points.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        auc += (x1 - x0) * (y0 + y1) / 2.0;
    }
    Ok(RocResult { points, auc })
}
