//! Logistic regression fit by full-batch gradient descent on log-loss.
//!
//! Gradients are clipped to a fixed norm so that unscaled financial ratios
//! (the pipeline trains on raw feature values) cannot blow the weights up;
//! the step direction is unchanged.

use serde::{Deserialize, Serialize};

const MAX_GRAD_NORM: f64 = 10.0;
const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LogisticModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let z = self.intercept
            + self
                .weights
                .iter()
                .zip(row)
                .map(|(w, x)| w * x)
                .sum::<f64>();
        sigmoid(z)
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn logit(p: f64) -> f64 {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    (p / (1.0 - p)).ln()
}

/// Mean log-loss of a weight vector on a labeled set. Probabilities are
/// clamped away from 0 and 1 before taking logs.
pub fn log_loss(weights: &[f64], intercept: f64, rows: &[Vec<f64>], labels: &[u8]) -> f64 {
    let model = LogisticModel {
        weights: weights.to_vec(),
        intercept,
    };
    let n = rows.len() as f64;
    rows.iter()
        .zip(labels)
        .map(|(row, &y)| {
            let p = model.predict(row).clamp(PROB_EPS, 1.0 - PROB_EPS);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / n
}

/// Analytic gradient of the mean log-loss: `((p - y) x, p - y)` averaged
/// over rows. Returned as (weight gradient, intercept gradient).
pub fn log_loss_gradient(
    weights: &[f64],
    intercept: f64,
    rows: &[Vec<f64>],
    labels: &[u8],
) -> (Vec<f64>, f64) {
    let model = LogisticModel {
        weights: weights.to_vec(),
        intercept,
    };
    let n = rows.len() as f64;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (row, &y) in rows.iter().zip(labels) {
        let err = model.predict(row) - f64::from(y);
        for (g, x) in grad_w.iter_mut().zip(row) {
            *g += err * x;
        }
        grad_b += err;
    }
    for g in &mut grad_w {
        *g /= n;
    }
    (grad_w, grad_b / n)
}

pub(crate) fn train(rows: &[Vec<f64>], labels: &[u8], cfg: &super::TrainConfig) -> LogisticModel {
    let d = rows[0].len();
    let mut weights = vec![0.0; d];
    let mut intercept = 0.0;
    for _ in 0..cfg.lr_epochs {
        let (mut grad_w, mut grad_b) = log_loss_gradient(&weights, intercept, rows, labels);
        let norm = (grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt();
        if norm > MAX_GRAD_NORM {
            let scale = MAX_GRAD_NORM / norm;
            for g in &mut grad_w {
                *g *= scale;
            }
            grad_b *= scale;
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= cfg.lr_learning_rate * g;
        }
        intercept -= cfg.lr_learning_rate * grad_b;
    }
    LogisticModel { weights, intercept }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_predict_half() {
        let model = LogisticModel {
            weights: vec![0.0; 16],
            intercept: 0.0,
        };
        assert_eq!(model.predict(&[3.0; 16]), 0.5);
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let n = rng.random_range(5..40);
            let d = rng.random_range(1..6);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
            let weights: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let intercept: f64 = rng.random_range(-1.0..1.0);

            let (grad_w, grad_b) = log_loss_gradient(&weights, intercept, &rows, &labels);

            let h = 1e-5;
            let mut fd = Vec::with_capacity(d + 1);
            for j in 0..d {
                let mut plus = weights.clone();
                let mut minus = weights.clone();
                plus[j] += h;
                minus[j] -= h;
                fd.push(
                    (log_loss(&plus, intercept, &rows, &labels)
                        - log_loss(&minus, intercept, &rows, &labels))
                        / (2.0 * h),
                );
            }
            let fd_b = (log_loss(&weights, intercept + h, &rows, &labels)
                - log_loss(&weights, intercept - h, &rows, &labels))
                / (2.0 * h);

            let analytic: Vec<f64> = grad_w.iter().copied().chain([grad_b]).collect();
            let numeric: Vec<f64> = fd.iter().copied().chain([fd_b]).collect();
            let diff: f64 = analytic
                .iter()
                .zip(&numeric)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let scale: f64 = numeric.iter().map(|g| g * g).sum::<f64>().sqrt().max(1e-8);
            assert!(
                diff / scale < 1e-6,
                "relative gradient error {} too large",
                diff / scale
            );
        }
    }
}
