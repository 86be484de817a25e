//! Local surrogate explanations.
//!
//! Each instance is explained by perturbing it with Gaussian noise in
//! standardized feature space, querying the black box on the perturbed
//! rows, and fitting a proximity-weighted ridge regression of the predicted
//! probabilities on the standardized offsets. The surrogate's coefficients
//! are the per-feature contributions (in standardized units); its intercept
//! is the surrogate's value at the explained instance.

use crate::attribution::{mean_of, AttributionVector, ExplanationMethod};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::TrainedModel;
use crate::seeding::derive_seed;
use crate::standardize::Standardizer;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Sampler and surrogate settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    /// Perturbations drawn per explained instance (at least 100).
    pub n_samples: usize,
    /// Width of the exponential proximity kernel in standardized space.
    pub kernel_width: f64,
    /// Ridge penalty on the surrogate coefficients (the intercept is free).
    pub ridge_lambda: f64,
    /// How many features the surrogate may keep; the rest are zeroed after
    /// a first pass ranks coefficients by magnitude.
    pub k_features: usize,
    pub seed: u64,
}

impl LimeConfig {
    /// Defaults for a schema of `n_features` columns: 5000 samples, kernel
    /// width `0.75 * sqrt(n_features)`, lambda 1e-3, no sparsity.
    pub fn defaults(n_features: usize) -> LimeConfig {
        LimeConfig {
            n_samples: 5000,
            kernel_width: 0.75 * (n_features as f64).sqrt(),
            ridge_lambda: 1e-3,
            k_features: n_features,
            seed: 0,
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.n_samples < 100 {
            return Err(Error::Config(format!(
                "n_samples must be at least 100, got {}",
                self.n_samples
            )));
        }
        if self.kernel_width.is_nan() || self.kernel_width <= 0.0 {
            return Err(Error::Config("kernel_width must be positive".into()));
        }
        if self.ridge_lambda < 0.0 {
            return Err(Error::Config("ridge_lambda must be non-negative".into()));
        }
        if self.k_features == 0 || self.k_features > n_features {
            return Err(Error::Config(format!(
                "k_features must lie in [1, {n_features}], got {}",
                self.k_features
            )));
        }
        Ok(())
    }
}

/// One explained instance: the attribution vector plus the weighted R² of
/// the surrogate on its own perturbation sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LimeExplanation {
    pub attribution: AttributionVector,
    pub weighted_r2: f64,
}

/// Mean explanation over a test set.
#[derive(Debug, Clone, PartialEq)]
pub struct LimeSummary {
    pub attribution: AttributionVector,
    pub mean_weighted_r2: f64,
}

/// Draw `n` rows around `x`: standard-normal offsets per feature in
/// standardized space, mapped back to raw space. Deterministic per seed.
pub fn perturb_instance(
    x: &[f64],
    std: &Standardizer,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::Validation("perturbation count must be positive".into()));
    }
    Ok(perturb_offsets(x, std, n, seed)
        .into_iter()
        .map(|(raw, _)| raw)
        .collect())
}

/// Raw-space rows paired with the standardized offsets they came from.
fn perturb_offsets(
    x: &[f64],
    std: &Standardizer,
    n: usize,
    seed: u64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let d = x.len();
    let x_std = std.apply_row(x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let offset: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let z_std: Vec<f64> = x_std.iter().zip(&offset).map(|(a, b)| a + b).collect();
            (std.invert_row(&z_std), offset)
        })
        .collect()
}

/// Proximity of `z` to `x`: `exp(-d^2 / width^2)` with `d` the Euclidean
/// distance in standardized space. Equal rows weigh 1.
pub fn proximity_weight(x: &[f64], z: &[f64], std: &Standardizer, width: f64) -> f64 {
    assert!(width > 0.0, "kernel width must be positive");
    let xs = std.apply_row(x);
    let zs = std.apply_row(z);
    let d2: f64 = xs.iter().zip(&zs).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (width * width)).exp()
}

/// Explain one instance of `model` with a locally weighted linear surrogate.
pub fn explain_instance(
    model: &TrainedModel,
    x: &[f64],
    std: &Standardizer,
    cfg: &LimeConfig,
) -> Result<LimeExplanation> {
    let d = model.n_features();
    cfg.validate(d)?;
    if x.len() != d || std.n_features() != d {
        return Err(Error::Validation(format!(
            "instance/standardizer width must match the model's {d} features"
        )));
    }

    let samples = perturb_offsets(x, std, cfg.n_samples, cfg.seed);
    let width2 = cfg.kernel_width * cfg.kernel_width;
    let mut weights = Vec::with_capacity(samples.len());
    let mut targets = Vec::with_capacity(samples.len());
    for (raw, offset) in &samples {
        let d2: f64 = offset.iter().map(|o| o * o).sum();
        weights.push((-d2 / width2).exp());
        targets.push(model.predict_raw(raw));
    }
    if weights.iter().fold(0.0f64, |a, &w| a.max(w)) < 1e-150 {
        return Err(Error::KernelWidth);
    }

    let offsets: Vec<&[f64]> = samples.iter().map(|(_, o)| o.as_slice()).collect();
    let all: Vec<usize> = (0..d).collect();
    let (mut coef, intercept) =
        fit_weighted_ridge(&offsets, &targets, &weights, &all, cfg.ridge_lambda)?;

    if cfg.k_features < d {
        let mut ranked: Vec<usize> = (0..d).collect();
        ranked.sort_by(|&a, &b| {
            coef[b]
                .abs()
                .partial_cmp(&coef[a].abs())
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut kept: Vec<usize> = ranked[..cfg.k_features].to_vec();
        kept.sort_unstable();
        let (sparse_coef, sparse_intercept) =
            fit_weighted_ridge(&offsets, &targets, &weights, &kept, cfg.ridge_lambda)?;
        coef = sparse_coef;
        return Ok(finish(model, coef, sparse_intercept, &offsets, &targets, &weights));
    }
    Ok(finish(model, coef, intercept, &offsets, &targets, &weights))
}

fn finish(
    model: &TrainedModel,
    coef: Vec<f64>,
    intercept: f64,
    offsets: &[&[f64]],
    targets: &[f64],
    weights: &[f64],
) -> LimeExplanation {
    let weighted_r2 = weighted_r2(&coef, intercept, offsets, targets, weights);
    LimeExplanation {
        attribution: AttributionVector {
            method: ExplanationMethod::Lime,
            model_kind: model.kind(),
            base_value: intercept,
            contributions: coef,
            n_instances_averaged: 1,
        },
        weighted_r2,
    }
}

/// Weighted ridge regression of `targets` on the columns in `kept`, with an
/// unpenalized intercept. Returns a full-width coefficient vector (zeros on
/// dropped columns) and the intercept.
#[allow(clippy::needless_range_loop)]
fn fit_weighted_ridge(
    rows: &[&[f64]],
    targets: &[f64],
    weights: &[f64],
    kept: &[usize],
    lambda: f64,
) -> Result<(Vec<f64>, f64)> {
    let k = kept.len();
    let dim = k + 1; // intercept first
    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];
    for ((row, &y), &w) in rows.iter().zip(targets).zip(weights) {
        a[0][0] += w;
        b[0] += w * y;
        for (p, &j) in kept.iter().enumerate() {
            let xj = w * row[j];
            a[0][p + 1] += xj;
            b[p + 1] += xj * y;
            for (q, &l) in kept.iter().enumerate().skip(p) {
                a[p + 1][q + 1] += xj * row[l];
            }
        }
    }
    for p in 0..dim {
        for q in 0..p {
            a[p][q] = a[q][p];
        }
    }
    for p in 1..dim {
        a[p][p] += lambda;
    }
    let solution = solve(a, b).ok_or(Error::KernelWidth)?;
    let mut coef = vec![0.0; rows.first().map_or(0, |r| r.len())];
    for (p, &j) in kept.iter().enumerate() {
        coef[j] = solution[p + 1];
    }
    Ok((coef, solution[0]))
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-30 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

fn weighted_r2(
    coef: &[f64],
    intercept: f64,
    rows: &[&[f64]],
    targets: &[f64],
    weights: &[f64],
) -> f64 {
    let w_sum: f64 = weights.iter().sum();
    let y_bar: f64 = targets
        .iter()
        .zip(weights)
        .map(|(y, w)| w * y)
        .sum::<f64>()
        / w_sum;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for ((row, &y), &w) in rows.iter().zip(targets).zip(weights) {
        let pred = intercept + coef.iter().zip(*row).map(|(c, x)| c * x).sum::<f64>();
        ss_res += w * (y - pred) * (y - pred);
        ss_tot += w * (y - y_bar) * (y - y_bar);
    }
    // A locally constant black box leaves only rounding noise in ss_tot;
    // the surrogate then fits it perfectly.
    if ss_tot / w_sum <= 1e-18 * (1.0 + y_bar * y_bar) {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// Signed per-feature mean of local explanations over a test set.
///
/// Instance `i` uses the seed derived from `(cfg.seed, i)`, so results are
/// identical whatever the worker count.
pub fn mean_attribution(
    model: &TrainedModel,
    test: &Dataset,
    std: &Standardizer,
    cfg: &LimeConfig,
) -> Result<LimeSummary> {
    if test.is_empty() {
        return Err(Error::Validation("cannot explain an empty test set".into()));
    }
    let explanations: Vec<LimeExplanation> = test
        .rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let instance_cfg = LimeConfig {
                seed: derive_seed(cfg.seed, i as u64),
                ..cfg.clone()
            };
            explain_instance(model, row, std, &instance_cfg)
        })
        .collect::<Result<_>>()?;
    let attribution = mean_of(
        &explanations
            .iter()
            .map(|e| e.attribution.clone())
            .collect::<Vec<_>>(),
    );
    let mean_weighted_r2 =
        explanations.iter().map(|e| e.weighted_r2).sum::<f64>() / explanations.len() as f64;
    Ok(LimeSummary {
        attribution,
        mean_weighted_r2,
    })
}
