//! Shapley-value attributions with an interventional value function.
//!
//! A coalition's value is the model's mean prediction over a background
//! sample after splicing the explained instance's values into the
//! coalition's features. Exact mode enumerates all `2^M` coalitions once
//! (guarded to `M <= 20`); sampling mode averages marginal contributions
//! over uniformly random feature orderings, an unbiased estimator of the
//! same quantity that preserves the efficiency identity permutation by
//! permutation.

use crate::attribution::{mean_of, AttributionVector, ExplanationMethod};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::TrainedModel;
use crate::seeding::derive_seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Exact enumeration is capped at this many features.
pub const EXACT_FEATURE_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShapMode {
    Exact,
    Sampling,
}

/// Value-function and estimator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapConfig {
    pub mode: ShapMode,
    /// Reference rows that absent features are marginalized over.
    pub background: Vec<Vec<f64>>,
    /// Cap applied when the background is drawn from a training set.
    pub max_background: usize,
    /// Feature orderings per instance in sampling mode.
    pub n_permutations: usize,
    pub seed: u64,
}

impl ShapConfig {
    pub fn new(mode: ShapMode, background: Vec<Vec<f64>>, seed: u64) -> ShapConfig {
        ShapConfig {
            mode,
            background,
            max_background: 100,
            n_permutations: 2000,
            seed,
        }
    }

    /// Draw the background as a uniform subsample of the training rows,
    /// capped at `max_background`. Deterministic per seed.
    pub fn from_train(
        mode: ShapMode,
        train: &Dataset,
        max_background: usize,
        n_permutations: usize,
        seed: u64,
    ) -> Result<ShapConfig> {
        if train.is_empty() {
            return Err(Error::EmptyBackground);
        }
        if max_background == 0 {
            return Err(Error::Config("max_background must be positive".into()));
        }
        let background = if train.len() <= max_background {
            train.rows.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::index::sample(&mut rng, train.len(), max_background)
                .into_iter()
                .map(|i| train.rows[i].clone())
                .collect()
        };
        Ok(ShapConfig {
            mode,
            background,
            max_background,
            n_permutations,
            seed,
        })
    }

    fn validate(&self, n_features: usize) -> Result<()> {
        if self.background.is_empty() {
            return Err(Error::EmptyBackground);
        }
        if let Some(row) = self.background.iter().find(|r| r.len() != n_features) {
            return Err(Error::Validation(format!(
                "background row has {} values, model expects {n_features}",
                row.len()
            )));
        }
        if self.mode == ShapMode::Sampling && self.n_permutations == 0 {
            return Err(Error::Config("n_permutations must be positive".into()));
        }
        Ok(())
    }
}

/// Interventional coalition evaluator with memoized subset values.
struct CoalitionEvaluator<'a> {
    predict: &'a dyn Fn(&[f64]) -> f64,
    x: &'a [f64],
    background: &'a [Vec<f64>],
    scratch: Vec<f64>,
    cache: HashMap<u64, f64>,
}

impl<'a> CoalitionEvaluator<'a> {
    fn new(
        predict: &'a dyn Fn(&[f64]) -> f64,
        x: &'a [f64],
        background: &'a [Vec<f64>],
    ) -> CoalitionEvaluator<'a> {
        CoalitionEvaluator {
            predict,
            x,
            background,
            scratch: vec![0.0; x.len()],
            cache: HashMap::new(),
        }
    }

    fn raw_value(&mut self, mask: u64) -> f64 {
        let mut sum = 0.0;
        for b in self.background {
            for (j, (slot, (&xv, &bv))) in self
                .scratch
                .iter_mut()
                .zip(self.x.iter().zip(b))
                .enumerate()
            {
                *slot = if mask & (1 << j) != 0 { xv } else { bv };
            }
            sum += (self.predict)(&self.scratch);
        }
        sum / self.background.len() as f64
    }

    fn value(&mut self, mask: u64) -> f64 {
        if let Some(&v) = self.cache.get(&mask) {
            return v;
        }
        let v = self.raw_value(mask);
        self.cache.insert(mask, v);
        v
    }
}

/// Mean background prediction of the instance with only the masked features
/// taken from `x`. Bit `j` of `subset` selects feature `j` from `x`; unset
/// bits take the background row's value. The empty mask is the mean
/// background prediction, the full mask is the model's prediction for `x`.
pub fn coalition_value(
    model: &TrainedModel,
    x: &[f64],
    subset: u64,
    background: &[Vec<f64>],
) -> Result<f64> {
    let d = model.n_features();
    if background.is_empty() {
        return Err(Error::EmptyBackground);
    }
    if x.len() != d || background.iter().any(|r| r.len() != d) {
        return Err(Error::Validation(format!(
            "instance and background rows must all have {d} values"
        )));
    }
    if d < 64 && subset >> d != 0 {
        return Err(Error::Validation(format!(
            "subset mask {subset:#x} addresses features beyond the model's {d}"
        )));
    }
    let predict = |row: &[f64]| model.predict_raw(row);
    Ok(CoalitionEvaluator::new(&predict, x, background).raw_value(subset))
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= (n - i) as u128;
        den *= (i + 1) as u128;
    }
    (num / den) as f64
}

/// Exact Shapley values over a closure; shared by the public model entry
/// point and in-crate tests that need non-sigmoid value functions.
pub(crate) fn shapley_exact_fn(
    predict: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    background: &[Vec<f64>],
) -> (f64, Vec<f64>) {
    let m = x.len();
    let size = 1usize << m;
    let mut evaluator = CoalitionEvaluator::new(predict, x, background);
    // Every subset evaluated exactly once.
    let mut table = Vec::with_capacity(size);
    for mask in 0..size as u64 {
        table.push(evaluator.raw_value(mask));
    }
    // Weight of a predecessor set of size s: s! (m-s-1)! / m! = 1 / (m C(m-1, s)).
    let weights: Vec<f64> = (0..m)
        .map(|s| 1.0 / (m as f64 * binomial(m - 1, s)))
        .collect();
    let mut phi = vec![0.0; m];
    for (i, phi_i) in phi.iter_mut().enumerate() {
        let bit = 1u64 << i;
        for mask in 0..size as u64 {
            if mask & bit != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            *phi_i += weights[s] * (table[(mask | bit) as usize] - table[mask as usize]);
        }
    }
    (table[0], phi)
}

/// Exact Shapley attribution of one instance by full subset enumeration.
///
/// The base value is the mean background prediction; efficiency holds:
/// `base_value + sum(contributions)` equals the model's prediction for `x`
/// up to floating-point accumulation.
pub fn shapley_exact(
    model: &TrainedModel,
    x: &[f64],
    cfg: &ShapConfig,
) -> Result<AttributionVector> {
    let m = model.n_features();
    if m > EXACT_FEATURE_LIMIT {
        return Err(Error::EnumerationGuard {
            limit: EXACT_FEATURE_LIMIT,
            actual: m,
        });
    }
    cfg.validate(m)?;
    if x.len() != m {
        return Err(Error::Validation(format!(
            "instance has {} values, model expects {m}",
            x.len()
        )));
    }
    let predict = |row: &[f64]| model.predict_raw(row);
    let (base_value, contributions) = shapley_exact_fn(&predict, x, &cfg.background);
    Ok(AttributionVector {
        method: ExplanationMethod::Shap,
        model_kind: model.kind(),
        base_value,
        contributions,
        n_instances_averaged: 1,
    })
}

pub(crate) fn shapley_sampling_fn(
    predict: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    background: &[Vec<f64>],
    n_permutations: usize,
    seed: u64,
) -> (f64, Vec<f64>) {
    let m = x.len();
    let mut evaluator = CoalitionEvaluator::new(predict, x, background);
    let base_value = evaluator.value(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..m).collect();
    let mut phi = vec![0.0; m];
    for _ in 0..n_permutations {
        order.shuffle(&mut rng);
        let mut mask = 0u64;
        let mut prev = base_value;
        for &i in &order {
            mask |= 1 << i;
            let cur = evaluator.value(mask);
            phi[i] += cur - prev;
            prev = cur;
        }
    }
    for p in &mut phi {
        *p /= n_permutations as f64;
    }
    (base_value, phi)
}

/// Monte-Carlo Shapley attribution: marginal contributions accumulated over
/// uniformly random feature orderings. Deterministic per seed; coalition
/// values are memoized, so repeated orderings cost nothing extra.
pub fn shapley_sampling(
    model: &TrainedModel,
    x: &[f64],
    cfg: &ShapConfig,
) -> Result<AttributionVector> {
    let m = model.n_features();
    cfg.validate(m)?;
    if cfg.n_permutations == 0 {
        return Err(Error::Config("n_permutations must be positive".into()));
    }
    if x.len() != m {
        return Err(Error::Validation(format!(
            "instance has {} values, model expects {m}",
            x.len()
        )));
    }
    let predict = |row: &[f64]| model.predict_raw(row);
    let (base_value, contributions) =
        shapley_sampling_fn(&predict, x, &cfg.background, cfg.n_permutations, cfg.seed);
    Ok(AttributionVector {
        method: ExplanationMethod::Shap,
        model_kind: model.kind(),
        base_value,
        contributions,
        n_instances_averaged: 1,
    })
}

/// Per-instance Shapley attributions for every row of a test set, in row
/// order.
///
/// In sampling mode instance `i` uses the seed derived from
/// `(cfg.seed, i)`; exact mode is seed-free. Instances are independent, so
/// results are identical whatever the worker count.
pub fn explain_set(
    model: &TrainedModel,
    test: &Dataset,
    cfg: &ShapConfig,
) -> Result<Vec<AttributionVector>> {
    if test.is_empty() {
        return Err(Error::Validation("cannot explain an empty test set".into()));
    }
    test.rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| match cfg.mode {
            ShapMode::Exact => shapley_exact(model, row, cfg),
            ShapMode::Sampling => {
                let instance_cfg = ShapConfig {
                    seed: derive_seed(cfg.seed, i as u64),
                    ..cfg.clone()
                };
                shapley_sampling(model, row, &instance_cfg)
            }
        })
        .collect()
}

/// Signed per-feature mean of per-instance Shapley values over a test set.
pub fn mean_attribution(
    model: &TrainedModel,
    test: &Dataset,
    cfg: &ShapConfig,
) -> Result<AttributionVector> {
    Ok(mean_of(&explain_set(model, test, cfg)?))
}
