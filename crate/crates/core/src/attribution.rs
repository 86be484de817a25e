//! Additive per-feature attribution vectors shared by both explainers.

use serde::{Deserialize, Serialize};

use crate::models::ModelKind;

/// Which explainer produced an attribution vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExplanationMethod {
    Lime,
    Shap,
}

impl ExplanationMethod {
    pub fn label(self) -> &'static str {
        match self {
            ExplanationMethod::Lime => "LIME",
            ExplanationMethod::Shap => "SHAP",
        }
    }
}

/// An additive explanation: a base value plus one signed contribution per
/// feature, in schema order. For a single exactly-enumerated Shapley
/// explanation, `base_value + contributions.sum()` equals the model's
/// prediction for the instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    pub method: ExplanationMethod,
    pub model_kind: ModelKind,
    pub base_value: f64,
    pub contributions: Vec<f64>,
    /// How many instances were averaged into this vector (1 for a single
    /// local explanation).
    pub n_instances_averaged: usize,
}

impl AttributionVector {
    pub fn contribution_sum(&self) -> f64 {
        self.contributions.iter().sum()
    }
}

/// Average a set of per-instance attribution vectors feature-wise, keeping
/// signs (positive and negative contributions cancel).
pub(crate) fn mean_of(vectors: &[AttributionVector]) -> AttributionVector {
    assert!(!vectors.is_empty());
    let d = vectors[0].contributions.len();
    let n = vectors.len() as f64;
    let mut contributions = vec![0.0; d];
    let mut base_value = 0.0;
    for v in vectors {
        debug_assert_eq!(v.contributions.len(), d);
        base_value += v.base_value;
        for (acc, c) in contributions.iter_mut().zip(&v.contributions) {
            *acc += c;
        }
    }
    for c in &mut contributions {
        *c /= n;
    }
    AttributionVector {
        method: vectors[0].method,
        model_kind: vectors[0].model_kind,
        base_value: base_value / n,
        contributions,
        n_instances_averaged: vectors.len(),
    }
}
