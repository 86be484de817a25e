//! The interpretability agreement score and sign-consistency analysis.
//!
//! A model's interpretability is scored as the cosine similarity between
//! its SHAP and LIME mean-attribution vectors: methods that agree on how
//! features drive the prediction point the two vectors the same way. The
//! score is undefined (an error, not zero) when either vector has zero
//! norm, because a vanished attribution vector has no direction to agree
//! or disagree with.

use crate::attribution::{AttributionVector, ExplanationMethod};
use crate::error::{Error, Result};
use crate::models::ModelKind;
use crate::schema::{FeatureSpec, Schema};
use serde::{Deserialize, Serialize};

/// Values this close to zero carry no sign.
pub const SIGN_EPSILON: f64 = 1e-12;

/// Paired attribution vectors and their cosine agreement for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiaiResult {
    pub model_kind: ModelKind,
    pub lime_vector: Vec<f64>,
    pub shap_vector: Vec<f64>,
    pub miai: f64,
}

/// Per-feature sign comparison of LIME, SHAP, and financial theory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignRow {
    pub feature: String,
    pub theory_sign: i8,
    pub lime_sign: i8,
    pub shap_sign: i8,
    pub lime_matches_theory: bool,
    pub shap_matches_theory: bool,
    pub lime_matches_shap: bool,
}

/// Sign table plus aggregate match counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignTable {
    pub rows: Vec<SignRow>,
    pub lime_matches_theory: usize,
    pub shap_matches_theory: usize,
    pub lime_matches_shap: usize,
}

/// Sign of `x` with a dead zone: values within `SIGN_EPSILON` of zero are
/// sign 0 and match nothing.
pub fn attribution_sign(x: f64) -> i8 {
    if x.abs() < SIGN_EPSILON {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

/// Cosine similarity `z.w / (|z| |w|)`, clamped to [-1, 1].
pub fn cosine_similarity(z: &[f64], w: &[f64]) -> Result<f64> {
    if z.len() != w.len() {
        return Err(Error::Validation(format!(
            "vector lengths differ: {} vs {}",
            z.len(),
            w.len()
        )));
    }
    let dot: f64 = z.iter().zip(w).map(|(a, b)| a * b).sum();
    let norm_z = z.iter().map(|a| a * a).sum::<f64>().sqrt();
    let norm_w = w.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm_z == 0.0 {
        return Err(Error::UndefinedAgreement("first".into()));
    }
    if norm_w == 0.0 {
        return Err(Error::UndefinedAgreement("second".into()));
    }
    Ok((dot / (norm_z * norm_w)).clamp(-1.0, 1.0))
}

fn check_pairing(lime: &AttributionVector, shap: &AttributionVector) -> Result<()> {
    if lime.method != ExplanationMethod::Lime || shap.method != ExplanationMethod::Shap {
        return Err(Error::AttributionPairing(format!(
            "expected a (LIME, SHAP) pair, got ({}, {})",
            lime.method.label(),
            shap.method.label()
        )));
    }
    if lime.model_kind != shap.model_kind {
        return Err(Error::AttributionPairing(format!(
            "vectors explain different models: {} vs {}",
            lime.model_kind, shap.model_kind
        )));
    }
    if lime.contributions.len() != shap.contributions.len() {
        return Err(Error::AttributionPairing(format!(
            "vectors cover different schemas: {} vs {} features",
            lime.contributions.len(),
            shap.contributions.len()
        )));
    }
    Ok(())
}

/// Score the agreement between a model's LIME and SHAP mean attributions.
pub fn compute_miai(lime: &AttributionVector, shap: &AttributionVector) -> Result<MiaiResult> {
    check_pairing(lime, shap)?;
    let miai = cosine_similarity(&shap.contributions, &lime.contributions)?;
    Ok(MiaiResult {
        model_kind: lime.model_kind,
        lime_vector: lime.contributions.clone(),
        shap_vector: shap.contributions.clone(),
        miai,
    })
}

/// Compare attribution signs between the two methods and against the
/// expected theory directions.
pub fn sign_consistency(
    lime: &AttributionVector,
    shap: &AttributionVector,
    theory: &[FeatureSpec],
) -> Result<SignTable> {
    check_pairing(lime, shap)?;
    if theory.len() != lime.contributions.len() {
        return Err(Error::AttributionPairing(format!(
            "theory table covers {} features, vectors cover {}",
            theory.len(),
            lime.contributions.len()
        )));
    }
    let rows: Vec<SignRow> = theory
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let lime_sign = attribution_sign(lime.contributions[i]);
            let shap_sign = attribution_sign(shap.contributions[i]);
            SignRow {
                feature: spec.name.clone(),
                theory_sign: spec.theory_sign,
                lime_sign,
                shap_sign,
                lime_matches_theory: lime_sign != 0 && lime_sign == spec.theory_sign,
                shap_matches_theory: shap_sign != 0 && shap_sign == spec.theory_sign,
                lime_matches_shap: lime_sign != 0 && lime_sign == shap_sign,
            }
        })
        .collect();
    let count = |f: fn(&SignRow) -> bool| rows.iter().filter(|r| f(r)).count();
    Ok(SignTable {
        lime_matches_theory: count(|r| r.lime_matches_theory),
        shap_matches_theory: count(|r| r.shap_matches_theory),
        lime_matches_shap: count(|r| r.lime_matches_shap),
        rows,
    })
}

/// The canonical expected-direction table: +1 for the three leverage
/// indicators Alr, Sdtd, Ditc, -1 for the rest.
pub fn theory_table() -> Vec<FeatureSpec> {
    Schema::bond_default().features().to_vec()
}
