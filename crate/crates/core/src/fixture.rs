//! Built-in reference fixture: previously published LIME and SHAP
//! mean-attribution tables for the 16-feature bond-default schema, together
//! with the interpretability scores reported alongside them.
//!
//! The tables are embedded exactly as printed (decimal strings), so the
//! fixture check exercises the cosine agreement metric against known
//! vectors without needing the original proprietary data. Entries printed
//! as `0.0000` carry sign 0 and match nothing in sign comparisons.

use crate::attribution::{AttributionVector, ExplanationMethod};
use crate::error::Result;
use crate::metric::{compute_miai, sign_consistency, theory_table, SignTable};
use crate::models::ModelKind;
use crate::schema::FEATURE_NAMES;

/// Column labels of the reference tables, in publication order. The
/// published study used an XGBoost implementation where this crate trains
/// its own gradient-boosted trees; the fixture keeps the published label.
pub const REFERENCE_MODELS: [&str; 4] = ["LR", "DT", "RF", "XGBoost"];

/// Model kinds corresponding to `REFERENCE_MODELS`.
pub const REFERENCE_KINDS: [ModelKind; 4] = [
    ModelKind::LogisticRegression,
    ModelKind::DecisionTree,
    ModelKind::RandomForest,
    ModelKind::GradientBoosting,
];

/// Published LIME mean attributions, rows in canonical feature order,
/// columns per `REFERENCE_MODELS`, values exactly as printed.
pub const LIME_TABLE: [[&str; 4]; 16] = [
    ["0.0006", "-0.0042", "-0.00982", "-0.0638"],
    ["0.0679", "-0.0002", "-0.0059", "-0.0080"],
    ["-0.0111", "-0.0155", "-0.02057", "-0.0402"],
    ["-0.0645", "0.0125", "-0.01548", "-0.0070"],
    ["0.0015", "0.0009", "-0.00645", "0.0014"],
    ["0.0013", "0.0008", "-0.00873", "-0.0012"],
    ["0.0707", "0.0002", "-0.00237", "0.0184"],
    ["0.0445", "-0.0036", "-0.00337", "-0.0007"],
    ["0.0274", "-0.0011", "0.000827", "-0.0235"],
    ["0.0091", "0.0002", "-0.00498", "0.0259"],
    ["0.0043", "-0.0001", "-0.00071", "-0.0654"],
    ["-0.0157", "-0.0004", "-0.01196", "-0.0545"],
    ["0.0023", "-0.0002", "-0.00846", "-0.0118"],
    ["0.0484", "0.0001", "0.005066", "-0.0378"],
    ["0.0763", "0.0002", "-0.00662", "-0.0136"],
    ["-0.0189", "0.0000", "0.0000", "-0.1348"],
];

/// Published SHAP mean attributions, laid out like `LIME_TABLE`.
pub const SHAP_TABLE: [[&str; 4]; 16] = [
    ["0.0010", "0.0035", "0.0006", "-0.0116"],
    ["23.4839", "0.0011", "0.0001", "-0.0016"],
    ["0.0875", "-0.0086", "-0.0025", "-0.0038"],
    ["0.0245", "-0.0015", "0.0017", "-0.0324"],
    ["0.0001", "-0.0005", "0.0004", "0.0021"],
    ["0.0001", "0.0023", "0.0004", "-0.0010"],
    ["-3.7279", "0.0009", "-0.0001", "0.0026"],
    ["-1.1489", "0.0000", "0.0005", "-0.0007"],
    ["-0.2269", "0.0004", "0.0000", "0.0354"],
    ["-0.0235", "0.0000", "0.0005", "0.0003"],
    ["0.1384", "0.0001", "0.0003", "0.0091"],
    ["0.0018", "-0.0002", "-0.0006", "-0.0011"],
    ["0.0123", "0.0003", "-0.0004", "-0.0060"],
    ["-0.1295", "0.0001", "0.0007", "0.0017"],
    ["0.6573", "0.0000", "0.0002", "0.0003"],
    ["-0.0119", "0.0267", "0.0025", "0.0000"],
];

/// Interpretability scores published next to the tables above.
pub const PUBLISHED_MIAI: [&str; 4] = ["0.3459", "0.1708", "0.1430", "-0.0182"];

/// Tolerance for reproducing `PUBLISHED_MIAI` from 4-decimal table entries.
pub const MIAI_TOLERANCE: f64 = 0.02;

/// LIME-vs-SHAP sign agreement counts as stated in the published
/// discussion. These do NOT all follow from the printed tables; see
/// `RECOUNTED_SIGN_MATCHES`.
pub const PUBLISHED_SIGN_MATCHES: [usize; 4] = [9, 8, 3, 3];

/// LIME-vs-SHAP sign agreement counts recounted directly from the embedded
/// tables, with `0.0000` entries treated as sign 0. These recounted values
/// are the check's expectation; the published narrative counts are reported
/// alongside for transparency.
pub const RECOUNTED_SIGN_MATCHES: [usize; 4] = [8, 5, 5, 11];

fn parse_column(table: &[[&str; 4]; 16], column: usize) -> Vec<f64> {
    table
        .iter()
        .map(|row| row[column].parse::<f64>().expect("fixture literals parse"))
        .collect()
}

/// The LIME reference vector for model column `column`.
pub fn lime_vector(column: usize) -> Vec<f64> {
    parse_column(&LIME_TABLE, column)
}

/// The SHAP reference vector for model column `column`.
pub fn shap_vector(column: usize) -> Vec<f64> {
    parse_column(&SHAP_TABLE, column)
}

pub fn published_miai(column: usize) -> f64 {
    PUBLISHED_MIAI[column].parse().expect("fixture literals parse")
}

fn as_attribution(
    method: ExplanationMethod,
    kind: ModelKind,
    contributions: Vec<f64>,
) -> AttributionVector {
    AttributionVector {
        method,
        model_kind: kind,
        base_value: 0.0,
        contributions,
        n_instances_averaged: 1,
    }
}

/// Outcome of the fixture check for one reference model.
#[derive(Debug, Clone)]
pub struct FixtureModelCheck {
    pub model: &'static str,
    pub miai: f64,
    pub published_miai: f64,
    pub miai_ok: bool,
    pub sign_table: SignTable,
    pub lime_vs_shap_matches: usize,
    pub recount_expected: usize,
    pub published_matches: usize,
    pub signs_ok: bool,
}

/// Full fixture-check report.
#[derive(Debug, Clone)]
pub struct FixtureReport {
    pub models: Vec<FixtureModelCheck>,
}

impl FixtureReport {
    pub fn pass(&self) -> bool {
        self.models.iter().all(|m| m.miai_ok && m.signs_ok)
    }
}

/// Recompute the agreement scores and sign tables from the embedded
/// reference vectors and compare them with the published scores.
pub fn check() -> Result<FixtureReport> {
    let theory = theory_table();
    let mut models = Vec::with_capacity(4);
    for (column, (&label, &kind)) in REFERENCE_MODELS
        .iter()
        .zip(REFERENCE_KINDS.iter())
        .enumerate()
    {
        let lime = as_attribution(ExplanationMethod::Lime, kind, lime_vector(column));
        let shap = as_attribution(ExplanationMethod::Shap, kind, shap_vector(column));
        let miai = compute_miai(&lime, &shap)?.miai;
        let published = published_miai(column);
        let sign_table = sign_consistency(&lime, &shap, &theory)?;
        let matches = sign_table.lime_matches_shap;
        models.push(FixtureModelCheck {
            model: label,
            miai,
            published_miai: published,
            miai_ok: (miai - published).abs() <= MIAI_TOLERANCE,
            lime_vs_shap_matches: matches,
            recount_expected: RECOUNTED_SIGN_MATCHES[column],
            published_matches: PUBLISHED_SIGN_MATCHES[column],
            signs_ok: matches == RECOUNTED_SIGN_MATCHES[column],
            sign_table,
        });
    }
    Ok(FixtureReport { models })
}

/// Feature names in the order the fixture tables use.
pub fn feature_order() -> [&'static str; 16] {
    FEATURE_NAMES
}
