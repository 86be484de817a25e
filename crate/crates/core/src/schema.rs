//! Feature schema for bond-issuer tabular data.
//!
//! The canonical schema has 16 named financial indicators plus a binary
//! default label. Each feature carries the direction in which corporate
//! finance theory expects it to move default risk: only the leverage
//! indicators `Alr`, `Sdtd`, and `Ditc` are positively related to default,
//! the other 13 are negatively related.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Number of features in the canonical bond-issuer schema.
pub const FEATURE_COUNT: usize = 16;

/// Canonical feature order. CSV files, attribution vectors, and report
/// tables all use this order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "PrCb", "Igrb", "Roa", "Roe", "EBII", "Ocebi", "Lr", "Qr", "Rst", "Alr", "Sdtd", "Ditc",
    "Mtd", "Im", "Ebit", "Aou",
];

/// Label column name in the canonical CSV layout.
pub const LABEL_NAME: &str = "default";

/// One feature: its symbol, a human-readable definition, and the expected
/// sign of its effect on default risk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub description: String,
    /// +1 if theory expects larger values to raise default risk, -1 otherwise.
    pub theory_sign: i8,
}

/// Ordered list of features describing the columns of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    features: Vec<FeatureSpec>,
}

impl Schema {
    /// The canonical 16-feature bond-issuer schema.
    pub fn bond_default() -> Schema {
        let descriptions: [(&str, &str, i8); FEATURE_COUNT] = [
            ("PrCb", "Profit rate of core businesses", -1),
            ("Igrb", "Income growth rate of core businesses", -1),
            ("Roa", "Return on assets", -1),
            ("Roe", "Return on equity", -1),
            ("EBII", "EBITDA / total income", -1),
            ("Ocebi", "Operating cash / EBITDA", -1),
            ("Lr", "Liquidity ratio", -1),
            ("Qr", "Quick ratio", -1),
            ("Rst", "Rate of stock turnover", -1),
            ("Alr", "Asset-liability ratio", 1),
            ("Sdtd", "Short-term debt / total debt", 1),
            ("Ditc", "Debt with interest / total investment capital", 1),
            ("Mtd", "Monetary assets / total debt", -1),
            ("Im", "Interest multiples", -1),
            ("Ebit", "EBITDA / total debt with interest", -1),
            ("Aou", "Audit opinion (ordinal 1-4)", -1),
        ];
        Schema {
            features: descriptions
                .iter()
                .map(|&(name, description, theory_sign)| FeatureSpec {
                    name: name.to_string(),
                    description: description.to_string(),
                    theory_sign,
                })
                .collect(),
        }
    }

    /// An unnamed schema of `n` features, for synthetic fixtures and tests.
    /// Theory signs default to -1.
    pub fn anonymous(n: usize) -> Schema {
        Schema {
            features: (0..n)
                .map(|i| FeatureSpec {
                    name: format!("f{i}"),
                    description: String::new(),
                    theory_sign: -1,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Index of the audit-opinion column if this schema carries one.
    pub fn audit_opinion_index(&self) -> Option<usize> {
        self.index_of("Aou")
    }
}

/// External auditor's verdict on the issuer's financial statements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditOpinion {
    UnableToExpress,
    UnqualifiedWithEmphasis,
    Qualified,
    StandardUnqualified,
}

impl AuditOpinion {
    /// Ordinal encoding: 1 reflects the least acceptable statements, 4 the
    /// most acceptable.
    pub fn ordinal(self) -> u8 {
        match self {
            AuditOpinion::UnableToExpress => 1,
            AuditOpinion::UnqualifiedWithEmphasis => 2,
            AuditOpinion::Qualified => 3,
            AuditOpinion::StandardUnqualified => 4,
        }
    }
}

/// Encode an audit-opinion category into its ordinal in {1,2,3,4}.
///
/// Accepts the four category names, case-insensitively, with embedded
/// whitespace normalized.
pub fn encode_audit_opinion(text: &str) -> Result<u8> {
    let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let opinion = match normalized.as_str() {
        "unable to express an opinion" | "unable to express" => AuditOpinion::UnableToExpress,
        "unqualified opinion with emphasis of matter paragraph"
        | "unqualified with emphasis" => AuditOpinion::UnqualifiedWithEmphasis,
        "qualified opinion" | "qualified" => AuditOpinion::Qualified,
        "standard unqualified opinion" | "standard unqualified" => {
            AuditOpinion::StandardUnqualified
        }
        _ => {
            return Err(Error::Validation(format!(
                "unknown audit opinion category: {text:?}"
            )))
        }
    };
    Ok(opinion.ordinal())
}
