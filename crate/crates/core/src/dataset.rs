//! Labeled tabular data: CSV ingestion, train/test splitting, and a
//! synthetic bond-issuer generator.
//!
//! The on-disk format is a UTF-8 CSV with LF line endings and the exact
//! header `default,PrCb,...,Aou` in canonical feature order. `default` is
//! the binary label (1 = default), `Aou` is the ordinal audit opinion in
//! {1,2,3,4}.

use crate::error::{Error, Result};
use crate::schema::{Schema, FEATURE_NAMES, LABEL_NAME};
use crate::seeding::derive_seed;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// A labeled feature matrix with a named schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: Schema,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl Dataset {
    /// Construct a dataset, validating row widths, finiteness, label values,
    /// and the audit-opinion domain when the schema carries an `Aou` column.
    pub fn new(schema: Schema, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Dataset> {
        if rows.len() != labels.len() {
            return Err(Error::Validation(format!(
                "row count {} does not match label count {}",
                rows.len(),
                labels.len()
            )));
        }
        let d = schema.len();
        let aou = schema.audit_opinion_index();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Validation(format!(
                    "row {} has {} values, schema expects {}",
                    i + 1,
                    row.len(),
                    d
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "row {} column {} is not finite",
                    i + 1,
                    schema.features()[j].name
                )));
            }
            if let Some(k) = aou {
                let v = row[k];
                if !(v == 1.0 || v == 2.0 || v == 3.0 || v == 4.0) {
                    return Err(Error::Validation(format!(
                        "Aou outside {{1,2,3,4}} on row {}: {}",
                        i + 1,
                        v
                    )));
                }
            }
        }
        if let Some(i) = labels.iter().position(|&l| l > 1) {
            return Err(Error::Validation(format!(
                "label on row {} is not in {{0,1}}",
                i + 1
            )));
        }
        Ok(Dataset {
            schema,
            rows,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn n_defaults(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.n_defaults();
        p > 0 && p < self.len()
    }

    /// Canonical CSV serialization (header + rows, LF endings). Feature
    /// values print in shortest round-trip form, so `load_csv` recovers the
    /// exact in-memory values.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(LABEL_NAME);
        for f in self.schema.features() {
            out.push(',');
            out.push_str(&f.name);
        }
        out.push('\n');
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let _ = write!(out, "{label}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Write the canonical CSV form to `path`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// FNV-1a hash of the canonical CSV form, as a hex string. Used to tag
    /// reports with the exact data they were computed from.
    pub fn content_hash(&self) -> String {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in self.to_csv_string().bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{hash:016x}")
    }

    fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Load a dataset in the canonical CSV layout.
///
/// The header must match the canonical column order exactly; a missing
/// column is reported by name, a malformed cell by row and column.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_csv(&text)
}

pub(crate) fn parse_csv(text: &str) -> Result<Dataset> {
    let schema = Schema::bond_default();
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Schema("file is empty, expected a header row".into()))?;
    let actual: Vec<&str> = header.split(',').map(str::trim).collect();
    let expected: Vec<&str> = std::iter::once(LABEL_NAME)
        .chain(FEATURE_NAMES.iter().copied())
        .collect();
    for name in &expected {
        if !actual.contains(name) {
            return Err(Error::Schema(name.to_string()));
        }
    }
    if actual != expected {
        return Err(Error::Schema(format!(
            "header columns must appear in canonical order {}; got {}",
            expected.join(","),
            header
        )));
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines.enumerate() {
        let row_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != expected.len() {
            return Err(Error::Parse {
                row: row_no,
                column: String::new(),
                message: format!("expected {} cells, found {}", expected.len(), cells.len()),
            });
        }
        let label_value: f64 = cells[0].parse().map_err(|_| Error::Parse {
            row: row_no,
            column: LABEL_NAME.into(),
            message: format!("not a number: {:?}", cells[0]),
        })?;
        if label_value != 0.0 && label_value != 1.0 {
            return Err(Error::Validation(format!(
                "label outside {{0,1}} on row {row_no}: {label_value}"
            )));
        }
        let mut row = Vec::with_capacity(FEATURE_NAMES.len());
        for (j, cell) in cells[1..].iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: row_no,
                column: FEATURE_NAMES[j].into(),
                message: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Validation(format!(
                    "non-finite value in column {} on row {row_no}",
                    FEATURE_NAMES[j]
                )));
            }
            row.push(v);
        }
        rows.push(row);
        labels.push(label_value as u8);
    }
    Dataset::new(schema, rows, labels)
}

/// A train/test partition of one dataset.
#[derive(Debug, Clone)]
pub struct SplitResult {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
    /// Non-fatal conditions observed while splitting, e.g. a single-class
    /// input where stratification would be meaningless.
    pub warnings: Vec<String>,
}

/// Shuffle-and-slice split: a seeded uniform permutation, then the first
/// `round(ratio * n)` rows become the training set.
pub fn split_train_test(data: &Dataset, ratio: f64, seed: u64) -> Result<SplitResult> {
    if data.len() < 2 {
        return Err(Error::Validation(format!(
            "need at least 2 rows to split, got {}",
            data.len()
        )));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!(
            "split ratio must lie in (0,1), got {ratio}"
        )));
    }
    let mut warnings = Vec::new();
    if !data.has_both_classes() {
        warnings.push(
            "input labels contain a single class; the split cannot be stratified and \
             downstream AUC/training will be degenerate"
                .to_string(),
        );
    }
    let n = data.len();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let n_train = (ratio * n as f64).round() as usize;
    let train = data.select(&indices[..n_train]);
    let test = data.select(&indices[n_train..]);
    if data.has_both_classes() {
        if !train.has_both_classes() {
            warnings.push("training split ended up single-class".to_string());
        }
        if !test.is_empty() && !test.has_both_classes() {
            warnings.push("test split ended up single-class".to_string());
        }
    }
    Ok(SplitResult {
        train,
        test,
        seed,
        warnings,
    })
}

/// Per-feature sampling location/scale plus the weight its standardized
/// value carries in the latent risk score. Weight signs equal theory signs,
/// so the generated data has known ground-truth directions.
const GEN_PROFILE: [(f64, f64, f64); 15] = [
    // (loc, scale, |weight|) in canonical order, Aou handled separately
    (8.0, 10.0, 0.50),  // PrCb
    (10.0, 25.0, 0.40), // Igrb
    (4.0, 5.0, 0.90),   // Roa
    (7.0, 12.0, 0.60),  // Roe
    (0.15, 0.10, 0.40), // EBII
    (0.80, 0.60, 0.45), // Ocebi
    (1.50, 0.80, 0.70), // Lr
    (1.10, 0.70, 0.55), // Qr
    (5.0, 4.0, 0.35),   // Rst
    (55.0, 15.0, 1.00), // Alr
    (0.60, 0.20, 0.80), // Sdtd
    (0.45, 0.15, 0.75), // Ditc
    (0.30, 0.20, 0.50), // Mtd
    (5.0, 6.0, 0.65),   // Im
    (0.40, 0.35, 0.85), // Ebit
];

const AOU_WEIGHT: f64 = 0.60;
const NOISE_SD: f64 = 0.75;

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Synthesize a bond-issuer dataset and return the latent risk score each
/// row was labeled from. The risk score is a fixed linear combination of
/// standardized features (signs equal to theory signs) plus sign-aligned
/// hinge interactions that reward nonlinear models, plus Gaussian noise.
/// The `n_defaults` highest-risk rows are labeled 1.
pub fn generate_synthetic_with_risk(
    n_rows: usize,
    n_defaults: usize,
    seed: u64,
) -> Result<(Dataset, Vec<f64>)> {
    if n_defaults == 0 || n_defaults >= n_rows {
        return Err(Error::Validation(format!(
            "need 0 < n_defaults < n_rows, got n_defaults={n_defaults}, n_rows={n_rows}"
        )));
    }
    let schema = Schema::bond_default();
    let signs: Vec<f64> = schema
        .features()
        .iter()
        .map(|f| f64::from(f.theory_sign))
        .collect();

    let mut rows = Vec::with_capacity(n_rows);
    let mut risk = Vec::with_capacity(n_rows);
    for i in 0..n_rows {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        let mut row = Vec::with_capacity(16);
        let mut z = Vec::with_capacity(16);
        for (loc, scale, _) in GEN_PROFILE {
            let g: f64 = rng.sample(StandardNormal);
            row.push(loc + scale * g);
            z.push(g);
        }
        // Audit opinion: ordinal draw, mostly standard unqualified.
        let u: f64 = rng.random();
        let aou = if u < 0.02 {
            1.0
        } else if u < 0.08 {
            2.0
        } else if u < 0.20 {
            3.0
        } else {
            4.0
        };
        row.push(aou);
        // Standardized ordinal under the sampling distribution above
        // (mean 3.7, sd ~0.67).
        z.push((aou - 3.7) / 0.67);

        let mut score = 0.0;
        for j in 0..15 {
            score += signs[j] * GEN_PROFILE[j].2 * z[j];
        }
        score += signs[15] * AOU_WEIGHT * z[15];
        // Hinge interactions, each monotone in the theory direction of the
        // features it touches: Roa 2, Lr 6, Qr 7, Alr 9, Sdtd 10, Ditc 11,
        // Im 13, Ebit 14.
        score += 0.9 * relu(z[9]) * relu(z[10]);
        score += 0.9 * relu(-z[2]) * relu(-z[14]);
        score += 0.7 * relu(z[11]) * relu(-z[13]);
        score += 0.6 * relu(-z[6]) * relu(-z[7]);
        let noise: f64 = rng.sample(StandardNormal);
        score += NOISE_SD * noise;

        rows.push(row);
        risk.push(score);
    }

    // Label the n_defaults riskiest rows, ties broken by row index.
    let mut order: Vec<usize> = (0..n_rows).collect();
    order.sort_by(|&a, &b| risk[b].partial_cmp(&risk[a]).unwrap().then(a.cmp(&b)));
    let mut labels = vec![0u8; n_rows];
    for &i in order.iter().take(n_defaults) {
        labels[i] = 1;
    }

    let dataset = Dataset::new(schema, rows, labels)?;
    Ok((dataset, risk))
}

/// Synthesize a bond-issuer dataset with exactly `n_defaults` positive
/// labels. Deterministic per seed.
pub fn generate_synthetic(n_rows: usize, n_defaults: usize, seed: u64) -> Result<Dataset> {
    generate_synthetic_with_risk(n_rows, n_defaults, seed).map(|(d, _)| d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_csv() -> String {
        let mut s = String::from(
            "default,PrCb,Igrb,Roa,Roe,EBII,Ocebi,Lr,Qr,Rst,Alr,Sdtd,Ditc,Mtd,Im,Ebit,Aou\n",
        );
        s.push_str("0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,4\n");
        s.push_str("1,1.5,-2,3,4,5,6,7,8,9,10,11,12,13,14,15,1\n");
        s.push_str("0,0.25,2,3,4,5,6,7,8,9,10,11,12,13,14,15,3\n");
        s
    }

    #[test]
    fn well_formed_csv_loads() {
        let d = parse_csv(&tiny_csv()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.labels, vec![0, 1, 0]);
        assert_eq!(d.rows[1][0], 1.5);
        assert_eq!(d.schema.names()[0], "PrCb");
    }

    #[test]
    fn missing_column_names_the_column() {
        let text = tiny_csv().replace(",Ebit", "");
        match parse_csv(&text) {
            Err(Error::Schema(msg)) => assert_eq!(msg, "Ebit"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_row_and_column() {
        let text = tiny_csv().replace("1.5", "abc");
        match parse_csv(&text) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "PrCb");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn aou_out_of_domain_cites_row() {
        let mut text = tiny_csv();
        for _ in 0..3 {
            text.push_str("0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,2\n");
        }
        // Row 7 of the data gets Aou=5.
        text.push_str("0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,5\n");
        match parse_csv(&text) {
            Err(Error::Validation(msg)) => {
                assert!(msg.contains("row 7"), "message was {msg:?}");
                assert!(msg.contains("Aou"), "message was {msg:?}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_is_value_exact() {
        let d = generate_synthetic(40, 5, 9).unwrap();
        let reparsed = parse_csv(&d.to_csv_string()).unwrap();
        assert_eq!(d, reparsed);
    }

    #[test]
    fn write_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let d = generate_synthetic(25, 3, 5).unwrap();
        d.write_csv(&path).unwrap();
        let loaded = load_csv(&path).unwrap();
        assert_eq!(d, loaded);
    }

    #[test]
    fn split_sizes_follow_rounding() {
        let d = generate_synthetic(10, 2, 1).unwrap();
        let split = split_train_test(&d, 0.8, 1).unwrap();
        assert_eq!(split.train.len(), 8);
        assert_eq!(split.test.len(), 2);

        let d = generate_synthetic(6471, 50, 1).unwrap();
        let split = split_train_test(&d, 0.8, 1).unwrap();
        assert_eq!(split.train.len(), 5177);
        assert_eq!(split.test.len(), 1294);
    }

    #[test]
    fn split_is_deterministic() {
        let d = generate_synthetic(50, 6, 3).unwrap();
        let a = split_train_test(&d, 0.8, 11).unwrap();
        let b = split_train_test(&d, 0.8, 11).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
    }

    #[test]
    fn split_rejects_tiny_input() {
        let d = Dataset::new(
            Schema::anonymous(2),
            vec![vec![0.0, 1.0]],
            vec![0],
        )
        .unwrap();
        assert!(split_train_test(&d, 0.8, 0).is_err());
    }

    #[test]
    fn single_class_split_carries_warning() {
        let schema = Schema::anonymous(1);
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let d = Dataset::new(schema, rows, vec![0; 10]).unwrap();
        let split = split_train_test(&d, 0.8, 0).unwrap();
        assert!(!split.warnings.is_empty());
    }

    #[test]
    fn synthetic_counts_and_determinism() {
        let a = generate_synthetic(6471, 50, 42).unwrap();
        assert_eq!(a.len(), 6471);
        assert_eq!(a.n_defaults(), 50);
        let b = generate_synthetic(6471, 50, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn synthetic_rejects_degenerate_counts() {
        assert!(generate_synthetic(100, 0, 1).is_err());
        assert!(generate_synthetic(10, 10, 1).is_err());
    }

    #[test]
    fn synthetic_risk_correlations_match_theory_signs() {
        let (d, risk) = generate_synthetic_with_risk(4000, 40, 7).unwrap();
        let n = d.len() as f64;
        let risk_mean = risk.iter().sum::<f64>() / n;
        for (j, feat) in d.schema.features().iter().enumerate() {
            let col: Vec<f64> = d.rows.iter().map(|r| r[j]).collect();
            let col_mean = col.iter().sum::<f64>() / n;
            let mut cov = 0.0;
            let mut var_c = 0.0;
            let mut var_r = 0.0;
            for i in 0..d.len() {
                let dc = col[i] - col_mean;
                let dr = risk[i] - risk_mean;
                cov += dc * dr;
                var_c += dc * dc;
                var_r += dr * dr;
            }
            let corr = cov / (var_c.sqrt() * var_r.sqrt());
            assert!(
                corr * f64::from(feat.theory_sign) > 0.0,
                "feature {} corr {corr} fights theory sign {}",
                feat.name,
                feat.theory_sign
            );
        }
    }

    #[test]
    fn content_hash_tracks_content() {
        let a = generate_synthetic(30, 4, 1).unwrap();
        let b = generate_synthetic(30, 4, 1).unwrap();
        let c = generate_synthetic(30, 4, 2).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        assert_ne!(a.content_hash(), c.content_hash());
    }
}
