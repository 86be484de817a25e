//! End-to-end protocol: load or synthesize data, split, train the four
//! classifiers, score them with AUC, explain them with LIME and SHAP,
//! compute the agreement metric and sign tables, and write the report
//! bundle.
//!
//! Report files written into the output directory:
//! `report.json`, `table2.csv` (AUC), `table3.csv` (LIME matrix),
//! `table4.csv` (SHAP matrix), `table5.csv` (agreement scores),
//! `table6.csv`/`table7.csv` (sign tables), `roc_<model>.csv` per model,
//! `miai_bars.svg`, and `model_<model>.json` with the trained parameters.

use crate::attribution::AttributionVector;
use crate::dataset::{self, Dataset};
use crate::error::{Error, Result};
use crate::eval::{roc_auc, RocResult};
use crate::lime::{self, LimeConfig};
use crate::metric::{compute_miai, sign_consistency, theory_table, SignTable};
use crate::models::{train, ModelKind, TrainConfig, TrainedModel};
use crate::schema::FEATURE_COUNT;
use crate::seeding::derive_seed;
use crate::shap::{self, ShapConfig, ShapMode};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Where the pipeline gets its data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataSource {
    Csv(String),
    Synthetic { rows: usize, defaults: usize },
}

/// Full configuration of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataSource,
    pub split_ratio: f64,
    /// Master seed; every randomized stage derives its own seed from it.
    pub seed: u64,
    pub train: TrainConfig,
    pub lime_samples: usize,
    pub lime_kernel_width: Option<f64>,
    pub lime_ridge_lambda: f64,
    pub shap_mode: ShapMode,
    pub shap_permutations: usize,
    pub shap_max_background: usize,
    /// Cap on how many test instances the explanation stage touches
    /// (deterministically the first ones of the shuffled test set).
    pub explain_sample: Option<usize>,
    /// Model kinds to run; empty means all four.
    pub models: Vec<ModelKind>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataSource::Synthetic {
                rows: 6471,
                defaults: 50,
            },
            split_ratio: 0.8,
            seed: 42,
            train: TrainConfig::default(),
            lime_samples: 5000,
            lime_kernel_width: None,
            lime_ridge_lambda: 1e-3,
            shap_mode: ShapMode::Sampling,
            shap_permutations: 2000,
            shap_max_background: 100,
            explain_sample: None,
            models: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn model_kinds(&self) -> Vec<ModelKind> {
        if self.models.is_empty() {
            ModelKind::ALL.to_vec()
        } else {
            ModelKind::ALL
                .into_iter()
                .filter(|k| self.models.contains(k))
                .collect()
        }
    }
}

/// Everything reported for one trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub kind: ModelKind,
    pub label: String,
    pub auc: f64,
    pub miai: f64,
    pub lime: AttributionVector,
    pub shap: AttributionVector,
    pub lime_mean_weighted_r2: f64,
    pub sign_table: SignTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub config: RunConfig,
    pub dataset_hash: String,
    pub n_rows: usize,
    pub n_defaults: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub explain_count: usize,
    pub shap_background_rows: usize,
    pub warnings: Vec<String>,
}

/// Wall-clock accounting; excluded from determinism comparisons.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: u128,
    pub train_ms: u128,
    pub explain_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub metadata: RunMetadata,
    pub feature_names: Vec<String>,
    pub models: Vec<ModelReport>,
    pub timing: Timing,
}

/// A run's full output: the report plus artifacts too bulky for
/// `report.json`.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub rocs: Vec<(ModelKind, RocResult)>,
    pub trained: Vec<TrainedModel>,
    /// Per-instance Shapley attributions for the explained test rows.
    pub shap_instances: Vec<(ModelKind, Vec<AttributionVector>)>,
}

fn stage<T>(name: &str, result: Result<T>) -> Result<T> {
    result.map_err(|e| match e {
        already @ Error::Io { .. } => already,
        other => Error::Validation(format!("{name} stage: {other}")),
    })
}

// Stage tags for seed derivation off the master seed.
const SEED_SPLIT: u64 = 1;
const SEED_TRAIN: u64 = 1000;
const SEED_LIME: u64 = 2000;
const SEED_SHAP_BACKGROUND: u64 = 3000;
const SEED_SHAP: u64 = 4000;

/// Run the full protocol under the current rayon thread pool.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let started = Instant::now();
    let data = stage(
        "load",
        match &cfg.data {
            DataSource::Csv(path) => dataset::load_csv(Path::new(path)),
            DataSource::Synthetic { rows, defaults } => {
                dataset::generate_synthetic(*rows, *defaults, cfg.seed)
            }
        },
    )?;

    let split = stage(
        "split",
        dataset::split_train_test(&data, cfg.split_ratio, derive_seed(cfg.seed, SEED_SPLIT)),
    )?;
    if split.test.is_empty() {
        return Err(Error::Validation(
            "split stage: test set is empty; use more rows or a smaller ratio".into(),
        ));
    }
    let mut warnings = split.warnings.clone();

    let standardizer = stage("standardize", crate::standardize::Standardizer::fit(&split.train.rows))?;
    if !standardizer.clamped.is_empty() {
        warnings.push(format!(
            "{} zero-variance training feature(s); their deviation was clamped to 1",
            standardizer.clamped.len()
        ));
    }

    let explain_count = cfg
        .explain_sample
        .map_or(split.test.len(), |k| k.min(split.test.len()));
    let explain_set = Dataset::new(
        split.test.schema.clone(),
        split.test.rows[..explain_count].to_vec(),
        split.test.labels[..explain_count].to_vec(),
    )?;

    let shap_background_cfg = stage(
        "shap background",
        ShapConfig::from_train(
            cfg.shap_mode,
            &split.train,
            cfg.shap_max_background,
            cfg.shap_permutations,
            derive_seed(cfg.seed, SEED_SHAP_BACKGROUND),
        ),
    )?;
    let theory = theory_table();

    let mut models = Vec::new();
    let mut rocs = Vec::new();
    let mut trained_models = Vec::new();
    let mut shap_instances = Vec::new();
    let mut train_ms = 0u128;
    let mut explain_ms = 0u128;

    for (idx, kind) in cfg.model_kinds().into_iter().enumerate() {
        let idx = idx as u64;

        let t0 = Instant::now();
        let train_cfg = TrainConfig {
            seed: derive_seed(cfg.seed, SEED_TRAIN + idx),
            ..cfg.train.clone()
        };
        let model = stage(&format!("train {kind}"), train(kind, &split.train, &train_cfg))?;
        train_ms += t0.elapsed().as_millis();

        let scores = stage(
            &format!("predict {kind}"),
            model.predict_batch(&split.test.rows),
        )?;
        let roc = stage(&format!("auc {kind}"), roc_auc(&scores, &split.test.labels))?;

        let t1 = Instant::now();
        let lime_cfg = LimeConfig {
            n_samples: cfg.lime_samples,
            kernel_width: cfg
                .lime_kernel_width
                .unwrap_or(0.75 * (FEATURE_COUNT as f64).sqrt()),
            ridge_lambda: cfg.lime_ridge_lambda,
            k_features: data.n_features(),
            seed: derive_seed(cfg.seed, SEED_LIME + idx),
        };
        let lime_summary = stage(
            &format!("lime {kind}"),
            lime::mean_attribution(&model, &explain_set, &standardizer, &lime_cfg),
        )?;
        let shap_cfg = ShapConfig {
            seed: derive_seed(cfg.seed, SEED_SHAP + idx),
            ..shap_background_cfg.clone()
        };
        let shap_per_instance = stage(
            &format!("shap {kind}"),
            shap::explain_set(&model, &explain_set, &shap_cfg),
        )?;
        let shap_mean = crate::attribution::mean_of(&shap_per_instance);
        explain_ms += t1.elapsed().as_millis();

        let miai = stage(
            &format!("miai {kind}"),
            compute_miai(&lime_summary.attribution, &shap_mean),
        )?;
        let sign_table = stage(
            &format!("sign table {kind}"),
            sign_consistency(&lime_summary.attribution, &shap_mean, &theory),
        )?;

        models.push(ModelReport {
            kind,
            label: kind.short_name().to_string(),
            auc: roc.auc,
            miai: miai.miai,
            lime: lime_summary.attribution,
            shap: shap_mean,
            lime_mean_weighted_r2: lime_summary.mean_weighted_r2,
            sign_table,
        });
        rocs.push((kind, roc));
        trained_models.push(model);
        shap_instances.push((kind, shap_per_instance));
    }

    let report = RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        metadata: RunMetadata {
            seed: cfg.seed,
            config: cfg.clone(),
            dataset_hash: data.content_hash(),
            n_rows: data.len(),
            n_defaults: data.n_defaults(),
            n_train: split.train.len(),
            n_test: split.test.len(),
            explain_count,
            shap_background_rows: shap_background_cfg.background.len(),
            warnings,
        },
        feature_names: data.schema.names(),
        models,
        timing: Timing {
            total_ms: started.elapsed().as_millis(),
            train_ms,
            explain_ms,
        },
    };
    Ok(RunOutput {
        report,
        rocs,
        trained: trained_models,
        shap_instances,
    })
}

/// Run inside a dedicated rayon pool of `jobs` workers (None uses the
/// global pool). Results are identical whatever the worker count.
pub fn run_with_jobs(cfg: &RunConfig, jobs: Option<usize>) -> Result<RunOutput> {
    match jobs {
        None => run(cfg),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot build a {n}-worker pool: {e}")))?;
            pool.install(|| run(cfg))
        }
    }
}

/// `report.json` serialization.
pub fn report_json(report: &RunReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serialization");
    text.push('\n');
    text
}

/// The report with wall-clock timing stripped, for byte-for-byte
/// determinism comparisons between runs.
pub fn report_json_without_timing(json_text: &str) -> Result<String> {
    let mut value: serde_json::Value = serde_json::from_str(json_text)
        .map_err(|e| Error::Validation(format!("report is not valid JSON: {e}")))?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("timing");
    }
    let mut text = serde_json::to_string_pretty(&value).expect("report serialization");
    text.push('\n');
    Ok(text)
}

fn write_file(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(path.display().to_string(), e))?;
    written.push(path);
    Ok(())
}

fn sign_char(sign: i8) -> &'static str {
    match sign.cmp(&0) {
        std::cmp::Ordering::Greater => "+",
        std::cmp::Ordering::Less => "-",
        std::cmp::Ordering::Equal => "0",
    }
}

/// Write the full report bundle into `dir`, returning the files written.
pub fn write_outputs(output: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut written = Vec::new();
    let report = &output.report;

    write_file(dir, "report.json", &report_json(report), &mut written)?;

    // AUC per model.
    let mut table2 = String::from("model,auc\n");
    for m in &report.models {
        let _ = writeln!(table2, "{},{}", m.label, m.auc);
    }
    write_file(dir, "table2.csv", &table2, &mut written)?;

    // Mean attribution matrices, features x models.
    for (name, pick) in [
        ("table3.csv", 0usize),
        ("table4.csv", 1usize),
    ] {
        let mut table = String::from("feature");
        for m in &report.models {
            let _ = write!(table, ",{}", m.label);
        }
        table.push('\n');
        for (i, feature) in report.feature_names.iter().enumerate() {
            table.push_str(feature);
            for m in &report.models {
                let v = if pick == 0 {
                    m.lime.contributions[i]
                } else {
                    m.shap.contributions[i]
                };
                let _ = write!(table, ",{v}");
            }
            table.push('\n');
        }
        write_file(dir, name, &table, &mut written)?;
    }

    // Agreement score per model.
    let mut table5 = String::from("model,miai\n");
    for m in &report.models {
        let _ = writeln!(table5, "{},{}", m.label, m.miai);
    }
    write_file(dir, "table5.csv", &table5, &mut written)?;

    // Sign tables against theory: table6 for LIME, table7 for SHAP.
    for (name, lime_side) in [("table6.csv", true), ("table7.csv", false)] {
        let mut table = String::from("feature,theory");
        for m in &report.models {
            let _ = write!(table, ",{}", m.label);
        }
        table.push('\n');
        for (i, feature) in report.feature_names.iter().enumerate() {
            table.push_str(feature);
            let theory = report
                .models
                .first()
                .map_or(0, |m| m.sign_table.rows[i].theory_sign);
            let _ = write!(table, ",{}", sign_char(theory));
            for m in &report.models {
                let row = &m.sign_table.rows[i];
                let sign = if lime_side { row.lime_sign } else { row.shap_sign };
                let _ = write!(table, ",{}", sign_char(sign));
            }
            table.push('\n');
        }
        write_file(dir, name, &table, &mut written)?;
    }

    // ROC points per model.
    for (kind, roc) in &output.rocs {
        let mut csv = String::from("fpr,tpr\n");
        for (fpr, tpr) in &roc.points {
            let _ = writeln!(csv, "{fpr},{tpr}");
        }
        write_file(dir, &format!("roc_{}.csv", kind.id()), &csv, &mut written)?;
    }

    // Per-instance Shapley values in long format, for ranked-bar summaries.
    for (kind, instances) in &output.shap_instances {
        let mut csv = String::from("instance_id,feature,phi\n");
        for (id, attribution) in instances.iter().enumerate() {
            for (feature, phi) in report.feature_names.iter().zip(&attribution.contributions) {
                let _ = writeln!(csv, "{id},{feature},{phi}");
            }
        }
        write_file(
            dir,
            &format!("shap_{}_instances.csv", kind.id()),
            &csv,
            &mut written,
        )?;
    }

    // Agreement bar figure.
    write_file(dir, "miai_bars.svg", &miai_bars_svg(report), &mut written)?;

    // Trained models, for later re-use without retraining.
    for model in &output.trained {
        write_file(
            dir,
            &format!("model_{}.json", model.kind().id()),
            &model.to_json(),
            &mut written,
        )?;
    }
    Ok(written)
}

/// Hand-emitted SVG bar chart of the per-model agreement scores.
pub fn miai_bars_svg(report: &RunReport) -> String {
    let width = 480.0;
    let height = 320.0;
    let baseline = 170.0;
    let max_bar = 110.0;
    let scale = report
        .models
        .iter()
        .map(|m| m.miai.abs())
        .fold(0.1f64, f64::max);
    let n = report.models.len().max(1) as f64;
    let slot = (width - 80.0) / n;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width} {height}\" \
         font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">\
         Interpretability agreement (cosine of SHAP and LIME attributions)</text>",
        width / 2.0
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"40\" y1=\"{baseline}\" x2=\"{}\" y2=\"{baseline}\" stroke=\"#444\"/>",
        width - 40.0
    );
    for (i, m) in report.models.iter().enumerate() {
        let bar_height = (m.miai / scale * max_bar).abs();
        let x = 40.0 + slot * i as f64 + slot / 2.0 - 28.0;
        let y = if m.miai >= 0.0 {
            baseline - bar_height
        } else {
            baseline
        };
        let _ = writeln!(
            svg,
            "  <rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"56\" height=\"{bar_height:.1}\" \
             fill=\"{}\"/>",
            if m.miai >= 0.0 { "#4878a8" } else { "#b5543a" }
        );
        let value_y = if m.miai >= 0.0 {
            baseline - bar_height - 8.0
        } else {
            baseline + bar_height + 16.0
        };
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{value_y:.1}\" text-anchor=\"middle\">{:.4}</text>",
            x + 28.0,
            m.miai
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            x + 28.0,
            height - 18.0,
            m.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast_config() -> RunConfig {
        RunConfig {
            data: DataSource::Synthetic {
                rows: 420,
                defaults: 70,
            },
            seed: 42,
            train: TrainConfig {
                lr_epochs: 60,
                rf_n_trees: 10,
                gbt_n_rounds: 25,
                ..TrainConfig::default()
            },
            lime_samples: 200,
            shap_permutations: 40,
            shap_max_background: 25,
            explain_sample: Some(12),
            ..RunConfig::default()
        }
    }

    #[test]
    fn pipeline_runs_end_to_end_and_is_deterministic() {
        let cfg = fast_config();
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.report.models.len(), 4);
        let ja = report_json_without_timing(&report_json(&a.report)).unwrap();
        let jb = report_json_without_timing(&report_json(&b.report)).unwrap();
        assert_eq!(ja, jb);
        for m in &a.report.models {
            assert!((0.0..=1.0).contains(&m.auc));
            assert!((-1.0..=1.0).contains(&m.miai));
            assert_eq!(m.lime.contributions.len(), 16);
            assert_eq!(m.shap.contributions.len(), 16);
        }
        assert_eq!(a.report.metadata.explain_count, 12);
    }

    #[test]
    fn worker_count_does_not_change_the_report() {
        let cfg = fast_config();
        let one = run_with_jobs(&cfg, Some(1)).unwrap();
        let four = run_with_jobs(&cfg, Some(4)).unwrap();
        let j1 = report_json_without_timing(&report_json(&one.report)).unwrap();
        let j4 = report_json_without_timing(&report_json(&four.report)).unwrap();
        assert_eq!(j1, j4);
    }

    #[test]
    fn model_subset_restricts_the_report() {
        let cfg = RunConfig {
            models: vec![ModelKind::DecisionTree, ModelKind::LogisticRegression],
            ..fast_config()
        };
        let out = run(&cfg).unwrap();
        let labels: Vec<&str> = out.report.models.iter().map(|m| m.label.as_str()).collect();
        assert_eq!(labels, vec!["LR", "DT"]);
    }

    #[test]
    fn outputs_round_trip_through_the_written_files() {
        let cfg = RunConfig {
            models: vec![ModelKind::DecisionTree],
            ..fast_config()
        };
        let out = run(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_outputs(&out, dir.path()).unwrap();
        assert!(files.iter().any(|p| p.ends_with("report.json")));

        // table3 re-parses to the exact in-memory LIME matrix.
        let table3 = std::fs::read_to_string(dir.path().join("table3.csv")).unwrap();
        let mut lines = table3.lines();
        assert_eq!(lines.next().unwrap(), "feature,DT");
        for (i, line) in lines.enumerate() {
            let mut cells = line.split(',');
            assert_eq!(cells.next().unwrap(), out.report.feature_names[i]);
            let v: f64 = cells.next().unwrap().parse().unwrap();
            assert_eq!(v.to_bits(), out.report.models[0].lime.contributions[i].to_bits());
        }

        // report.json re-parses into the same report.
        let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let parsed: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, out.report);

        // the figure has one bar per model
        let svg = std::fs::read_to_string(dir.path().join("miai_bars.svg")).unwrap();
        assert_eq!(svg.matches("<rect").count(), 1);

        // the saved model reloads and predicts identically
        let model = TrainedModel::load(&dir.path().join("model_dt.json")).unwrap();
        assert_eq!(model, out.trained[0]);
    }

    #[test]
    fn missing_csv_is_a_load_stage_error() {
        let cfg = RunConfig {
            data: DataSource::Csv("/nonexistent/data.csv".into()),
            ..fast_config()
        };
        match run(&cfg) {
            Err(Error::Io { path, .. }) => assert!(path.contains("nonexistent")),
            other => panic!("expected io error, got {other:?}"),
        }
    }
}
