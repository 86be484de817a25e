//! The four classifier families behind one probability-predicting interface.
//!
//! All training is deterministic for a fixed `(kind, data, config)` triple.
//! Models predict P(default = 1) and are immutable once trained; trained
//! models serialize to a versioned JSON document so a pipeline can train
//! once and explain later.

mod boosting;
mod logistic;
mod tree;

pub use boosting::BoostedModel;
pub use logistic::{log_loss, log_loss_gradient, LogisticModel};
pub use tree::{Node, Tree};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The classifier families compared by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    LogisticRegression,
    DecisionTree,
    RandomForest,
    GradientBoosting,
}

impl ModelKind {
    /// Fixed reporting order.
    pub const ALL: [ModelKind; 4] = [
        ModelKind::LogisticRegression,
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::GradientBoosting,
    ];

    /// Short column label used in report tables and file names.
    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "LR",
            ModelKind::DecisionTree => "DT",
            ModelKind::RandomForest => "RF",
            ModelKind::GradientBoosting => "GBT",
        }
    }

    /// Lowercase identifier used in CLI flags and file names.
    pub fn id(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "lr",
            ModelKind::DecisionTree => "dt",
            ModelKind::RandomForest => "rf",
            ModelKind::GradientBoosting => "gbt",
        }
    }

    pub fn parse_id(s: &str) -> Result<ModelKind> {
        match s.to_lowercase().as_str() {
            "lr" => Ok(ModelKind::LogisticRegression),
            "dt" => Ok(ModelKind::DecisionTree),
            "rf" => Ok(ModelKind::RandomForest),
            "gbt" | "xgb" | "xgboost" => Ok(ModelKind::GradientBoosting),
            other => Err(Error::Config(format!(
                "unknown model kind {other:?}; expected one of lr, dt, rf, gbt"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Hyperparameters for all four trainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub seed: u64,
    pub lr_learning_rate: f64,
    pub lr_epochs: usize,
    pub tree_max_depth: usize,
    pub tree_min_leaf: usize,
    pub rf_n_trees: usize,
    pub rf_feature_fraction: f64,
    pub rf_bootstrap: bool,
    /// May be 0, which leaves the ensemble at its constant base score.
    pub gbt_n_rounds: usize,
    pub gbt_learning_rate: f64,
    pub gbt_max_depth: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            lr_learning_rate: 0.1,
            lr_epochs: 500,
            tree_max_depth: 6,
            tree_min_leaf: 5,
            rf_n_trees: 100,
            rf_feature_fraction: 0.5,
            rf_bootstrap: true,
            gbt_n_rounds: 100,
            gbt_learning_rate: 0.1,
            gbt_max_depth: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lr_epochs", self.lr_epochs),
            ("tree_max_depth", self.tree_max_depth),
            ("tree_min_leaf", self.tree_min_leaf),
            ("rf_n_trees", self.rf_n_trees),
            ("gbt_max_depth", self.gbt_max_depth),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        let rates = [
            ("lr_learning_rate", self.lr_learning_rate),
            ("gbt_learning_rate", self.gbt_learning_rate),
            ("rf_feature_fraction", self.rf_feature_fraction),
        ];
        for (name, v) in rates {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Kind-specific fitted state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelParams {
    LogisticRegression(LogisticModel),
    DecisionTree(Tree),
    RandomForest(ForestModel),
    GradientBoosting(BoostedModel),
}

/// Bagged ensemble of probability trees; the forest predicts the
/// arithmetic mean of its members' leaf probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        sum / self.trees.len() as f64
    }
}

/// A fitted classifier: its hyperparameters, the feature order it was
/// trained against, and kind-specific parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub config: TrainConfig,
    pub feature_names: Vec<String>,
    pub params: ModelParams,
}

/// Current on-disk model format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: TrainedModel,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self.params {
            ModelParams::LogisticRegression(_) => ModelKind::LogisticRegression,
            ModelParams::DecisionTree(_) => ModelKind::DecisionTree,
            ModelParams::RandomForest(_) => ModelKind::RandomForest,
            ModelParams::GradientBoosting(_) => ModelKind::GradientBoosting,
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// P(default = 1) for one row in schema order.
    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features() {
            return Err(Error::Model(format!(
                "expected {} features, got {}",
                self.n_features(),
                row.len()
            )));
        }
        Ok(self.predict_raw(row))
    }

    /// Elementwise `predict_proba`, order preserving.
    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_proba(r)).collect()
    }

    /// Prediction without the arity check, for hot loops that validated
    /// their inputs up front.
    pub(crate) fn predict_raw(&self, row: &[f64]) -> f64 {
        match &self.params {
            ModelParams::LogisticRegression(m) => m.predict(row),
            ModelParams::DecisionTree(t) => t.predict(row),
            ModelParams::RandomForest(f) => f.predict(row),
            ModelParams::GradientBoosting(b) => b.predict(row),
        }
    }

    /// Serialize to the versioned JSON document format.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })
        .expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<TrainedModel> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::Model(format!("malformed model document: {e}")))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        Ok(file.model)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &std::path::Path) -> Result<TrainedModel> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        TrainedModel::from_json(&text)
    }
}

/// Train a classifier of the requested kind.
pub fn train(kind: ModelKind, data: &Dataset, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Validation("training set is empty".into()));
    }
    let needs_both_classes = matches!(
        kind,
        ModelKind::LogisticRegression | ModelKind::GradientBoosting
    );
    if needs_both_classes && !data.has_both_classes() {
        return Err(Error::SingleClassTrain(kind.short_name().to_string()));
    }
    let params = match kind {
        ModelKind::LogisticRegression => {
            ModelParams::LogisticRegression(logistic::train(&data.rows, &data.labels, cfg))
        }
        ModelKind::DecisionTree => {
            ModelParams::DecisionTree(tree::train_classifier(&data.rows, &data.labels, cfg))
        }
        ModelKind::RandomForest => {
            ModelParams::RandomForest(train_forest(&data.rows, &data.labels, cfg))
        }
        ModelKind::GradientBoosting => {
            ModelParams::GradientBoosting(boosting::train(&data.rows, &data.labels, cfg))
        }
    };
    Ok(TrainedModel {
        config: cfg.clone(),
        feature_names: data.schema.names(),
        params,
    })
}

fn train_forest(rows: &[Vec<f64>], labels: &[u8], cfg: &TrainConfig) -> ForestModel {
    use crate::seeding::derive_seed;
    use rand::Rng;
    use rand::SeedableRng;

    let d = rows[0].len();
    let subset = ((cfg.rf_feature_fraction * d as f64).ceil() as usize).clamp(1, d);
    let targets: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let trees = (0..cfg.rf_n_trees)
        .map(|t| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, t as u64));
            let indices: Vec<usize> = if cfg.rf_bootstrap {
                (0..rows.len()).map(|_| rng.random_range(0..rows.len())).collect()
            } else {
                (0..rows.len()).collect()
            };
            tree::build(
                rows,
                &targets,
                &indices,
                tree::SplitCriterion::Gini,
                cfg.tree_max_depth,
                cfg.tree_min_leaf,
                tree::FeatureSampling::Subset {
                    k: subset,
                    rng: &mut rng,
                },
            )
        })
        .collect();
    ForestModel { trees }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Schema;

    fn toy_dataset(n_features: usize, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Dataset {
        Dataset::new(Schema::anonymous(n_features), rows, labels).unwrap()
    }

    fn separable() -> Dataset {
        let rows = vec![
            vec![-2.0, -1.5],
            vec![-1.8, -2.2],
            vec![-1.2, -0.9],
            vec![-2.4, -1.1],
            vec![1.6, 2.1],
            vec![2.2, 1.4],
            vec![1.1, 1.9],
            vec![2.6, 2.4],
        ];
        let labels = vec![0, 0, 0, 0, 1, 1, 1, 1];
        toy_dataset(2, rows, labels)
    }

    #[test]
    fn lr_separates_a_separable_toy_set() {
        let data = separable();
        let model = train(ModelKind::LogisticRegression, &data, &TrainConfig::default()).unwrap();
        for (row, &label) in data.rows.iter().zip(&data.labels) {
            let p = model.predict_proba(row).unwrap();
            assert_eq!(u8::from(p > 0.5), label, "row {row:?} p {p}");
        }
    }

    #[test]
    fn pure_dataset_yields_single_leaf_tree() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        let data = toy_dataset(2, rows, vec![1, 1, 1]);
        let model = train(ModelKind::DecisionTree, &data, &TrainConfig::default()).unwrap();
        match &model.params {
            ModelParams::DecisionTree(tree) => {
                assert_eq!(tree.nodes.len(), 1);
                assert_eq!(model.predict_proba(&[9.0, 9.0]).unwrap(), 1.0);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn single_class_is_rejected_where_gradients_need_both() {
        let rows = vec![vec![0.0], vec![1.0]];
        let data = toy_dataset(1, rows, vec![0, 0]);
        assert!(matches!(
            train(ModelKind::LogisticRegression, &data, &TrainConfig::default()),
            Err(Error::SingleClassTrain(_))
        ));
        assert!(matches!(
            train(ModelKind::GradientBoosting, &data, &TrainConfig::default()),
            Err(Error::SingleClassTrain(_))
        ));
        // Trees just produce a pure leaf.
        assert!(train(ModelKind::DecisionTree, &data, &TrainConfig::default()).is_ok());
    }

    #[test]
    fn prediction_checks_arity() {
        let data = separable();
        let model = train(ModelKind::DecisionTree, &data, &TrainConfig::default()).unwrap();
        assert!(model.predict_proba(&[1.0]).is_err());
        assert!(model.predict_proba(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn batch_prediction_matches_elementwise() {
        let data = separable();
        let model = train(ModelKind::GradientBoosting, &data, &TrainConfig::default()).unwrap();
        let batch = model.predict_batch(&data.rows).unwrap();
        assert_eq!(batch.len(), data.len());
        for (row, b) in data.rows.iter().zip(&batch) {
            assert_eq!(model.predict_proba(row).unwrap(), *b);
        }
        assert!(model.predict_batch(&[]).unwrap().is_empty());
    }

    #[test]
    fn training_is_deterministic() {
        let data = crate::dataset::generate_synthetic(300, 30, 5).unwrap();
        let cfg = TrainConfig {
            rf_n_trees: 10,
            gbt_n_rounds: 10,
            lr_epochs: 50,
            ..TrainConfig::default()
        };
        for kind in ModelKind::ALL {
            let a = train(kind, &data, &cfg).unwrap();
            let b = train(kind, &data, &cfg).unwrap();
            assert_eq!(a, b, "{kind} retrain differs");
            for row in data.rows.iter().take(20) {
                assert_eq!(
                    a.predict_proba(row).unwrap().to_bits(),
                    b.predict_proba(row).unwrap().to_bits()
                );
            }
        }
    }

    #[test]
    fn degenerate_forest_equals_the_single_tree() {
        let data = crate::dataset::generate_synthetic(200, 20, 8).unwrap();
        let cfg = TrainConfig {
            rf_n_trees: 1,
            rf_feature_fraction: 1.0,
            rf_bootstrap: false,
            ..TrainConfig::default()
        };
        let forest = train(ModelKind::RandomForest, &data, &cfg).unwrap();
        let tree = train(ModelKind::DecisionTree, &data, &cfg).unwrap();
        for row in &data.rows {
            assert_eq!(
                forest.predict_proba(row).unwrap(),
                tree.predict_proba(row).unwrap()
            );
        }
    }

    #[test]
    fn forest_prediction_is_mean_of_member_trees() {
        // Hand-built forest of three stumps with leaf outputs 0.2/0.4/0.9.
        let leaf = |v: f64| Tree {
            nodes: vec![Node::Leaf { value: v }],
        };
        let model = TrainedModel {
            config: TrainConfig::default(),
            feature_names: vec!["f0".into()],
            params: ModelParams::RandomForest(ForestModel {
                trees: vec![leaf(0.2), leaf(0.4), leaf(0.9)],
            }),
        };
        assert!((model.predict_proba(&[0.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_round_boosting_predicts_base_rate() {
        let data = crate::dataset::generate_synthetic(100, 25, 3).unwrap();
        let cfg = TrainConfig {
            gbt_n_rounds: 0,
            ..TrainConfig::default()
        };
        let model = train(ModelKind::GradientBoosting, &data, &cfg).unwrap();
        let expected = 0.25;
        for row in data.rows.iter().take(5) {
            assert!((model.predict_proba(row).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn model_json_round_trips_with_identical_predictions() {
        let data = crate::dataset::generate_synthetic(150, 15, 4).unwrap();
        let cfg = TrainConfig {
            rf_n_trees: 5,
            gbt_n_rounds: 5,
            lr_epochs: 20,
            ..TrainConfig::default()
        };
        for kind in ModelKind::ALL {
            let model = train(kind, &data, &cfg).unwrap();
            let restored = TrainedModel::from_json(&model.to_json()).unwrap();
            assert_eq!(model, restored);
            for row in data.rows.iter().take(10) {
                assert_eq!(
                    model.predict_proba(row).unwrap().to_bits(),
                    restored.predict_proba(row).unwrap().to_bits()
                );
            }
        }
    }

    #[test]
    fn model_json_rejects_unknown_version() {
        let data = separable();
        let model = train(ModelKind::DecisionTree, &data, &TrainConfig::default()).unwrap();
        let text = model.to_json().replace("\"format_version\": 1", "\"format_version\": 99");
        assert!(TrainedModel::from_json(&text).is_err());
    }

    #[test]
    fn predictions_stay_in_probability_range() {
        let data = crate::dataset::generate_synthetic(400, 40, 6).unwrap();
        let cfg = TrainConfig {
            rf_n_trees: 20,
            gbt_n_rounds: 30,
            lr_epochs: 100,
            ..TrainConfig::default()
        };
        for kind in ModelKind::ALL {
            let model = train(kind, &data, &cfg).unwrap();
            for row in &data.rows {
                let p = model.predict_proba(row).unwrap();
                assert!((0.0..=1.0).contains(&p), "{kind} produced {p}");
            }
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = TrainConfig {
            rf_feature_fraction: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            lr_epochs: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            gbt_learning_rate: 1.5,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
