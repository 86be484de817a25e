//! Flat `key = value` run configuration files.
//!
//! Keys mirror the long flag names of `miai run` (without the leading
//! dashes). Values already set by command-line flags win over the file.

use crate::RunArgs;
use std::path::PathBuf;

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("config key {key:?}: cannot parse {value:?}"))
}

/// Merge `text` into `args`, filling only fields the flags left unset.
pub fn merge(args: &mut RunArgs, text: &str) -> Result<(), String> {
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", line_no + 1))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "data" => {
                if args.data.is_none() {
                    args.data = Some(PathBuf::from(value));
                }
            }
            "rows" => fill(&mut args.rows, key, value)?,
            "defaults" => fill(&mut args.defaults, key, value)?,
            "seed" => fill(&mut args.seed, key, value)?,
            "split-ratio" => fill(&mut args.split_ratio, key, value)?,
            "out" => {
                if args.out.is_none() {
                    args.out = Some(PathBuf::from(value));
                }
            }
            "jobs" => fill(&mut args.jobs, key, value)?,
            "model" => {
                if args.model.is_empty() {
                    args.model = value.split(',').map(|s| s.trim().to_string()).collect();
                }
            }
            "explain-sample" => fill(&mut args.explain_sample, key, value)?,
            "shap-exact" => {
                if !args.shap_exact {
                    args.shap_exact = parse(key, value)?;
                }
            }
            "shap-permutations" => fill(&mut args.shap_permutations, key, value)?,
            "shap-background" => fill(&mut args.shap_background, key, value)?,
            "lime-samples" => fill(&mut args.lime_samples, key, value)?,
            "lime-kernel-width" => fill(&mut args.lime_kernel_width, key, value)?,
            "lime-ridge-lambda" => fill(&mut args.lime_ridge_lambda, key, value)?,
            "lr-epochs" => fill(&mut args.lr_epochs, key, value)?,
            "lr-learning-rate" => fill(&mut args.lr_learning_rate, key, value)?,
            "tree-max-depth" => fill(&mut args.tree_max_depth, key, value)?,
            "tree-min-leaf" => fill(&mut args.tree_min_leaf, key, value)?,
            "rf-trees" => fill(&mut args.rf_trees, key, value)?,
            "rf-feature-fraction" => fill(&mut args.rf_feature_fraction, key, value)?,
            "rf-bootstrap" => fill(&mut args.rf_bootstrap, key, value)?,
            "gbt-rounds" => fill(&mut args.gbt_rounds, key, value)?,
            "gbt-learning-rate" => fill(&mut args.gbt_learning_rate, key, value)?,
            "gbt-max-depth" => fill(&mut args.gbt_max_depth, key, value)?,
            other => return Err(format!("config line {}: unknown key {other:?}", line_no + 1)),
        }
    }
    Ok(())
}

fn fill<T: std::str::FromStr>(
    slot: &mut Option<T>,
    key: &str,
    value: &str,
) -> Result<(), String> {
    if slot.is_none() {
        *slot = Some(parse(key, value)?);
    }
    Ok(())
}
