//! Command-line front end.
//!
//! Three commands: `gen` writes a synthetic bond-issuer CSV, `run` executes
//! the full train/evaluate/explain/score protocol and writes the report
//! bundle, `fixture-check` verifies the agreement metric against the
//! embedded reference tables. Exit codes: 0 success, 1 internal error or
//! failed check, 2 invalid input or configuration.

mod config_file;

use clap::{Args, Parser, Subcommand};
use miai::models::{ModelKind, TrainConfig};
use miai::pipeline::{self, DataSource, RunConfig};
use miai::shap::ShapMode;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "miai",
    version,
    about = "Measure classifier interpretability as the agreement between LIME and SHAP attributions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic bond-issuer dataset as CSV.
    Gen(GenArgs),
    /// Train, evaluate, explain, and score the four classifiers.
    Run(Box<RunArgs>),
    /// Verify the agreement metric against the embedded reference tables.
    FixtureCheck,
}

#[derive(Args)]
struct GenArgs {
    /// Number of rows to generate.
    #[arg(long)]
    rows: usize,
    /// Number of rows labeled as defaults.
    #[arg(long)]
    defaults: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output CSV path.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Default)]
struct RunArgs {
    /// Input CSV in the canonical 16-feature layout. Without it a synthetic
    /// dataset is generated.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Synthetic rows (default 6471).
    #[arg(long)]
    rows: Option<usize>,
    /// Synthetic default count (default 50).
    #[arg(long)]
    defaults: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split_ratio: Option<f64>,
    /// Output directory (default `miai-out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Explanation worker count (default: rayon's choice).
    #[arg(long)]
    jobs: Option<usize>,
    /// Restrict to a subset of lr, dt, rf, gbt (comma separated or repeated).
    #[arg(long, value_delimiter = ',')]
    model: Vec<String>,
    /// Explain only the first N test instances.
    #[arg(long)]
    explain_sample: Option<usize>,
    /// Exact Shapley enumeration instead of permutation sampling. Caps the
    /// explain sample at 100 unless --explain-sample is given.
    #[arg(long)]
    shap_exact: bool,
    #[arg(long)]
    shap_permutations: Option<usize>,
    /// Background rows marginalized over (cap on the training subsample).
    #[arg(long)]
    shap_background: Option<usize>,
    #[arg(long)]
    lime_samples: Option<usize>,
    #[arg(long)]
    lime_kernel_width: Option<f64>,
    #[arg(long)]
    lime_ridge_lambda: Option<f64>,
    #[arg(long)]
    lr_epochs: Option<usize>,
    #[arg(long)]
    lr_learning_rate: Option<f64>,
    #[arg(long)]
    tree_max_depth: Option<usize>,
    #[arg(long)]
    tree_min_leaf: Option<usize>,
    #[arg(long)]
    rf_trees: Option<usize>,
    #[arg(long)]
    rf_feature_fraction: Option<f64>,
    #[arg(long)]
    rf_bootstrap: Option<bool>,
    #[arg(long)]
    gbt_rounds: Option<usize>,
    #[arg(long)]
    gbt_learning_rate: Option<f64>,
    #[arg(long)]
    gbt_max_depth: Option<usize>,
    /// Flat key = value file mirroring the flag names; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Failure {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(&args),
        Command::Run(args) => cmd_run(*args),
        Command::FixtureCheck => cmd_fixture_check(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    let data = miai::dataset::generate_synthetic(args.rows, args.defaults, args.seed)
        .map_err(|e| Failure::input(e.to_string()))?;
    data.write_csv(&args.out)
        .map_err(|e| Failure::internal(e.to_string()))?;
    println!(
        "wrote {} rows ({} defaults, seed {}) to {}",
        data.len(),
        data.n_defaults(),
        args.seed,
        args.out.display()
    );
    Ok(())
}

fn build_run_config(mut args: RunArgs) -> Result<(RunConfig, PathBuf, Option<usize>), Failure> {
    if let Some(path) = args.config.clone() {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        config_file::merge(&mut args, &text).map_err(Failure::input)?;
    }

    if args.data.is_some() && (args.rows.is_some() || args.defaults.is_some()) {
        return Err(Failure::input(
            "--data and --rows/--defaults are mutually exclusive",
        ));
    }
    let data = match &args.data {
        Some(path) => DataSource::Csv(path.display().to_string()),
        None => DataSource::Synthetic {
            rows: args.rows.unwrap_or(6471),
            defaults: args.defaults.unwrap_or(50),
        },
    };

    let mut models = Vec::new();
    for name in &args.model {
        let kind = ModelKind::parse_id(name).map_err(|e| Failure::input(e.to_string()))?;
        if !models.contains(&kind) {
            models.push(kind);
        }
    }

    let shap_mode = if args.shap_exact {
        ShapMode::Exact
    } else {
        ShapMode::Sampling
    };
    let mut explain_sample = args.explain_sample;
    if args.shap_exact && explain_sample.is_none() {
        explain_sample = Some(100);
        eprintln!("note: exact Shapley mode caps the explain sample at 100; override with --explain-sample");
    }

    let defaults = RunConfig::default();
    let train_defaults = TrainConfig::default();
    let cfg = RunConfig {
        data,
        split_ratio: args.split_ratio.unwrap_or(defaults.split_ratio),
        seed: args.seed.unwrap_or(defaults.seed),
        train: TrainConfig {
            seed: 0,
            lr_learning_rate: args.lr_learning_rate.unwrap_or(train_defaults.lr_learning_rate),
            lr_epochs: args.lr_epochs.unwrap_or(train_defaults.lr_epochs),
            tree_max_depth: args.tree_max_depth.unwrap_or(train_defaults.tree_max_depth),
            tree_min_leaf: args.tree_min_leaf.unwrap_or(train_defaults.tree_min_leaf),
            rf_n_trees: args.rf_trees.unwrap_or(train_defaults.rf_n_trees),
            rf_feature_fraction: args
                .rf_feature_fraction
                .unwrap_or(train_defaults.rf_feature_fraction),
            rf_bootstrap: args.rf_bootstrap.unwrap_or(train_defaults.rf_bootstrap),
            gbt_n_rounds: args.gbt_rounds.unwrap_or(train_defaults.gbt_n_rounds),
            gbt_learning_rate: args
                .gbt_learning_rate
                .unwrap_or(train_defaults.gbt_learning_rate),
            gbt_max_depth: args.gbt_max_depth.unwrap_or(train_defaults.gbt_max_depth),
        },
        lime_samples: args.lime_samples.unwrap_or(defaults.lime_samples),
        lime_kernel_width: args.lime_kernel_width,
        lime_ridge_lambda: args.lime_ridge_lambda.unwrap_or(defaults.lime_ridge_lambda),
        shap_mode,
        shap_permutations: args
            .shap_permutations
            .unwrap_or(defaults.shap_permutations),
        shap_max_background: args.shap_background.unwrap_or(defaults.shap_max_background),
        explain_sample,
        models,
    };
    let out_dir = args.out.unwrap_or_else(|| PathBuf::from("miai-out"));
    Ok((cfg, out_dir, args.jobs))
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let (cfg, out_dir, jobs) = build_run_config(args)?;
    let output = pipeline::run_with_jobs(&cfg, jobs).map_err(|e| Failure::input(e.to_string()))?;
    let files = pipeline::write_outputs(&output, &out_dir)
        .map_err(|e| Failure::internal(e.to_string()))?;

    println!(
        "dataset: {} rows, {} defaults (hash {})",
        output.report.metadata.n_rows,
        output.report.metadata.n_defaults,
        output.report.metadata.dataset_hash
    );
    println!(
        "split: {} train / {} test; explained {} instances",
        output.report.metadata.n_train,
        output.report.metadata.n_test,
        output.report.metadata.explain_count
    );
    for warning in &output.report.metadata.warnings {
        eprintln!("warning: {warning}");
    }
    println!("model  auc      miai     lime-r2");
    for m in &output.report.models {
        println!(
            "{:<6} {:<8.4} {:<8.4} {:<8.4}",
            m.label, m.auc, m.miai, m.lime_mean_weighted_r2
        );
    }
    println!("wrote {} files to {}", files.len(), out_dir.display());
    Ok(())
}

fn cmd_fixture_check() -> Result<(), Failure> {
    let report = miai::fixture::check().map_err(|e| Failure::internal(e.to_string()))?;
    println!("model      miai     published  delta    signs  expected  status");
    let mut offending = Vec::new();
    for m in &report.models {
        let ok = m.miai_ok && m.signs_ok;
        println!(
            "{:<10} {:<8.4} {:<10.4} {:<8.4} {:<6} {:<9} {}",
            m.model,
            m.miai,
            m.published_miai,
            (m.miai - m.published_miai).abs(),
            m.lime_vs_shap_matches,
            m.recount_expected,
            if ok { "ok" } else { "FAIL" }
        );
        if !ok {
            offending.push(m.model);
        }
    }
    println!(
        "note: sign expectations are recounted from the embedded tables; the \
         published narrative reports (9, 8, 3, 3)"
    );
    if offending.is_empty() {
        println!("fixture check passed");
        Ok(())
    } else {
        Err(Failure::internal(format!(
            "fixture check failed for: {}",
            offending
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )))
    }
}
