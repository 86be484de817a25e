//! End-to-end tests of the installed binary: exit codes, file outputs, and
//! rerun determinism.

use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn miai(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_miai"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn gen_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "gen", "--rows", "200", "--defaults", "9", "--seed", "42", "-o", "data.csv",
    ];
    let first = miai(&args, dir.path());
    assert!(first.status.success(), "{}", stderr(&first));
    let bytes_a = std::fs::read(dir.path().join("data.csv")).unwrap();

    let text = String::from_utf8(bytes_a.clone()).unwrap();
    assert!(text.starts_with(
        "default,PrCb,Igrb,Roa,Roe,EBII,Ocebi,Lr,Qr,Rst,Alr,Sdtd,Ditc,Mtd,Im,Ebit,Aou\n"
    ));
    assert_eq!(text.lines().count(), 201);
    let defaults = text
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("1,"))
        .count();
    assert_eq!(defaults, 9);

    // Rerunning the identical command reproduces the file byte for byte.
    let second = miai(&args, dir.path());
    assert!(second.status.success());
    let bytes_b = std::fs::read(dir.path().join("data.csv")).unwrap();
    assert_eq!(bytes_a, bytes_b);
}

#[test]
fn gen_rejects_degenerate_counts_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = miai(
        &["gen", "--rows", "10", "--defaults", "10", "-o", "x.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("n_defaults"));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn run_on_missing_data_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = miai(&["run", "--data", "no-such-file.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no-such-file.csv"));
}

#[test]
fn run_rejects_conflicting_data_sources() {
    let dir = tempfile::tempdir().unwrap();
    let out = miai(
        &["run", "--data", "x.csv", "--rows", "100"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("mutually exclusive"));
}

#[test]
fn run_rejects_unknown_model_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = miai(&["run", "--model", "svm"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("svm"));
}

#[test]
fn fixture_check_passes_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let out = miai(&["fixture-check"], dir.path());
    let elapsed = started.elapsed();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    let text = stdout(&out);
    for label in ["LR", "DT", "RF", "XGBoost"] {
        assert!(text.contains(label));
    }
    assert!(text.contains("fixture check passed"));
}

fn tiny_run_args<'a>(out_dir: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec![
        "run",
        "--rows",
        "300",
        "--defaults",
        "45",
        "--seed",
        "7",
        "--explain-sample",
        "8",
        "--lime-samples",
        "150",
        "--shap-permutations",
        "25",
        "--shap-background",
        "20",
        "--rf-trees",
        "10",
        "--gbt-rounds",
        "20",
        "--lr-epochs",
        "60",
        "--out",
        out_dir,
    ];
    args.extend_from_slice(extra);
    args
}

#[test]
fn run_writes_the_report_bundle_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = miai(&tiny_run_args("out-a", &[]), dir.path());
    assert!(out.status.success(), "{}", stderr(&out));

    let expected = [
        "report.json",
        "table2.csv",
        "table3.csv",
        "table4.csv",
        "table5.csv",
        "table6.csv",
        "table7.csv",
        "roc_lr.csv",
        "roc_dt.csv",
        "roc_rf.csv",
        "roc_gbt.csv",
        "shap_lr_instances.csv",
        "shap_dt_instances.csv",
        "shap_rf_instances.csv",
        "shap_gbt_instances.csv",
        "miai_bars.svg",
        "model_lr.json",
        "model_dt.json",
        "model_rf.json",
        "model_gbt.json",
    ];
    for name in expected {
        assert!(dir.path().join("out-a").join(name).exists(), "missing {name}");
    }

    let svg = std::fs::read_to_string(dir.path().join("out-a/miai_bars.svg")).unwrap();
    assert_eq!(svg.matches("<rect").count(), 4);

    let table5 = std::fs::read_to_string(dir.path().join("out-a/table5.csv")).unwrap();
    assert!(table5.starts_with("model,miai\nLR,"));

    // 8 explained instances x 16 features per model in long format.
    let instances = std::fs::read_to_string(dir.path().join("out-a/shap_rf_instances.csv")).unwrap();
    assert!(instances.starts_with("instance_id,feature,phi\n0,PrCb,"));
    assert_eq!(instances.lines().count(), 1 + 8 * 16);

    // Identical invocation into a second directory: reports agree except
    // for wall-clock timing.
    let out2 = miai(&tiny_run_args("out-b", &[]), dir.path());
    assert!(out2.status.success(), "{}", stderr(&out2));
    let a = strip_timing(&dir.path().join("out-a/report.json"));
    let b = strip_timing(&dir.path().join("out-b/report.json"));
    assert_eq!(a, b);
}

#[test]
fn worker_count_leaves_report_bytes_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let one = miai(&tiny_run_args("out-j1", &["--jobs", "1"]), dir.path());
    assert!(one.status.success(), "{}", stderr(&one));
    let eight = miai(&tiny_run_args("out-j8", &["--jobs", "8"]), dir.path());
    assert!(eight.status.success(), "{}", stderr(&eight));
    assert_eq!(
        strip_timing(&dir.path().join("out-j1/report.json")),
        strip_timing(&dir.path().join("out-j8/report.json"))
    );
}

#[test]
fn exact_shap_mode_runs_and_caps_the_explain_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = miai(
        &[
            "run",
            "--rows",
            "60",
            "--defaults",
            "12",
            "--seed",
            "3",
            "--shap-exact",
            "--shap-background",
            "2",
            "--lime-samples",
            "120",
            "--rf-trees",
            "3",
            "--gbt-rounds",
            "5",
            "--lr-epochs",
            "40",
            "--out",
            "exact-out",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("caps the explain sample at 100"));
    let report = std::fs::read_to_string(dir.path().join("exact-out/report.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(value["metadata"]["config"]["shap_mode"], "Exact");
    // 60 rows -> 12 test rows, all explained under the 100 cap.
    assert_eq!(value["metadata"]["explain_count"], 12);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.conf"),
        "rows = 250\ndefaults = 40\nseed = 9\nexplain-sample = 5\nlime-samples = 120\n\
         shap-permutations = 20\nshap-background = 15\nrf-trees = 6\ngbt-rounds = 12\n\
         lr-epochs = 40\nmodel = dt\nout = from-config\n",
    )
    .unwrap();
    // --model lr overrides the file's dt; everything else comes from the file.
    let out = miai(
        &["run", "--config", "run.conf", "--model", "lr"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report = std::fs::read_to_string(dir.path().join("from-config/report.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(value["metadata"]["n_rows"], 250);
    assert_eq!(value["metadata"]["explain_count"], 5);
    let models = value["models"].as_array().unwrap();
    assert_eq!(models.len(), 1);
    assert_eq!(models[0]["label"], "LR");
}

#[test]
fn model_subset_flag_limits_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = miai(
        &tiny_run_args("out-subset", &["--model", "dt,gbt"]),
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("out-subset/roc_dt.csv").exists());
    assert!(dir.path().join("out-subset/roc_gbt.csv").exists());
    assert!(!dir.path().join("out-subset/roc_lr.csv").exists());
    let table2 = std::fs::read_to_string(dir.path().join("out-subset/table2.csv")).unwrap();
    assert_eq!(table2.lines().count(), 3); // header + DT + GBT
}

fn strip_timing(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value.as_object_mut().unwrap().remove("timing");
    serde_json::to_string_pretty(&value).unwrap()
}
