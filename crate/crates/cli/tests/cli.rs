use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pcs_cli::commands::{TruthFile, DATA_FILE, REPORT_FILE, TRUTH_FILE};
use pcs_core::digest::digest_of;
use serde_json::{json, Value};

fn pcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcs")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = pcs(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn pcs_block(b: usize, top_k: usize) -> Value {
    json!({
        "target": {"kind": "lasso_selected_features", "selection_tol": 1e-8},
        "perturbations": {"bootstrap_replicates": b, "lambda_path": {"nlambda": 40, "min_ratio": "auto"}},
        "split": {"fraction": 0.5, "swap_halves": true},
        "metric": "l2",
        "screening": {"rule": {"top_k": top_k}, "evaluation": "holdout"},
        "stability_metric": {"kind": "selection_frequency", "interval_percentiles": [10.0, 90.0], "per_model_intervals": false}
    })
}

fn write_json(path: &Path, v: &Value) {
    fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
}

/// Simulated dataset under `dir/sim`.
fn simulate_fixture(dir: &Path, setting: &str, n: usize, design: Value, seed: u64) {
    let cfg = json!({"master_seed": seed, "simulation": {"n": n, "design": design, "setting": setting}});
    write_json(&dir.join("sim.json"), &cfg);
    ok(&["simulate", "--config", dir.join("sim.json").to_str().unwrap(), "--out", dir.join("sim").to_str().unwrap()]);
}

fn analyze_config(seed: u64) -> Value {
    json!({
        "master_seed": seed,
        "data": {"path": "sim/data.csv", "response": "y", "standardize": true},
        "pcs": pcs_block(10, 5)
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn lists_six_settings() {
    let out = ok(&["simulate", "--list-settings"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(names, ["gaussian", "student_t", "block_gaussian", "heteroskedastic", "drop_active", "rule_response"]);
}

#[test]
fn simulate_writes_reproducible_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["simulate", "--setting", "gaussian", "--seed", "9", "--out", a.to_str().unwrap()]);
    ok(&["simulate", "--setting", "gaussian", "--seed", "9", "--out", b.to_str().unwrap()]);
    let csv = fs::read_to_string(a.join(DATA_FILE)).unwrap();
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 250);
    assert!(csv.starts_with("# config_digest="));
    assert!(csv.contains("# master_seed=9\n"));
    assert_eq!(fs::read(a.join(DATA_FILE)).unwrap(), fs::read(b.join(DATA_FILE)).unwrap());
    assert_eq!(fs::read(a.join(TRUTH_FILE)).unwrap(), fs::read(b.join(TRUTH_FILE)).unwrap());
    let truth: TruthFile = serde_json::from_str(&fs::read_to_string(a.join(TRUTH_FILE)).unwrap()).unwrap();
    assert_eq!(truth.master_seed, 9);
    assert_eq!(truth.truth.active_set.len(), 7);
    assert_eq!(truth.feature_names.len(), 55);
}

#[test]
fn analyze_reports_scores_and_matching_digest() {
    let dir = tempfile::tempdir().unwrap();
    simulate_fixture(dir.path(), "gaussian", 80, json!({"kind": "independent", "p": 12}), 1);
    let mut cfg = analyze_config(4);
    write_json(&dir.path().join("analyze.json"), &cfg);
    let out = dir.path().join("out");
    ok(&["analyze", "--config", dir.path().join("analyze.json").to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "17"]);
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join(REPORT_FILE)).unwrap()).unwrap();
    assert_eq!(report["scores"].as_array().unwrap().len(), 12);
    assert_eq!(report["master_seed"], 17);
    assert_eq!(report["halves_averaged"], true);
    assert!(report["intervals"]["selected_count"].is_object());
    // Digest of the config as written, with the seed override applied.
    cfg["master_seed"] = json!(17);
    assert_eq!(report["config_digest"].as_str().unwrap(), digest_of(&cfg).unwrap());
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    simulate_fixture(dir.path(), "gaussian", 60, json!({"kind": "independent", "p": 6}), 2);
    let cfg_path = dir.path().join("c.json");
    let cfg_arg = cfg_path.to_str().unwrap();
    let out_arg = dir.path().join("o");
    let out_arg = out_arg.to_str().unwrap();

    let mut cfg = analyze_config(1);
    cfg["pcs"]["screening"].as_object_mut().unwrap().remove("rule");
    write_json(&cfg_path, &cfg);
    let out = pcs(&["analyze", "--config", cfg_arg, "--out", out_arg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("rule"), "{}", stderr(&out));

    let mut cfg = analyze_config(1);
    cfg["pcs"]["split"]["fraction"] = json!(1.5);
    write_json(&cfg_path, &cfg);
    assert_eq!(pcs(&["analyze", "--config", cfg_arg, "--out", out_arg]).status.code(), Some(2));

    fs::write(dir.path().join("bad.csv"), "a,b,y\n1,2,3\n4,oops,6\n").unwrap();
    let mut cfg = analyze_config(1);
    cfg["data"]["path"] = json!("bad.csv");
    write_json(&cfg_path, &cfg);
    assert_eq!(pcs(&["analyze", "--config", cfg_arg, "--out", out_arg]).status.code(), Some(3));

    cfg["data"]["path"] = json!("missing.csv");
    write_json(&cfg_path, &cfg);
    assert_eq!(pcs(&["analyze", "--config", cfg_arg, "--out", out_arg]).status.code(), Some(3));

    fs::write(dir.path().join("const.csv"), "a,b,y\n1,2,3\n1,5,6\n1,7,1\n").unwrap();
    cfg["data"]["path"] = json!("const.csv");
    write_json(&cfg_path, &cfg);
    assert_eq!(pcs(&["analyze", "--config", cfg_arg, "--out", out_arg]).status.code(), Some(3));

    let mut cfg = analyze_config(1);
    cfg["pcs"]["screening"]["rule"] = json!({"threshold": 0.0});
    write_json(&cfg_path, &cfg);
    assert_eq!(pcs(&["analyze", "--config", cfg_arg, "--out", out_arg]).status.code(), Some(4));

    assert_eq!(pcs(&["analyze", "--config", "/nonexistent/c.json", "--out", out_arg]).status.code(), Some(2));
    assert_eq!(pcs(&["simulate", "--setting", "nope", "--out", out_arg]).status.code(), Some(2));
}

#[test]
fn hypotest_reports_positive_divergence_on_strong_signal() {
    let dir = tempfile::tempdir().unwrap();
    let sim = json!({"master_seed": 3, "simulation": {"n": 150, "design": {"kind": "independent", "p": 16},
        "noise": {"kind": "gaussian", "sd": 0.25}, "misspec": {"kind": "none"}}});
    write_json(&dir.path().join("sim.json"), &sim);
    ok(&["simulate", "--config", dir.path().join("sim.json").to_str().unwrap(), "--out", dir.path().join("sim").to_str().unwrap()]);
    let mut cfg = analyze_config(8);
    cfg["null"] = json!({"kind": "permute_response"});
    write_json(&dir.path().join("h.json"), &cfg);
    let out = dir.path().join("h");
    ok(&["hypotest", "--config", dir.path().join("h.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let result: Value = serde_json::from_str(&fs::read_to_string(out.join("hypotest.json")).unwrap()).unwrap();
    let diff = result["divergence"]["score_difference"].as_array().unwrap();
    assert_eq!(diff.len(), 16);
    let truth: TruthFile = serde_json::from_str(&fs::read_to_string(dir.path().join("sim").join(TRUTH_FILE)).unwrap()).unwrap();
    for &j in &truth.truth.fitted_visible_set {
        assert!(diff[j].as_f64().unwrap() > 0.0, "feature {j}");
    }
    assert_eq!(result["observed"]["config_digest"], result["config_digest"]);
}

#[test]
fn roc_writes_curves_and_single_replicate_average_is_the_curve() {
    let dir = tempfile::tempdir().unwrap();
    // p = 30 gives 5 active and 25 inactive features, so every ROC vertex lies on the 101-point grid.
    simulate_fixture(dir.path(), "gaussian", 100, json!({"kind": "independent", "p": 30}), 6);
    let cfg = json!({
        "master_seed": 2,
        "data": {"path": "sim/data.csv", "response": "y", "standardize": true},
        "truth": "sim/truth.json",
        "pcs": pcs_block(8, 5),
        "replicates": 1,
        "methods": ["pcs", "ols_baseline"],
        "grid_points": 101,
        "count_dropped_as_positives": false
    });
    write_json(&dir.path().join("roc.json"), &cfg);
    let out = dir.path().join("roc");
    ok(&["roc", "--config", dir.path().join("roc.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("roc_summary.json")).unwrap()).unwrap();
    for method in ["pcs", "ols_baseline"] {
        let csv = fs::read_to_string(out.join(format!("roc_{method}.csv"))).unwrap();
        assert!(csv.starts_with("# config_digest="));
        let points: Vec<(f64, f64)> = csv
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("fpr"))
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        assert_eq!(points.first(), Some(&(0.0, 0.0)));
        assert_eq!(points.last(), Some(&(1.0, 1.0)));
        let area: f64 = points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum();
        let m = &summary["methods"][method];
        assert_eq!(m["replicates"], 1);
        assert!((area - m["aucs"][0].as_f64().unwrap()).abs() < 1e-12, "{method}");
        assert_eq!(m["auc_mean"], m["aucs"][0]);
    }
}

#[test]
fn roc_runs_fresh_simulations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "master_seed": 5,
        "simulation": {"n": 100, "design": {"kind": "interactions", "p_base": 5}, "setting": "drop_active"},
        "pcs": pcs_block(5, 5),
        "replicates": 2,
        "methods": ["pcs"],
        "grid_points": 11,
        "count_dropped_as_positives": true
    });
    write_json(&dir.path().join("roc.json"), &cfg);
    let out = dir.path().join("roc");
    ok(&["roc", "--config", dir.path().join("roc.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(out.join("roc_pcs.csv").exists());
    assert!(!out.join("roc_ols_baseline.csv").exists());
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("roc_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["methods"]["pcs"]["aucs"].as_array().unwrap().len(), 2);
    assert_eq!(summary["master_seed"], 5);
}

#[test]
fn docgen_writes_six_sections_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("doc.md");
    ok(&["docgen", "--out", path.to_str().unwrap()]);
    let first = fs::read_to_string(&path).unwrap();
    let headings: Vec<&str> = first.lines().filter(|l| l.starts_with("## ")).collect();
    assert_eq!(
        headings,
        [
            "## Domain problem formulation",
            "## Data collection and storage",
            "## Data cleaning and preprocessing",
            "## Exploratory data analysis",
            "## Modeling and post-hoc analysis",
            "## Interpretation of results",
        ]
    );
    ok(&["docgen", "--out", path.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(&path).unwrap(), first);
}
