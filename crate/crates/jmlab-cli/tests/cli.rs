//! End-to-end tests of the `jmlab` binary: exit-code contract, output
//! formats, and determinism under a fixed seed.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn jmlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jmlab"))
        .args(args)
        .current_dir(dir)
        .env_remove("JMLAB_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn gallery_validate_analyze_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = jmlab(
        &["gallery", "guess", "--dim", "2", "--out", "."],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(dir.path().join("guess_d2.json").exists());

    let out = jmlab(&["validate", "guess_d2.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["passes"], true);

    let out = jmlab(&["analyze", "guess_d2.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    // the guess model violates the naive noise-product bound
    assert_eq!(report["heisenberg_product"]["violated"], true);
    let eps_a = report["noise_a"]["rms_noise"].as_f64().unwrap();
    let eps_b = report["noise_b"]["rms_noise"].as_f64().unwrap();
    assert!(eps_a.abs() < 1e-12);
    assert!((eps_b - 1.0).abs() < 1e-12);

    // CSV flattening
    let out = jmlab(&["analyze", "guess_d2.json", "--format", "csv"], dir.path());
    let text = stdout(&out);
    assert!(text.starts_with("relation,lhs,rhs,slack,holds"));
    assert!(text.contains("universal_valid,"));
}

#[test]
fn validate_rejects_broken_completeness_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    jmlab(&["gallery", "guess", "--out", "."], dir.path());
    let path = dir.path().join("guess_d2.json");
    // halve one POVM element in the file
    let mut scenario: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let elements = scenario["model"]["povm"]["elements"]
        .as_array_mut()
        .unwrap();
    let matrix = elements[0]["matrix"].as_array_mut().unwrap();
    for row in matrix {
        for entry in row.as_array_mut().unwrap() {
            let re = entry[0].as_f64().unwrap();
            let im = entry[1].as_f64().unwrap();
            *entry = serde_json::json!([re / 2.0, im / 2.0]);
        }
    }
    fs::write(&path, scenario.to_string()).unwrap();

    let out = jmlab(&["validate", "guess_d2.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["passes"], false);
    assert!(report["defects"][0]
        .as_str()
        .unwrap()
        .contains("completeness"));
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    let out = jmlab(&["validate", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = jmlab(&["analyze", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_without_model_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    jmlab(&["gallery", "guess", "--out", "."], dir.path());
    let path = dir.path().join("guess_d2.json");
    let mut scenario: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    scenario.as_object_mut().unwrap().remove("model");
    fs::write(&path, scenario.to_string()).unwrap();
    let out = jmlab(&["analyze", "guess_d2.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dilate_round_trips_and_rejects_non_povm_models() {
    let dir = tempfile::tempdir().unwrap();
    jmlab(&["gallery", "guess", "--out", "."], dir.path());
    let out = jmlab(&["dilate", "guess_d2.json", "--verify"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let process: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(process["dimH"], 2);
    assert_eq!(process["dimK"], 2);
    let diag = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(diag.contains("round-trip defect"));

    // a scenario that already carries a process is a usage error
    jmlab(&["gallery", "epr", "--dim", "2", "--out", "."], dir.path());
    let out = jmlab(&["dilate", "epr_d2_uniform.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_gallery_name_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = jmlab(&["gallery", "nonsense", "--out", "."], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gallery_models_all_analyze_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    for (args, file) in [
        (vec!["gallery", "epr", "--dim", "3"], "epr_d3_uniform.json"),
        (
            vec!["gallery", "epr", "--dim", "2", "--xi", "sharp"],
            "epr_d2_sharp.json",
        ),
        (vec!["gallery", "independent"], "independent.json"),
        (vec!["gallery", "unbiased-pair"], "unbiased_pair.json"),
    ] {
        let mut full = args.clone();
        full.extend_from_slice(&["--out", "."]);
        let out = jmlab(&full, dir.path());
        assert!(out.status.success(), "{args:?} failed");
        let out = jmlab(&["analyze", file], dir.path());
        assert_eq!(out.status.code(), Some(0), "analyze {file} failed");
        let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        for record in report["records"].as_array().unwrap() {
            assert_eq!(record["holds"], true, "{file}: {record}");
        }
    }
    // the truncated demo emits a report file rather than a scenario
    let out = jmlab(
        &["gallery", "truncated-ccr", "--cutoff", "12", "--out", "."],
        dir.path(),
    );
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("truncated_ccr_n12.json")).unwrap(),
    )
    .unwrap();
    for rec in report["records"].as_array().unwrap() {
        assert_eq!(rec["holds_within_estimate"], true);
    }
}

#[test]
fn search_is_deterministic_under_seed_flag() {
    let dir = tempfile::tempdir().unwrap();
    let job = r#"{
        "scenario": {
            "dim": 2,
            "A": [[[0,0],[1,0]],[[1,0],[0,0]]],
            "B": [[[0,0],[0,-1]],[[0,1],[0,0]]],
            "psi": [[1,0],[0,0]]
        },
        "config": {
            "objective": "eps_b_given_precise_a",
            "optimizer": "nelder_mead",
            "max_evals": 800,
            "seed": 0,
            "restarts": 2
        }
    }"#;
    fs::write(dir.path().join("job.json"), job).unwrap();
    let run = |seed: &str| {
        let out = jmlab(
            &[
                "search", "--config", "job.json", "--seed", seed, "--out", ".",
            ],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0));
        let trace = fs::read_to_string(dir.path().join("search_trace.csv")).unwrap();
        (stdout(&out), trace)
    };
    let (out1, trace1) = run("42");
    let (out2, trace2) = run("42");
    assert_eq!(out1, out2);
    assert_eq!(trace1, trace2);
    let (out3, _) = run("43");
    assert_ne!(out1, out3, "different seeds should explore differently");

    let result: serde_json::Value = serde_json::from_str(&out1).unwrap();
    let best = result["best_objective"].as_f64().unwrap();
    let bound = result["bound"].as_f64().unwrap();
    assert!(best >= bound - 1e-9);
}

#[test]
fn sweep_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "family": { "type": "random_dilated", "dim_min": 2, "dim_max": 3, "nx": 2, "ny": 2 },
        "instances": 8,
        "seed": 5,
        "mode": "relations"
    }"#;
    fs::write(dir.path().join("cfg.json"), cfg).unwrap();
    let out = jmlab(
        &["sweep", "--config", "cfg.json", "--out", ".", "--jobs", "2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(summary["violations"], 0);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("instance,relation,lhs,rhs,slack,holds"));
    // every universal record of every instance present
    assert_eq!(
        csv.lines().count(),
        1 + summary["rows"].as_u64().unwrap() as usize
    );

    // determinism across --jobs settings
    let rerun = jmlab(
        &["sweep", "--config", "cfg.json", "--out", ".", "--jobs", "1"],
        dir.path(),
    );
    let csv2 = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(rerun.status.code(), Some(0));
    assert_eq!(csv, csv2);
}

#[test]
fn seventeen_digit_floats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    jmlab(&["gallery", "unbiased-pair", "--out", "."], dir.path());
    let text = fs::read_to_string(dir.path().join("unbiased_pair.json")).unwrap();
    // outcome values are ±√2; the 17-digit form must parse back exactly
    let scenario: serde_json::Value = serde_json::from_str(&text).unwrap();
    let x0 = scenario["model"]["povm"]["x_values"][0].as_f64().unwrap();
    assert_eq!(x0, -std::f64::consts::SQRT_2);
    assert!(text.contains("e0") || text.contains("e-1"));
}

#[test]
fn env_seed_is_a_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let job = r#"{
        "scenario": {
            "dim": 2,
            "A": [[[0,0],[1,0]],[[1,0],[0,0]]],
            "B": [[[0,0],[0,-1]],[[0,1],[0,0]]],
            "psi": [[1,0],[0,0]]
        },
        "config": {
            "objective": "eps_b_given_precise_a",
            "optimizer": "random_restart_descent",
            "max_evals": 300,
            "seed": 0,
            "restarts": 2
        }
    }"#;
    fs::write(dir.path().join("job.json"), job).unwrap();
    let with_env = |seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_jmlab"))
            .args(["search", "--config", "job.json", "--out", "."])
            .current_dir(dir.path())
            .env("JMLAB_SEED", seed)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        String::from_utf8_lossy(&out.stdout).into_owned()
    };
    assert_eq!(with_env("7"), with_env("7"));
}
