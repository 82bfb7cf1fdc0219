use std::process::Command;

use serde_json::Value;
use wiles_defect::cli::{run_with_env, Outcome};

fn run(args: &[&str]) -> Outcome {
    let mut full = vec!["wiles-defect"];
    full.extend_from_slice(args);
    run_with_env(full, None)
}

fn json(out: &Outcome) -> Value {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", out.stdout))
}

fn write_file(text: &str) -> tempfile::NamedTempFile {
    let f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
    std::fs::write(f.path(), text).unwrap();
    f
}

#[test]
fn lemma33_length_five_both_paths() {
    let out = run(&["cotangent", "demo:lemma33", "--point", "E1"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let doc = json(&out);
    assert_eq!(doc["schema_version"], 1);
    let r = &doc["cotangent"][0];
    assert_eq!(r["point"], "E1");
    assert_eq!(r["torsion_length"], 5);
    assert_eq!(r["closed_form_length"], 5);
    assert_eq!(r["free_rank"], 3);
    assert_eq!(r["regular"], true);
    assert_eq!(r["snf"]["divisor_valuations"], serde_json::json!([2, 3]));
}

#[test]
fn empty_sigma_gives_zero_and_regular() {
    let out = run(&[
        "cotangent",
        "demo:lemma33",
        "--sigma",
        "[]",
        "--point",
        "E0",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let r = &json(&out)["cotangent"][0];
    assert_eq!(r["torsion_length"], 0);
    assert_eq!(r["closed_form_length"], 0);
    assert_eq!(r["regular"], true);
}

#[test]
fn point_outside_v_sigma_names_the_precondition() {
    let out = run(&[
        "cotangent",
        "demo:lemma33",
        "--sigma",
        "[]",
        "--point",
        "E1",
    ]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("V_Σ"), "{}", out.stderr);
}

#[test]
fn malformed_subset_is_a_parse_error() {
    let out = run(&["cotangent", "demo:lemma33", "--sigma", "{3}"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("--sigma"), "{}", out.stderr);

    let f = write_file("n = 2\ng = 0\nsigma = [3]\n");
    let out = run(&["cotangent", f.path().to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(
        out.stderr.contains("line 3") && out.stderr.contains("`sigma`"),
        "{}",
        out.stderr
    );
}

#[test]
fn cotangent_b_demo_covers_the_min_boundary() {
    let out = run(&["cotangent-b", "demo:lemma34"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let doc = json(&out);
    let lengths: Vec<(String, u64)> = doc["cotangent"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            (
                r["point"].as_str().unwrap().to_string(),
                r["torsion_length"].as_u64().unwrap(),
            )
        })
        .collect();
    assert_eq!(
        lengths,
        vec![
            ("boundary".into(), 4),
            ("saturated".into(), 4),
            ("unsaturated".into(), 3)
        ]
    );
    let out = run(&["cotangent-b", "demo:lemma34", "--s", "2"]);
    assert_eq!(out.code, 2, "s = 2 puts the points in the wrong stratum");
}

#[test]
fn psi_and_defect_on_the_canonical_family() {
    let out = run(&["psi", "demo:lemma33", "--point", "E1"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(json(&out)["psi"][0]["psi_length"], 5);

    let out = run(&["defect", "demo:lemma33"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    for d in json(&out)["defects"].as_array().unwrap() {
        assert_eq!(d["defect"], 0);
        assert_eq!(d["phi_length"], d["psi_length"]);
    }
}

#[test]
fn negative_defect_exits_one() {
    let f = write_file(
        "n = 1\n[points.P]\na = [\"zero\"]\nb = [2]\n\n[family]\nbase = \"table\"\n\n[family.mu]\n\"[]\" = 1\n\"[1]\" = 1\n",
    );
    let out = run(&["defect", f.path().to_str().unwrap(), "--sigma", "[1]"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let f = write_file(
        "n = 1\n[points.P]\na = [3]\nb = [\"zero\"]\n\n[family]\nbase = \"table\"\n\n[family.mu]\n\"[]\" = 1\n\"[1]\" = 1\n\n[family.base_psi]\n\"[1]\" = 9\n",
    );
    let out = run(&["defect", f.path().to_str().unwrap(), "--sigma", "[1]"]);
    assert_eq!(out.code, 1, "{}", out.stdout);
    assert_eq!(json(&out)["defects"][0]["defect"], -6);
    assert!(out.stderr.contains("property (2)"));
}

#[test]
fn totally_complex_descent_is_all_forced() {
    let out = run(&["descent", "demo:totally-complex"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let cert = &json(&out)["descent"];
    assert_eq!(cert["all_forced"], true);
    assert_eq!(cert["steps"].as_array().unwrap().len(), 7);
    let conclusion = cert["conclusion"].as_object().unwrap();
    assert_eq!(conclusion.len(), 8);
    assert!(conclusion.values().all(|v| v == 1));
}

#[test]
fn synthetic_jump_fails_with_separated_step() {
    let out = run(&["descent", "demo:synthetic-jump"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("μ_T ≤ μ_∅"), "{}", out.stderr);
    let doc = json(&out);
    assert!(doc.get("descent").is_none());
    let step = doc["diagnostic_steps"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["sigma_prime"] == serde_json::json!([2]))
        .expect("step to {2}")
        .clone();
    assert_eq!(
        (step["lower_bound"].as_i64(), step["upper_bound"].as_i64()),
        (Some(5), Some(4))
    );
}

#[test]
fn missing_mu_is_a_config_error() {
    let f = write_file("n = 2\n[family]\nbase = \"canonical\"\n");
    let out = run(&["descent", f.path().to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("configuration error"), "{}", out.stderr);

    let f = write_file("n = 2\n");
    let out = run(&["descent", f.path().to_str().unwrap()]);
    assert_eq!(out.code, 2);
}

#[test]
fn descent_options_are_respected() {
    let out = run(&[
        "descent",
        "demo:totally-complex",
        "--order",
        "3,1,2",
        "--seed",
        "9",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let doc = json(&out);
    assert_eq!(doc["seed"], 9);
    assert_eq!(
        doc["descent"]["removal_order"],
        serde_json::json!([3, 1, 2])
    );
    let out = run(&["descent", "demo:totally-complex", "--order", "1,1,2"]);
    assert_eq!(out.code, 2);
}

#[test]
fn fuzz_is_deterministic_and_replayable() {
    let a = run(&["fuzz", "--trials", "60", "--seed", "3"]);
    let b = run(&["fuzz", "--trials", "60", "--seed", "3"]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["fuzz", "--trials", "60", "--seed", "4"]);
    assert_ne!(json(&a)["fuzz"]["digest"], json(&c)["fuzz"]["digest"]);
}

#[test]
fn corrupted_oracle_emits_a_counterexample_file() {
    let out = run(&["fuzz", "--trials", "10", "--corrupt-oracle"]);
    assert_eq!(out.code, 1);
    let doc = json(&out);
    let ce = &doc["fuzz"]["first_counterexample"];
    assert_eq!(ce["trial"], 0);
    assert_eq!(ce["check"], "cotangent_a");
    let f = write_file(ce["instance_file"].as_str().unwrap());
    let replay = run(&[
        "cotangent",
        f.path().to_str().unwrap(),
        "--point",
        "counterexample",
    ]);
    assert_eq!(replay.code, 0, "{}", replay.stderr);
    let r = &json(&replay)["cotangent"][0];
    assert_eq!(r["torsion_length"], r["closed_form_length"]);
}

#[test]
fn bad_fuzz_bounds_are_rejected() {
    assert_eq!(run(&["fuzz", "--n-max", "0"]).code, 2);
    assert_eq!(run(&["fuzz", "--trials", "0"]).code, 2);
}

/// Every numeric CSV cell equals the corresponding JSON field.
fn csv_matches_json(args: &[&str], array: &str) {
    let j = run(args);
    let mut csv_args = vec!["--out", "csv"];
    csv_args.extend_from_slice(args);
    let c = run(&csv_args);
    assert_eq!(j.code, c.code);
    let doc = json(&j);
    let rows: Vec<Value> = match array {
        "steps" => doc["descent"]["steps"].as_array().unwrap().clone(),
        "checks" => doc["fuzz"]["checks"].as_array().unwrap().clone(),
        other => doc[other].as_array().unwrap().clone(),
    };
    let mut reader = csv::Reader::from_reader(c.stdout.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), rows.len());
    let mut compared = 0;
    for (rec, row) in records.iter().zip(&rows) {
        for (h, cell) in headers.iter().zip(rec.iter()) {
            if let Ok(n) = cell.parse::<i64>() {
                if let Some(v) = row.get(h) {
                    assert_eq!(v.as_i64(), Some(n), "field {h}");
                    compared += 1;
                }
            }
        }
    }
    assert!(compared > 0);
}

#[test]
fn csv_and_json_agree() {
    csv_matches_json(&["cotangent-b", "demo:lemma34"], "cotangent");
    csv_matches_json(&["defect", "demo:lemma33"], "defects");
    csv_matches_json(&["psi", "demo:lemma33"], "psi");
    csv_matches_json(&["descent", "demo:totally-complex"], "steps");
    csv_matches_json(&["fuzz", "--trials", "20"], "checks");
}

fn assert_integers(v: &Value) {
    match v {
        Value::Number(n) => assert!(n.is_i64() || n.is_u64(), "non-integer number {n}"),
        Value::Array(xs) => xs.iter().for_each(assert_integers),
        Value::Object(m) => m.values().for_each(assert_integers),
        _ => {}
    }
}

#[test]
fn json_round_trips_losslessly() {
    for args in [
        &["cotangent", "demo:lemma33"][..],
        &["descent", "demo:totally-complex"][..],
        &["fuzz", "--trials", "20"][..],
    ] {
        let out = run(args);
        let v = json(&out);
        assert_integers(&v);
        let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(again, v);
    }
}

#[test]
fn backend_precedence_through_the_environment() {
    let f = write_file("n = 1\n[points.P]\na = [\"zero\"]\nb = [2]\n");
    let path = f.path().to_str().unwrap();
    let out = run_with_env(["wiles-defect", "cotangent", path], Some("poly:7".into()));
    assert_eq!(json(&out)["backend"], "poly:7");
    let out = run_with_env(
        ["wiles-defect", "--backend", "rational:3", "cotangent", path],
        Some("poly:7".into()),
    );
    assert_eq!(json(&out)["backend"], "rational:3");
    let out = run_with_env(
        ["wiles-defect", "cotangent", "demo:lemma33"],
        Some("poly:7".into()),
    );
    assert_eq!(json(&out)["backend"], "rational:5");
    let out = run_with_env(["wiles-defect", "cotangent", path], Some("poly:6".into()));
    assert_eq!(out.code, 2);
}

#[test]
fn text_output_and_demo_listing() {
    let out = run(&["--out", "text", "demo", "synthetic-jump"]);
    assert_eq!(out.code, 1);
    assert!(out.stdout.contains("5 > 4"), "{}", out.stdout);
    let out = run(&["demo"]);
    assert_eq!(out.code, 0);
    for name in ["lemma33", "lemma34", "totally-complex", "synthetic-jump"] {
        assert!(out.stdout.contains(name));
    }
    let out = run(&["demo", "lemma34", "--show"]);
    assert!(out.stdout.contains("[points.saturated]"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_wiles-defect");
    let status = |args: &[&str]| {
        Command::new(bin)
            .args(args)
            .env_remove("WILES_DEFECT_BACKEND")
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(status(&["demo", "totally-complex"]), Some(0));
    assert_eq!(status(&["demo", "synthetic-jump"]), Some(1));
    assert_eq!(status(&["cotangent", "no/such/file.toml"]), Some(2));
    assert_eq!(status(&["--out", "yaml", "demo"]), Some(2));
}
