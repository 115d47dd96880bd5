//! End-to-end checks of the installed binary: exit codes, file outputs,
//! golden plot bytes, and schema conformance of the JSON documents.

use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn adswk(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adswk"))
        .args(args)
        .current_dir(dir)
        .env_remove("ADSWK_OUT")
        .output()
        .expect("spawn adswk")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Minimal structural validator for the shipped schema subset: type,
/// required, properties, items. Anything the schema does not mention is
/// deliberately unconstrained.
fn violations(value: &Value, schema: &Value, at: &str, out: &mut Vec<String>) {
    if let Some(ty) = schema.get("type").and_then(Value::as_str) {
        let ok = match ty {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "number" => value.is_number(),
            "integer" => value.is_i64() || value.is_u64(),
            "boolean" => value.is_boolean(),
            other => panic!("schema names unsupported type `{other}`"),
        };
        if !ok {
            out.push(format!("{at}: expected {ty}, got {value}"));
            return;
        }
    }
    if let Some(required) = schema.get("required").and_then(Value::as_array) {
        for key in required {
            let key = key.as_str().expect("required entries are strings");
            if value.get(key).is_none() {
                out.push(format!("{at}: missing required key `{key}`"));
            }
        }
    }
    if let Some(props) = schema.get("properties").and_then(Value::as_object) {
        for (key, sub) in props {
            if let Some(v) = value.get(key) {
                violations(v, sub, &format!("{at}.{key}"), out);
            }
        }
    }
    if let Some(items) = schema.get("items") {
        if let Some(arr) = value.as_array() {
            for (i, v) in arr.iter().enumerate() {
                violations(v, items, &format!("{at}[{i}]"), out);
            }
        }
    }
}

fn assert_schema(value: &Value, schema_file: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(schema_file);
    let schema: Value =
        serde_json::from_slice(&fs::read(&path).expect("schema file readable")).unwrap();
    let mut found = Vec::new();
    violations(value, &schema, "$", &mut found);
    assert!(found.is_empty(), "{schema_file} violations:\n{}", found.join("\n"));
}

#[test]
fn validate_config_accepts_the_reference_file() {
    let dir = tempfile::tempdir().unwrap();
    let reference = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.cfg");
    let out = adswk(&["validate-config", "--config", reference.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).starts_with("ok:"), "unexpected stdout: {}", stdout(&out));
}

#[test]
fn validate_config_rejects_above_bound_closure_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "[model]\nn = 4\n[spectral]\nlambda = 3.25\n").unwrap();
    let out = adswk(&["validate-config", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2), "stdout: {}", stdout(&out));
    let msg = stderr(&out);
    assert!(msg.contains("Breitenlohner-Freedman"), "bound not named: {msg}");
    assert!(msg.contains("2.25"), "bound value missing: {msg}");
}

#[test]
fn trace_writes_parsable_csv_and_schema_valid_events() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = adswk(
        &["trace", "--span", "0,1.6", "--format", "csv,json", "--out", out_dir.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let csv_text = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    let mut lines = csv_text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[..2], ["s", "x"], "header starts with s,x: {header:?}");
    let mut first = true;
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), header.len(), "ragged row: {line}");
        let values: Vec<f64> =
            cells.iter().map(|c| c.parse().unwrap_or_else(|_| panic!("bad cell {c}"))).collect();
        if first {
            assert_eq!(values[0], 0.0, "trace starts at s = 0");
            assert_eq!(values[1], 1.0, "default start sits at x = 1");
            first = false;
        }
    }

    let events: Value =
        serde_json::from_slice(&fs::read(out_dir.join("events.json")).unwrap()).unwrap();
    assert_schema(&events, "trace_events.json");
    assert_eq!(events["boundary_events"], 2, "hits at s = 0.5 and 1.5 inside [0, 1.6]");
    assert_eq!(events["events"][0]["kind"], "Hyperbolic");
}

#[test]
fn trace_svg_matches_the_golden_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = adswk(
        &["trace", "--span", "0,2.2", "--format", "svg", "--out", out_dir.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let got = fs::read(out_dir.join("trace.svg")).unwrap();
    let want = include_bytes!("golden/trace_flat.svg");
    assert_eq!(got, want, "trace.svg drifted from the golden plot");
}

#[test]
fn bad_start_list_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = adswk(&["trace", "--start", "1,2"], dir.path());
    assert_eq!(out.status.code(), Some(2), "stdout: {}", stdout(&out));
    assert!(stderr(&out).contains("2n"), "unhelpful message: {}", stderr(&out));
}

#[test]
fn accept_only_writes_schema_valid_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out =
        adswk(&["accept", "--only", "1,6", "--out", out_dir.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("criterion 01 pass"), "{text}");
    assert!(text.contains("criterion 06 pass"), "{text}");
    let verdicts: Value =
        serde_json::from_slice(&fs::read(out_dir.join("accept.json")).unwrap()).unwrap();
    assert_schema(&verdicts, "verdicts.json");
    assert_eq!(verdicts.as_array().unwrap().len(), 2);
}

#[test]
fn accept_rejects_unknown_criterion_ids() {
    let dir = tempfile::tempdir().unwrap();
    let out = adswk(&["accept", "--only", "11"], dir.path());
    assert_eq!(out.status.code(), Some(2), "stdout: {}", stdout(&out));
    assert!(stderr(&out).contains("valid: 1-10"), "{}", stderr(&out));
}

#[test]
fn experiment_leaves_a_schema_valid_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = adswk(
        &["experiment", "bf_threshold_scan", "--out", out_dir.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let scan_root = out_dir.join("bf_threshold_scan");
    let run_dir = fs::read_dir(&scan_root).unwrap().next().unwrap().unwrap().path();
    let manifest: Value =
        serde_json::from_slice(&fs::read(run_dir.join("manifest.json")).unwrap()).unwrap();
    assert_schema(&manifest, "manifest.json");
    assert_eq!(manifest["complete"], true);
    assert_eq!(manifest["experiment"], "bf_threshold_scan");
    assert!(run_dir.join("scan.json").exists(), "scan.json missing");
    assert!(manifest["wall_clock_s"].is_number(), "wall clock not recorded");
}

#[test]
fn unknown_experiment_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = adswk(&["experiment", "bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2), "stdout: {}", stdout(&out));
    assert!(stderr(&out).contains("available:"), "{}", stderr(&out));
}

#[test]
fn adswk_out_env_sets_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_adswk"))
        .args(["ineq", "--format", "json"])
        .current_dir(dir.path())
        .env("ADSWK_OUT", &out_dir)
        .output()
        .expect("spawn adswk");
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(out_dir.join("ineq.json").exists(), "ineq.json not under ADSWK_OUT");
    let doc: Value =
        serde_json::from_slice(&fs::read(out_dir.join("ineq.json")).unwrap()).unwrap();
    assert!(doc["hardy"]["rel_err"].as_f64().unwrap() < 0.02, "hardy estimate drifted");
}
