use std::path::Path;
use std::process::{Command, Output};

use exc_core::curve::CurveQ;
use serde_json::Value;

const CURVE_11: &str = "0,-1,1,-10,-20";
const CURVE_37: &str = "0,0,1,-1,0";

fn exc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exc"))
        .args(args)
        .env_remove("EXC_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("utf-8 output")
}

fn ok_json(args: &[&str]) -> Value {
    let o = exc(args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    serde_json::from_str(&stdout(&o)).expect("valid JSON")
}

fn assert_schema(name: &str, instance: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema").join(format!("{name}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

#[test]
fn analyze_output_matches_schema() {
    for curve in [CURVE_11, CURVE_37] {
        let v = ok_json(&["analyze", "--curve", curve, "--trace-bound", "2000", "--scan-bound", "60"]);
        assert_schema("analyze", &v);
    }
}

#[test]
fn analyze_auto_scan_bound_uses_floor() {
    let v = ok_json(&["analyze", "--curve", CURVE_11, "--trace-bound", "500"]);
    assert_eq!(v["scan_bound"], 100);
    assert_eq!(v["scan_policy"]["policy"], "auto");
}

#[test]
fn analyze_11_reports_candidate_five_with_comparisons() {
    let v = ok_json(&["analyze", "--curve", CURVE_11, "--scan-bound", "100"]);
    let cands = v["candidates"].as_array().unwrap();
    assert_eq!(cands.len(), 1);
    assert_eq!(cands[0]["ell"], 5);
    assert_eq!(cands[0]["verdict"], "reducible-candidate");
    assert!(!cands[0]["comparisons"].as_array().unwrap().is_empty());
    assert_eq!(v["candidate_product"], "5");
    assert!(v["profile"].is_object());
    assert!(v["disclaimer"].as_str().unwrap().contains("constants profile"));
}

#[test]
fn warm_cache_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let args = ["analyze", "--curve", CURVE_37, "--trace-bound", "3000", "--scan-bound", "80", "--cache-dir", d];
    let cold = exc(&args);
    let warm = exc(&args);
    let parallel = exc(&[&args[..], &["--jobs", "3"]].concat());
    let uncached = exc(&args[..7]);
    assert_eq!(cold.status.code(), Some(0), "{}", stderr(&cold));
    assert_eq!(cold.stdout, warm.stdout);
    assert_eq!(cold.stdout, parallel.stdout);
    assert_eq!(cold.stdout, uncached.stdout);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn cache_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_exc"))
        .args(["analyze", "--curve", CURVE_37, "--trace-bound", "300", "--scan-bound", "40"])
        .env("EXC_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn malformed_curve_json_is_an_input_error() {
    let o = exc(&["analyze", "--curve", "{\"ainvs\": [0, 0,\n 1, -1 0]}"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 2"), "{err}");
    let o = exc(&["analyze", "--curve", "{\"ainvs\": [0, 0, \"x\", -1, 0]}"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ainvs[2]"));
}

#[test]
fn config_violations_are_input_errors() {
    for args in [
        vec!["analyze", "--curve", CURVE_11, "--trace-bound", "99"],
        vec!["analyze", "--curve", CURVE_11, "--scan-bound", "36"],
        vec!["analyze", "--curve", "0,0,0,0,0"],
        vec!["analyze", "--curve", "0,0,0,-1,0"],
        vec!["bounds"],
        vec!["cheb-lab", "--quadratic-range", "100", "--sieve-bound", "3"],
        vec!["gl2-selftest", "--ells", "4"],
    ] {
        let o = exc(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn profile_file_is_used_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("p.json");
    std::fs::write(&good, r#"{"effective_single": 10, "reducible_single_exponent": 6}"#).unwrap();
    let v = ok_json(&["bounds", "--conductor", "11", "--profile", good.to_str().unwrap()]);
    assert_schema("bounds", &v);
    assert_eq!(v["profile"]["reducible_single_exponent"], 6);
    assert!(v["profile"]["effective_single"].as_str().unwrap().starts_with("1.0000"));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"explicit": -1}"#).unwrap();
    assert_eq!(exc(&["bounds", "--conductor", "11", "--profile", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn bounds_ladder_over_rationals() {
    let v = ok_json(&["bounds", "--conductor", "11", "--additive-count", "2"]);
    assert_schema("bounds", &v);
    let entries = v["entries"].as_array().unwrap();
    let get = |f: &str| entries.iter().find(|e| e["formula"] == f).unwrap_or_else(|| panic!("{f}")).clone();
    assert_eq!(get("normalizer_characters")["value"], "16");
    assert_eq!(get("normalizer_characters")["exact"], true);
    for f in ["reducible_single_p3", "reducible_single_p6", "span_exceptional_d4", "effective_product", "explicit_product"] {
        get(f);
    }
    assert!(!entries.iter().any(|e| e["formula"] == "span_exceptional_d5"));
    assert!(v["disclaimer"].as_str().unwrap().contains("default"));
}

#[test]
fn bounds_field_file_with_class_number_warning() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("field.json");
    std::fs::write(
        &f,
        r#"{"invariants": {"degree": 2, "unit_rank": 0, "regulator": 1, "class_number": 9, "abs_disc": 4},
            "conductor": "121", "additive_count": 1, "bootstrap": {"primes": [2, 3, 5], "a": 30, "b": 1}}"#,
    )
    .unwrap();
    let v = ok_json(&["bounds", "--field", f.to_str().unwrap()]);
    assert_schema("bounds", &v);
    assert!(v["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().contains("class number 9")));
    let o = exc(&["bounds", "--field", f.to_str().unwrap(), "--format", "text"]);
    assert!(stdout(&o).contains("warning: class number 9"));
    assert!(stdout(&o).contains("constants profile"));
}

#[test]
fn compare_distinct_curves() {
    let v = ok_json(&["compare", "--first", CURVE_37, "--second", "1,0,0,-1,0", "--bound", "50"]);
    assert_schema("compare", &v);
    let plain = &v["results"][0];
    assert_eq!(plain["result"]["status"], "found");
    assert!(plain["result"]["p"].as_u64().unwrap() < 20);
    assert_eq!(plain["certificate"]["within_bound"], true);
}

#[test]
fn compare_identical_curves_finds_nothing() {
    let v = ok_json(&["compare", "--first", CURVE_11, "--second", CURVE_11, "--bound", "200"]);
    assert_schema("compare", &v);
    for r in v["results"].as_array().unwrap() {
        assert_eq!(r["result"]["status"], "not-found");
    }
}

#[test]
fn twist_pair_separates_only_in_plain_mode() {
    let base = CurveQ::from_i64([0, -1, 1, -10, -20]).unwrap();
    let twist = base.quadratic_twist(5).unwrap();
    let ainvs: Vec<String> = twist.ainvs().iter().map(|a| format!("\"{a}\"")).collect();
    let json = format!(
        r#"{{"ainvs": [{}], "overrides": {{"2": {{"kind": "good", "exp": 0}}, "3": {{"kind": "good", "exp": 0}}}}}}"#,
        ainvs.join(",")
    );
    let v = ok_json(&["compare", "--first", CURVE_11, "--second", &json, "--bound", "500"]);
    assert_schema("compare", &v);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results[0]["mode"], "plain");
    assert_eq!(results[0]["result"]["status"], "found");
    let p = results[0]["result"]["p"].as_u64().unwrap();
    assert_eq!(exc_core::arith::kronecker(5, p as i64), -1);
    assert_eq!(results[1]["mode"], "adams12");
    assert_eq!(results[1]["result"]["status"], "not-found");
}

#[test]
fn cheb_lab_csv_and_json() {
    let o = exc(&["cheb-lab", "--quadratic-range", "50", "--sieve-bound", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert!(csv.starts_with("D,target,least_prime,ratio\n"));
    assert!(csv.contains("\n-4,-1,3,"));
    assert!(csv.contains("\n8,1,7,"));
    assert!(stderr(&o).contains("empirical"));
    let v = ok_json(&["cheb-lab", "--quadratic-range", "50", "--sieve-bound", "1000", "--format", "json"]);
    assert_schema("cheb-lab", &v);
}

#[test]
fn gl2_selftest_passes() {
    let v = ok_json(&["gl2-selftest", "--ells", "5,7,11"]);
    assert_schema("gl2-selftest", &v);
    assert_eq!(v["all_pass"], true);
    let o = exc(&["gl2-selftest", "--ells", "5", "--format", "text"]);
    assert!(stdout(&o).contains("all pass: true"));
}

#[test]
fn text_formats_render() {
    let o = exc(&["analyze", "--curve", CURVE_11, "--trace-bound", "1000", "--scan-bound", "40", "--format", "text"]);
    let s = stdout(&o);
    assert!(s.contains("candidate   l = 5 reducible-candidate"));
    assert!(s.contains("constants profile (default):"));
    let o = exc(&["compare", "--first", CURVE_11, "--second", CURVE_37, "--format", "text", "--bound", "100"]);
    assert!(stdout(&o).contains("plain"));
}
