use std::path::PathBuf;
use std::process::{Command, Output};

use formsys_cli::report::{validate, COMMANDS, SCHEMA_VERSION};
use serde_json::Value;

fn system(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("systems").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formsys")).args(args).output().expect("binary runs")
}

/// Runs, checks the exit code and validates the report.
fn report(args: &[&str], code: i32) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    validate(&v).unwrap();
    v
}

#[test]
fn count_two_squares() {
    let sys = system("two_squares.txt");
    let v = report(&["count", "--system", &sys, "--P", "10"], 0);
    assert_eq!(v["result"]["counts"][0]["N"], "1");
    assert_eq!(v["result"]["counts"][0]["lattice_points"], "441");
}

#[test]
fn weyl_single_square_major_arc() {
    let sys = system("single_square.txt");
    let v = report(&["weyl", "--system", &sys, "--alpha", "1/3", "--theta", "1", "--P", "10"], 0);
    let o = &v["result"]["outcome"];
    assert_eq!(o["type"], "MajorArc");
    assert_eq!(o["q"], "3");
    assert_eq!(o["a"], serde_json::json!(["1"]));
    assert_eq!(o["errors"], serde_json::json!(["0"]));
}

#[test]
fn weyl_dependent_pair_certificate() {
    let sys = system("dependent_pair.txt");
    let v = report(&["weyl", "--system", &sys, "--alpha", "1/3,1/5", "--P", "10"], 0);
    assert_eq!(v["result"]["outcome"]["type"], "RankDeficient");
    assert_eq!(v["result"]["outcome"]["b"], serde_json::json!(["2", "-1"]));
}

#[test]
fn weyl_full_dichotomy_has_both_alternatives() {
    let sys = system("quinary.txt");
    let v = report(&["weyl", "--system", &sys, "--alpha", "2/7", "--P", "6", "--k", "1"], 0);
    let d = &v["result"]["dichotomy"];
    assert!(d["alternative_i"].is_boolean() && d["alternative_ii"].is_boolean());
    assert!(v["provenance"]["dichotomy"].is_string());
}

#[test]
fn invariants_bilinear_pair() {
    let sys = system("bilinear_2_2.txt");
    let v = report(&["invariants", "--system", &sys], 0);
    let inv = &v["result"]["invariants"];
    assert_eq!(inv["u"], 2);
    assert_eq!(inv["dim_v_star"]["dim"], 3);
    assert_eq!(inv["dim_v_star"]["consistent"], true);
}

#[test]
fn predict_writes_csv() {
    let sys = system("quinary.txt");
    let dir = std::env::temp_dir().join(format!("formsys-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("predict.csv");
    let csv_s = csv.display().to_string();
    let v = report(
        &["predict", "--system", &sys, "--P", "8", "--P", "16", "--qmax", "10", "--tmax", "4", "--csv", &csv_s],
        0,
    );
    assert_eq!(v["result"]["exponent"], 3);
    assert_eq!(v["result"]["rows"][1]["N"], "20737");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("P,N,prediction,ratio\n8,2401,"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn identical_config_gives_identical_bytes() {
    let sys = system("bilinear_2_2.txt");
    let args = ["expsum", "--system", &sys, "--alpha", "1/4,3/5", "--P", "3", "--P", "4", "--workers", "3"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let args = ["invariants", "--system", &sys, "--seed", "7", "--trials", "20000"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn decimal_input_is_rejected() {
    let sys = system("single_square.txt");
    let out = run(&["expsum", "--system", &sys, "--alpha", "0.5", "--P", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("decimal"));
    let out = run(&["count", "--system", &sys, "--P", "2.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn input_errors_exit_one() {
    assert_eq!(run(&["count", "--system", "/nonexistent/system.txt", "--P", "3"]).status.code(), Some(1));
    assert_eq!(run(&["count", "--P", "3"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    let sys = system("single_square.txt");
    let out = run(&["weyl", "--system", &sys, "--alpha", "1/3", "--P", "10", "--csv", "/tmp/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn undecidable_comparison_exits_three() {
    let sys = system("single_square.txt");
    let v = report(&["weyl", "--system", &sys, "--alpha", "sqrt(2)", "--P", "10", "--precision-bits", "4"], 3);
    assert_eq!(v["status"], "precision_failure");
    assert!(v["error"].is_string());
}

#[test]
fn timing_is_opt_in() {
    let sys = system("two_squares.txt");
    let v = report(&["count", "--system", &sys, "--P", "4"], 0);
    assert!(v.get("timing").is_none());
    let v = report(&["count", "--system", &sys, "--P", "4", "--timing"], 0);
    assert!(v["timing"]["elapsed_ms"].is_number());
}

#[test]
fn corpus_passes() {
    let v = report(&["corpus"], 0);
    assert_eq!(v["result"]["failed"], 0);
    assert!(v["result"]["fixtures"].as_array().unwrap().len() >= 20);
}

#[test]
fn schema_file_matches_validator() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let props = &schema["properties"];
    assert_eq!(props["schema_version"]["const"], SCHEMA_VERSION);
    let commands: Vec<&str> = props["command"]["enum"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    assert_eq!(commands, COMMANDS);
    let required: Vec<&str> = schema["required"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    // Dropping any required key must be caught by the validator.
    let sys = system("two_squares.txt");
    let v = report(&["count", "--system", &sys, "--P", "2"], 0);
    for key in required {
        let mut broken = v.clone();
        broken.as_object_mut().unwrap().remove(key);
        assert!(validate(&broken).is_err(), "validator accepted a report without `{key}`");
    }
}
