//! Golden reports of the `corrkit` binary, exit statuses, and agreement
//! of subcommand results with the library calls they wrap.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite the files under `tests/golden`.

use std::path::Path;
use std::process::{Command, Output};

use corrkit::causality::{classify_scenario, DEFAULT_VERTEX_CAP};
use corrkit::process::{is_process_function, QuasiProcessFunction, StochasticProcess};
use corrkit::{Correlation, Num};
use serde_json::Value;

fn corrkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrkit"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .expect("binary runs")
}

fn report(args: &[&str]) -> Value {
    let out = corrkit(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn data(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn golden(name: &str, args: &[&str]) {
    let out = corrkit(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.json"));
    let actual = String::from_utf8(out.stdout).unwrap();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "{name} differs from its golden file");
}

#[test]
fn golden_census() {
    golden("census_2_2_2", &["census", "--scenario", "2,2,2"]);
}

#[test]
fn golden_witness_eval() {
    golden("witness_eval_gynin_bfw", &["witness", "eval", "--name", "gynin", "--input", "tests/data/bfw.json"]);
}

#[test]
fn golden_check_procfn() {
    golden("check_procfn_afbw", &["check-procfn", "--input", "tests/data/afbw.json"]);
    golden("check_procfn_swap_loop", &["check-procfn", "--input", "tests/data/swap_loop.json"]);
}

#[test]
fn golden_dc_verdict() {
    golden("dc_verdict_gyni_vertex", &["dc-verdict", "--input", "tests/data/gyni_vertex.json"]);
}

#[test]
fn golden_robustness() {
    golden("robustness_qform_0.9", &["robustness", "--input", "tests/data/qform_0.9.json"]);
}

#[test]
fn golden_check_causal() {
    golden("check_causal_qform_0.7", &["check-causal", "--input", "tests/data/qform_0.7.json"]);
}

#[test]
fn golden_enumerate() {
    golden("enumerate_procfns_2_2", &["enumerate-procfns", "--inputs", "2,2"]);
}

#[test]
fn census_matches_library() {
    let r = report(&["census", "--scenario", "2,2,2"]);
    let lib = classify_scenario(&corrkit::Scenario::uniform(2, 2, 2).unwrap(), DEFAULT_VERTEX_CAP).unwrap();
    assert_eq!(r["results"], lib.to_json());
    let counts: Vec<u64> = ["2:", "2:1->2", "2:1->2,2->1"].iter().map(|k| r["results"]["classes"][k]["total"].as_u64().unwrap()).collect();
    assert_eq!(counts, vec![16, 96, 144]);
}

#[test]
fn procfn_check_matches_library() {
    let r = report(&["check-procfn", "--input", "tests/data/swap_loop.json"]);
    let f = QuasiProcessFunction::from_json(&data("swap_loop.json")).unwrap();
    let lib = is_process_function(&f).unwrap();
    assert_eq!(r["results"]["process_function"], Value::Bool(lib.is_process_function));
    assert_eq!(r["results"]["witness"], serde_json::to_value(&lib.witness).unwrap());
}

#[test]
fn bfw_scores_one_and_is_outside_the_function_hull() {
    let r = report(&["witness", "eval", "--name", "gynin", "--input", "tests/data/bfw.json"]);
    assert_eq!(r["results"]["value_f64"].as_f64(), Some(1.0));
    let r = report(&["check-consistent", "--input", "tests/data/bfw.json", "--dep"]);
    assert_eq!(r["results"]["consistent"], Value::Bool(true));
    assert_eq!(r["results"]["dep_membership"]["member"], Value::Bool(false));
    let p = StochasticProcess::from_json(&data("bfw.json")).unwrap();
    let y: Vec<Num> = r["results"]["dep_membership"]["certificate"].as_array().unwrap().iter().map(|v| Num::from_json(v).unwrap()).collect();
    let yp: Num = y.iter().zip(p.entries()).map(|(a, b)| a * b).sum();
    assert!(yp.is_positive_eps(0.0));
}

#[test]
fn double_mode_reports_double_values() {
    let r = report(&["--mode", "double", "robustness", "--input", "tests/data/qform_0.9.json"]);
    assert_eq!(r["numeric_mode"], "double");
    assert!((r["results"]["value"].as_f64().unwrap() - 0.25).abs() < 1e-9);
    let p = Correlation::from_json(&data("qform_0.9.json")).unwrap();
    assert!(p.entries().iter().all(Num::is_exact));
}

#[test]
fn quantum_corr_reproduces_the_family() {
    let r = report(&["quantum-corr", "--q", "0.7"]);
    assert_eq!(r["numeric_mode"], "double");
    assert_eq!(r["results"]["validity"]["valid"], Value::Bool(true));
    let table = &r["results"]["correlation"]["table"];
    assert!((table[1][2].as_f64().unwrap() - 0.7).abs() < 1e-12);
    assert!((table[0][3].as_f64().unwrap() - 0.35).abs() < 1e-12);
}

#[test]
fn reproduce_bipartite_section_passes() {
    let out = corrkit(&["reproduce-paper", "--section", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["results"]["failed"], 0);
    let text = String::from_utf8(out.stderr).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);
    let checks = r["results"]["checks"].as_array().unwrap();
    let quantum = checks.iter().find(|c| c["id"] == "4.quantum").unwrap();
    assert!((quantum["actual"]["gyni"].as_f64().unwrap() - 0.53347).abs() < 1e-5);
    assert!((quantum["actual"]["lgyni"].as_f64().unwrap() - 0.78347).abs() < 1e-5);
    let robust = checks.iter().find(|c| c["id"] == "4.robustness").unwrap();
    assert!((robust["actual"]["value"].as_f64().unwrap() - 0.134).abs() < 1e-3);
}

#[test]
fn violator_section_reports_its_failed_claim() {
    let out = corrkit(&["reproduce-paper", "--section", "A"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("FAIL [A.violators]"));
}

#[test]
fn reports_are_reproducible_and_timings_opt_in() {
    let args = ["robustness", "--input", "tests/data/qform_0.7.json"];
    assert_eq!(corrkit(&args).stdout, corrkit(&args).stdout);
    assert!(report(&args).get("timings").is_none());
    let mut timed = args.to_vec();
    timed.push("--timings");
    assert!(report(&timed)["timings"]["total_seconds"].is_number());
}

#[test]
fn out_flag_writes_the_report() {
    let path = std::env::temp_dir().join(format!("corrkit-report-{}.json", std::process::id()));
    let out = corrkit(&["census", "--scenario", "2,2,2", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["results"]["causal"], 112);
    std::fs::remove_file(path).unwrap();
}

#[test]
fn exit_statuses() {
    assert_eq!(corrkit(&["census", "--scenario", "2,2"]).status.code(), Some(2));
    assert_eq!(corrkit(&["check-causal", "--input", "tests/data/missing.json"]).status.code(), Some(2));
    assert_eq!(corrkit(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(corrkit(&["census", "--scenario", "4,2,2"]).status.code(), Some(1));
    assert_eq!(corrkit(&["enumerate-procfns", "--inputs", "2,2,2", "--cap", "10"]).status.code(), Some(1));
}
