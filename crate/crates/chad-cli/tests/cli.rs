//! End-to-end runs of the `chad` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn chad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chad"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn tmp_program(name: &str, text: &str) -> String {
    let path = std::env::temp_dir().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn typecheck_prints_the_type() {
    let out = chad(&["typecheck", &corpus("mul.chad")]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "real 1");
}

#[test]
fn typecheck_rejects_ill_typed_with_exit_one() {
    let path = tmp_program(
        "chad_illtyped.chad",
        "def bad (x: real 1) : real 1 = op add (x, op cnst[1, 2] ())",
    );
    let out = chad(&["typecheck", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn parse_error_has_position_and_json_mode() {
    let path = tmp_program("chad_broken.chad", "def broken (x: real 1) : real 1 = case");
    let out = chad(&["parse", &path]);
    assert_eq!(out.status.code(), Some(1));
    let out = chad(&["--json", "parse", &path]);
    let err = String::from_utf8_lossy(&out.stderr);
    let parsed: serde_json::Value = serde_json::from_str(err.trim()).expect("one-line JSON error");
    assert_eq!(parsed["schema"], 1);
}

#[test]
fn eval_halving_loop() {
    let out = chad(&["eval", &corpus("loop_halving.chad"), "--input", "[8.3]"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "[0.51875]");
}

#[test]
fn eval_undefined_point() {
    let out = chad(&["eval", &corpus("recpr.chad"), "--input", "[0.0]"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "{\"undefined\":true}"
    );
}

#[test]
fn eval_fuel_exhaustion_reports_steps() {
    let out = chad(&["eval", &corpus("diverge_inr.chad"), "--input", "[1.0]", "--fuel", "100"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "{\"fuel_exhausted\":100}"
    );
}

#[test]
fn fuel_env_var_is_overridden_by_flag() {
    let out = Command::new(env!("CARGO_BIN_EXE_chad"))
        .args(["eval", &corpus("diverge_inr.chad"), "--input", "[1.0]", "--fuel", "7"])
        .env("CHAD_FUEL", "50")
        .output()
        .unwrap();
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "{\"fuel_exhausted\":7}"
    );
    let out = Command::new(env!("CARGO_BIN_EXE_chad"))
        .args(["eval", &corpus("diverge_inr.chad"), "--input", "[1.0]"])
        .env("CHAD_FUEL", "50")
        .output()
        .unwrap();
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "{\"fuel_exhausted\":50}"
    );
}

#[test]
fn eval_target_reports_gradient() {
    let out = chad(&[
        "eval-target",
        &corpus("loop_halving.chad"),
        "--input",
        "[8.3]",
        "--cotangent",
        "[1.0]",
    ]);
    assert!(out.status.success());
    let j: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stdout).trim()).unwrap();
    assert_eq!(j["primal"], serde_json::json!([0.51875]));
    assert_eq!(j["gradient"], serde_json::json!([0.0625]));
}

#[test]
fn check_identity_passes_with_exit_zero() {
    let path = tmp_program("chad_id.chad", "def id (x: real 2) : real 2 = x");
    let out = chad(&["check", &path, "--samples", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict            pass"));
}

#[test]
fn check_json_report_has_schema() {
    let out = chad(&[
        "check",
        &corpus("sigmoid.chad"),
        "--samples",
        "20",
        "--json-out",
        "-",
    ]);
    assert!(out.status.success());
    let j: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(j["schema"], 1);
    assert_eq!(j["verdict"], true);
    assert!(j["failures"].as_array().unwrap().is_empty());
}

#[test]
fn ops_list_covers_the_registry() {
    let out = chad(&["ops", "list"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["cnst", "add", "mul", "matvec", "sum", "sigmoid", "norm", "recpr", "normalize", "sign", "decider"] {
        assert!(text.contains(name), "missing op {name}");
    }
    assert!(text.contains("partial"));
    assert!(text.contains("total"));
}

#[test]
fn transform_output_is_readable_back() {
    for file in ["mul.chad", "loop_halving.chad", "loop_scaled.chad", "summatch_abs.chad"] {
        let out = chad(&["transform", &corpus(file)]);
        assert!(out.status.success());
        let text = String::from_utf8_lossy(&out.stdout);
        let body: String = text
            .lines()
            .filter(|l| !l.trim_start().starts_with("--"))
            .collect::<Vec<_>>()
            .join("\n");
        let reread = chad_core::target::reader::read_tgt_term(&body)
            .unwrap_or_else(|e| panic!("{file}: {e}"));
        // against the direct transform
        let src = std::fs::read_to_string(corpus(file)).unwrap();
        let def = chad_core::parser::parse_source(&src).unwrap();
        let direct =
            chad_core::transform::chad_def(&def.ctx, &def.ret, &def.body).unwrap();
        assert!(
            chad_core::target::syntax::alpha_eq_term(&reread, &direct.term),
            "{file}: reread transform is not alpha-equivalent"
        );
    }
}

#[test]
fn transform_json_ast_emits_schema() {
    let out = chad(&["transform", &corpus("mul.chad"), "--emit", "json-ast"]);
    assert!(out.status.success());
    let j: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(j["schema"], 1);
    assert!(j["term"].is_object());
}

#[test]
fn parse_is_canonical_on_corpus() {
    for file in ["loop_halving.chad", "tuple_prj.chad", "summatch_abs.chad"] {
        let once = chad(&["parse", &corpus(file)]);
        assert!(once.status.success());
        let text1 = String::from_utf8_lossy(&once.stdout).into_owned();
        let path = tmp_program("chad_reparse.chad", &text1);
        let twice = chad(&["parse", &path]);
        let text2 = String::from_utf8_lossy(&twice.stdout).into_owned();
        assert_eq!(text1, text2, "{file}: printing is not canonical");
    }
}
