use odeprog_cli::run::{self, Flags, Format};
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

const SINE: &str = "system sine {\n  y1' = y2;\n  y2' = -y1;\n  init (0, 1);\n  output y1\n}\nsimulate sine horizon=20 dt=0.05;\n";

fn flags(dir: &Path) -> Flags {
    Flags { out_dir: dir.to_path_buf(), base_dir: dir.to_path_buf(), ..Flags::default() }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_odeprog"))
}

#[test]
fn sine_crosses_zero_at_pi() {
    let dir = tempfile::tempdir().unwrap();
    let out = run::run_source(SINE, &flags(dir.path())).unwrap();
    let sim = &out.simulations[0];
    assert_eq!(sim.method, "taylor");
    assert!(sim.trace.completed());
    assert!(sim.value("y1", PI).unwrap().abs() < 1e-10);
    assert!((sim.value("y2", PI).unwrap() + 1.0).abs() < 1e-10);
    assert!((sim.value("y1", 7.5).unwrap() - 7.5f64.sin()).abs() < 1e-10);
    assert!(sim.value("nope", 1.0).is_none());
    assert!(dir.path().join("sine.csv").exists());
}

#[test]
fn tanh_bound_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run::run_source("verify tanh-bound lo=-10 hi=10 points=401;", &flags(dir.path())).unwrap();
    assert_eq!(out.reports.len(), 1);
    assert!(out.reports[0].report.pass);
    assert!(out.log[0].starts_with("PASS verify tanh-bound"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("00-tanh-bound.json")).unwrap()).unwrap();
    assert_eq!(json["check"], "tanh-bound");
    assert_eq!(json["result"]["report"]["pass"], true);
}

#[test]
fn transform_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = flags(dir.path());
    let src = "witness core = square_atsp;\ntransform atsp-to-alp core out=\"slow.json\";\n";
    let out = run::run_source(src, &f).unwrap();
    let path = dir.path().join("slow.json");
    assert_eq!(out.artifacts, vec![path.clone()]);
    let loaded = run::resolve_witness(&Default::default(), path.to_str().unwrap(), &f).unwrap();
    assert_eq!(loaded.class.name(), "alp");
    assert!(run::verify_witness(&loaded, 2, &f).unwrap().pass);
    let again = run::run_source("witness w = load(\"slow.json\");\nverify witness witness=w cases=2;\n", &f).unwrap();
    assert!(again.all_pass());
}

#[test]
fn csv_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let x = run::run_source(SINE, &flags(a.path())).unwrap();
    let y = run::run_source(SINE, &flags(b.path())).unwrap();
    assert_eq!(x.simulations[0].csv(), y.simulations[0].csv());
    let fa = std::fs::read(a.path().join("sine.csv")).unwrap();
    let fb = std::fs::read(b.path().join("sine.csv")).unwrap();
    assert_eq!(fa, fb);
    let header = String::from_utf8(fa).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "t,y1,y2,length,space,budget");
}

#[test]
fn json_format_writes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let f = Flags { format: Format::Json, ..flags(dir.path()) };
    run::run_source(SINE, &f).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("sine.json")).unwrap()).unwrap();
    assert_eq!(v["columns"], serde_json::json!(["y1", "y2"]));
    assert_eq!(v["samples"].as_array().unwrap().len(), 401);
}

#[test]
fn lowered_columns_include_auxiliary_states() {
    let dir = tempfile::tempdir().unwrap();
    let src = "system s { y' = tanh(1 - y); init (0) }\nsimulate s horizon=3;\n";
    let out = run::run_source(src, &flags(dir.path())).unwrap();
    let sim = &out.simulations[0];
    assert_eq!(sim.columns[0], "y");
    assert!(sim.columns.len() > 1);
    let y = sim.value("y", 3.0).unwrap();
    assert!(y > 0.0 && y < 1.0);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.odp");
    std::fs::write(&ok, "verify tanh-bound points=11;\n").unwrap();
    let status = bin().arg("run").arg(&ok).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&status.stdout).contains("1 check(s), 0 failed"));

    let bad = dir.path().join("bad.odp");
    std::fs::write(&bad, "system s { y' = q }\n").unwrap();
    let status = bin().arg("run").arg(&bad).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("1:17: unknown name"));
}

#[test]
fn binary_reports_a_failing_witness() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("w.json");
    let st = bin().args(["transform", "atsp-to-alp", "square_atsp", "--out"]).arg(&good).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&good).unwrap()).unwrap();
    doc["witness"]["bounds"]["omega"]["terms"] = serde_json::json!([{ "num": 0, "den": 1, "exp": [0, 0] }]);
    let tampered = dir.path().join("bad.json");
    std::fs::write(&tampered, doc.to_string()).unwrap();

    let st = bin().args(["witness", "verify"]).arg(&good).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    let st = bin().args(["witness", "verify"]).arg(&tampered).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&st.stdout).contains("FAIL witness square-alp"));

    let prog = dir.path().join("p.odp");
    std::fs::write(&prog, "witness w = load(\"bad.json\");\nverify witness witness=w;\n").unwrap();
    let st = bin().arg("run").arg(&prog).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&st.stdout).contains("1 check(s), 1 failed"));
}

#[test]
fn fmt_prints_canonical_text() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.odp");
    std::fs::write(&file, "system sine{y1'=y2;y2'=-y1;init(0,1)}simulate sine horizon=20").unwrap();
    let st = bin().arg("fmt").arg(&file).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    let text = String::from_utf8(st.stdout).unwrap();
    assert!(text.contains("  y1' = y2;\n"));
    assert!(text.ends_with("simulate sine horizon=20;\n"), "{text}");
    bin().arg("fmt").arg("--write").arg(&file).status().unwrap();
    assert_eq!(std::fs::read_to_string(&file).unwrap(), text);
}
