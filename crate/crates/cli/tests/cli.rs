use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const EPL: &str = include_str!("../../core/fixtures/epl.spl");

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monodelta"))
        .args(args)
        .env_remove("MONODELTA_FORMAT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid json")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_reports_shape() {
    let dir = TempDir::new().unwrap();
    let epl = write(&dir, "epl.spl", EPL);
    let o = run(&["--json", "check", s(&epl)]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["products"], 12);
    assert_eq!(v["deltas"], 10);
    assert_eq!(v["unambiguous"], true);
}

#[test]
fn format_from_environment() {
    let dir = TempDir::new().unwrap();
    let epl = write(&dir, "epl.spl", EPL);
    let o = Command::new(env!("CARGO_BIN_EXE_monodelta"))
        .args(["products", s(&epl)])
        .env("MONODELTA_FORMAT", "json")
        .output()
        .unwrap();
    assert_eq!(json(&o).as_array().unwrap().len(), 12);
}

#[test]
fn ambiguity_is_a_finding() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "amb.spl",
        "features A, B; constraint true; base { class C extends Object { } }
         delta D1 when A { modifies C { adds int f; } }
         delta D2 when B { modifies C { adds int f; } }
         order {D1, D2};",
    );
    let o = run(&["check", s(&f)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("ambiguous"));
    assert_eq!(run(&["refactor", s(&f), "-d", "inc"]).status.code(), Some(1));
}

#[test]
fn parse_error_has_position() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "bad.spl", "features A;\nconstraint B;\n");
    let o = run(&["check", s(&f)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.spl:2:12"), "{err}");
}

#[test]
fn generate_variant() {
    let dir = TempDir::new().unwrap();
    let epl = write(&dir, "epl.spl", EPL);
    let o = run(&["generate", s(&epl), "--product", "Lit,Print,Neg"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("class Neg extends Exp"));
    assert!(!text.contains("class Add"));

    let invalid = run(&["generate", s(&epl), "--product", "Lit,Print,Eval1,Eval2"]);
    assert_eq!(invalid.status.code(), Some(1));
    assert_eq!(run(&["generate", s(&epl), "--product", "Nope"]).status.code(), Some(2));
}

#[test]
fn refactor_round_trip_is_equivalent() {
    let dir = TempDir::new().unwrap();
    let epl = write(&dir, "epl.spl", EPL);
    for d in ["inc", "dec"] {
        let out = dir.path().join(format!("{d}.spl"));
        let o = run(&["refactor", s(&epl), "--direction", d, "--cleanup", "-o", s(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let eq = run(&["equiv", s(&epl), s(&out)]);
        assert_eq!(eq.status.code(), Some(0));
        assert!(stdout(&eq).starts_with("equivalent"));
    }
    let classes = json(&run(&["--json", "classify", s(&dir.path().join("inc.spl"))]));
    let holds: Vec<&str> = classes["classes"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["holds"] == true)
        .map(|c| c["class"].as_str().unwrap())
        .collect();
    assert_eq!(holds, ["increasing", "pseudo-increasing"]);
}

#[test]
fn projection_is_not_equivalent() {
    let dir = TempDir::new().unwrap();
    let epl = write(&dir, "epl.spl", EPL);
    let out = dir.path().join("p.spl");
    assert_eq!(run(&["project", s(&epl), "--keep", "!Neg", "-o", s(&out)]).status.code(), Some(0));
    let eq = run(&["--json", "equiv", s(&epl), s(&out)]);
    assert_eq!(eq.status.code(), Some(1));
    assert_eq!(json(&eq)["witnesses"].as_array().unwrap().len(), 6);
    let bad = run(&["project", s(&epl), "--keep", "Unknown"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn fuzz_small_batch() {
    let o = run(&["--json", "fuzz", "--count", "10", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["checked"], 20);
    assert!(v["failures"].as_array().unwrap().is_empty());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["refactor", "x.spl", "-d", "sideways"]).status.code(), Some(2));
    assert_eq!(run(&["check", "/nonexistent/file.spl"]).status.code(), Some(2));
}
