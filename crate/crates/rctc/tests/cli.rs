use std::io::Write;
use std::process::Command;

fn rctc(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rctc")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn check_reports_milner_counterexample() {
    let (code, out, _) = rctc(&["check", "a.nil | b.nil", "a.b.nil + b.a.nil"]);
    assert_eq!(code, 1);
    assert!(out.contains("not related"), "{out}");
    assert!(out.contains("{a, b}"), "{out}");
}

#[test]
fn machine_output_is_json() {
    let (code, out, _) = rctc(&["--format", "machine", "check", "--flavor", "hp", "a.nil | b.nil", "b.nil | a.nil"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["related"], true);
    assert_eq!(v["witness_valid"], true);
}

#[test]
fn definitions_and_term_files() {
    let dir = std::env::temp_dir().join(format!("rctc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let defs = dir.join("defs.rctc");
    let term = dir.join("term.rctc");
    writeln!(std::fs::File::create(&defs).unwrap(), "A := a.A").unwrap();
    writeln!(std::fs::File::create(&term).unwrap(), "A | b.nil").unwrap();
    let (code, out, _) = rctc(&["--defs", defs.to_str().unwrap(), "--depth", "3", "explore", &format!("@{}", term.display())]);
    assert_eq!(code, 3, "recursion must hit the depth bound: {out}");
    let (code, out, _) = rctc(&["--defs", defs.to_str().unwrap(), "trace", "A"]);
    assert_eq!(code, 0);
    assert!(out.contains("A  --> {a}  a[1].A"), "{out}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(rctc(&["parse", "a.(nil"]).0, 2);
    assert_eq!(rctc(&["check", "A", "nil"]).0, 2);
    assert_eq!(rctc(&["frobnicate"]).0, 2);
}

#[test]
fn law_suite_passes() {
    let (code, out, err) = rctc(&["laws", "--seed", "7", "--samples", "5"]);
    assert_eq!(code, 0, "{out}{err}");
    assert!(out.contains("0 failing"), "{out}");
    let (code, out, _) = rctc(&["--format", "machine", "laws", "--seed", "7", "--samples", "3", "--only", "monoid"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["results"].as_array().unwrap().len(), 16);
}
