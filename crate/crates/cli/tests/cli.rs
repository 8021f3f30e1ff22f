use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn liesym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liesym"))
        .args(args)
        .env_remove("LIESYM_FORMAT")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn system_file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".ode").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

const MAG1: &str = "dim 3\n\
ddot x1 = v2*x3 - v3*x2\n\
ddot x2 = v3*x1 - v1*x3\n\
ddot x3 = v1*x2 - v2*x1\n";

#[test]
fn symmetries_of_a_file() {
    let f = system_file(MAG1);
    let out = liesym(&["symmetries", f.path().to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], "liesym.report/v1");
    assert_eq!(v["dim"], 5);
    assert_eq!(
        v["generators"][0],
        serde_json::json!({"tau": "1", "eta": ["0", "0", "0"]})
    );
    assert!(v["comparison"].is_null());
}

#[test]
fn algebra_of_a_case_in_text() {
    let out = liesym(&["algebra", "magnetic_linear"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("algebra: direct_sum(so3, g2_nonabelian)"),
        "{text}"
    );
    assert!(text.contains("comparison: equal"));
}

#[test]
fn format_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_liesym"))
        .args(["cases", "list"])
        .env("LIESYM_FORMAT", "json")
        .output()
        .unwrap();
    let v = json(&out);
    let names: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"monopole"));
    assert!(names.contains(&"quantum_g2"));
}

#[test]
fn run_case_reports_and_is_stable() {
    let args = [
        "cases",
        "run",
        "quantum_g2",
        "--no-numeric",
        "--format",
        "json",
    ];
    let a = liesym(&args);
    let b = liesym(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["pass"], true);
    let sc = &v["expected_algebra"]["structure_constants"];
    assert!(sc
        .as_array()
        .unwrap()
        .contains(&serde_json::json!([1, 3, 3, "-2"])));
    assert!(sc
        .as_array()
        .unwrap()
        .contains(&serde_json::json!([2, 3, 3, "1"])));
}

#[test]
fn reduce_case() {
    let out = liesym(&["reduce", "velocity_coupling", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["xi"], "-2");
    assert_eq!(v["expected_xi"], "-2");
}

#[test]
fn reduce_non_autonomous_fails() {
    let f = system_file("dim 3\nddot x1 = t\nddot x2 = 0\nddot x3 = 0\n");
    let out = liesym(&["reduce", f.path().to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["error"].as_str().unwrap().contains("autonomous"));
}

#[test]
fn verify_file_with_initial_data() {
    let f = system_file(MAG1);
    let path = f.path().to_str().unwrap();
    let out = liesym(&[
        "verify",
        path,
        "--x0",
        "1,0.5,0.2",
        "--v0",
        "0.1,-0.3,0.2",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["generators"].as_array().unwrap().len(), 5);
    let missing = liesym(&["verify", path]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn mismatch_exits_with_one() {
    // Rotations need x-degree 1; the window excludes them.
    let out = liesym(&["symmetries", "magnetic_linear", "--window", "t:0..1,x:0..0"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("window too small"), "{text}");
}

#[test]
fn parse_errors_exit_with_two() {
    let f = system_file("dim 3\nddot x1 = v2*w\nddot x2 = 0\nddot x3 = 0\n");
    let out = liesym(&["symmetries", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2, column 14"), "{err}");
    assert!(err.contains("'w'") || err.contains("`w`"), "{err}");

    assert_eq!(
        liesym(&["cases", "run", "no_such_case"]).status.code(),
        Some(2)
    );
    assert_eq!(liesym(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        liesym(&["symmetries", "monopole", "--window", "t:0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn mode_flag_for_files() {
    let f = system_file("ddot u = 2*u/x^2\n");
    let path = f.path().to_str().unwrap();
    let out = liesym(&[
        "symmetries",
        path,
        "--mode",
        "quantum1d",
        "--window",
        "x:-2..2,u:0..2",
        "--format",
        "json",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(json(&out)["dim"].as_u64().unwrap() >= 3);
    assert_eq!(
        liesym(&["symmetries", "monopole", "--mode", "ode"])
            .status
            .code(),
        Some(2)
    );
}
