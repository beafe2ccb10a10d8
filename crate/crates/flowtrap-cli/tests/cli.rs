//! End-to-end runs of the `flowtrap` binary: output shape and exit codes.

use std::path::Path;
use std::process::{Command, Output};

const N2_INSTANCE: &str = "2\n1 2\n2 3\n3 3\n4 4\n";

fn flowtrap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowtrap")).args(args).env("FLOWTRAP_THREADS", "1").output().expect("spawn flowtrap")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_instance(dir: &Path) -> String {
    let path = dir.join("instance.txt");
    std::fs::write(&path, N2_INSTANCE).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn solve_prints_point_gradient_and_counts() {
    let o = flowtrap(&["solve", "--mode", "unconstrained", "--family", "quadratic", "--d", "2", "--eps", "1e-3", "--L", "1", "--x0", "1,1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    for key in ["point:", "grad_norm:", "value_queries:", "gradient_queries:"] {
        assert!(out.contains(key), "missing {key} in {out}");
    }
    let g: f64 = out.lines().find_map(|l| l.strip_prefix("grad_norm: ")).unwrap().parse().unwrap();
    assert!(g <= 1e-3);
}

#[test]
fn solve_json_is_parseable() {
    let o = flowtrap(&["solve", "--mode", "gd", "--family", "multiwell", "--eps", "1e-2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["grad_norm"].as_f64().unwrap() <= 1e-2);
    assert_eq!(v["point"].as_array().unwrap().len(), 2);
}

#[test]
fn sweep_writes_csv_and_reports_slope() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = flowtrap(&[
        "sweep", "--solver", "gd", "--family", "huber-slope", "--eps", "0.1,0.03,0.01,0.003,0.001", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "eps,value_queries,gradient_queries,grad_norm,wall_ms");
    assert_eq!(csv.lines().count(), 6);
    assert!(stderr(&o).contains("slope"));
}

#[test]
fn sweep_with_too_few_eps_is_a_usage_error() {
    let o = flowtrap(&["sweep", "--solver", "gd", "--family", "huber-slope", "--eps", "0.1,0.03"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hardgen_exports_landscape() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path());
    let out = dir.path().join("landscape.csv");
    let o = flowtrap(&["hardgen", "--iter", &inst, "--out", out.to_str().unwrap(), "--step", "0.25"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x,y,value,gx,gy");
    // M = 3 * 2^5 + 5 = 101; samples at 0, 0.25, ..., 101 give 405 per axis.
    assert_eq!(csv.lines().count(), 1 + 405 * 405);
}

#[test]
fn verify_hard_accepts_a_valid_instance() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path());
    let o = flowtrap(&["verify-hard", "--iter", &inst, "--step", "0.05"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("offenders: 0"));
}

#[test]
fn verify_hard_flags_a_missing_connector() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path());
    let o = flowtrap(&["verify-hard", "--iter", &inst, "--omit-connector", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("offenders found; first at ("), "{}", stderr(&o));
}

#[test]
fn malformed_instance_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "2\n1 2\n2 x\n").unwrap();
    let o = flowtrap(&["verify-hard", "--iter", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn reduce_finds_a_stationary_point() {
    let o = flowtrap(&["reduce", "--family", "wave", "--eps", "0.1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["outcome"]["kind"], "stationary-point");
}

#[test]
fn reduce_reports_taylor_witness_for_understated_smoothness() {
    let o = flowtrap(&["reduce", "--family", "wave", "--eps", "0.1", "--L", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Taylor inequality violated between"), "{}", stderr(&o));
}

#[test]
fn reduce_reports_boundedness_witness_for_understated_bound() {
    let o = flowtrap(&["reduce", "--family", "wave", "--eps", "0.1", "--B", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("boundedness violated at"), "{}", stderr(&o));
}

#[test]
fn adversary_demo_spends_all_queries() {
    let o = flowtrap(&["adversary-demo", "--n", "6", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["queries"], 64);
    assert_eq!(v["consistent_extension"], true);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(flowtrap(&[]).status.code(), Some(2));
    assert_eq!(flowtrap(&["solve", "--family", "quadratic"]).status.code(), Some(2));
    assert_eq!(flowtrap(&["solve", "--family", "quadratic", "--eps", "-1"]).status.code(), Some(2));
    assert_eq!(flowtrap(&["adversary-demo", "--n", "0"]).status.code(), Some(2));
}

#[test]
fn unknown_family_is_rejected_at_parse_time() {
    let o = flowtrap(&["solve", "--family", "rosenbrock", "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown family"));
}

#[test]
fn thread_cap_is_read_from_the_environment() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_flowtrap"))
            .args(["adversary-demo", "--n", "3"])
            .env("FLOWTRAP_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(run("0").status.code(), Some(0));
    assert_eq!(run("2").status.code(), Some(0));
    assert_eq!(run("many").status.code(), Some(2));
}
