use std::f64::consts::LN_2;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const INDEPENDENCE: &str = r#"{
  "z": ["00", "01", "10", "11"],
  "f": [[0, 0, 1, 1], [0, 1, 0, 1]],
  "beta": {"kind": "classical", "nu": [1, 1, 1, 1]}
}"#;

const POINT3: &str = r#"{"z": ["a", "b", "c"], "f": [], "beta": {"kind": "classical", "nu": [1, 1, 1]}}"#;

const FULL: &str = r#"{"z": ["a", "b", "c"], "f": [[1, 0, 0], [0, 1, 0]],
  "beta": {"kind": "entropy_quadratic", "alpha": [1, 1, 1]}}"#;

struct Dir(TempDir);

impl Dir {
    fn new() -> Self {
        Dir(tempfile::tempdir().unwrap())
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.0.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }
}

fn bregmax(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bregmax"));
    cmd.args(args).env_remove("BREGMAX_SEED");
    if let Some(s) = env_seed {
        cmd.env("BREGMAX_SEED", s);
    }
    cmd.output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: stdout {} stderr {}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn maximize_independence() {
    let d = Dir::new();
    let inst = d.file("ind.json", INDEPENDENCE);
    let out = bregmax(&["maximize", "-i", p(&inst), "--seed", "7"], None);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["schema"], "bregmax/1");
    assert!((num(&r["global_value"]) - LN_2).abs() <= 1e-5);
    assert_eq!(r["global_support"].as_array().unwrap().len(), 2);
}

#[test]
fn bbar_of_a_direction() {
    let d = Dir::new();
    let inst = d.file("p3.json", POINT3);
    let u = d.file("u.json", r#"{"u": [1, -0.5, -0.5]}"#);
    let out = bregmax(&["bbar", "-i", p(&inst), "-u", p(&u)], None);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!((num(&r["value"]) - 3f64.ln()).abs() <= 1e-4);
    assert!((num(&r["closed_form"]) - 3f64.ln()).abs() <= 1e-10);
}

#[test]
fn bbar_search_and_trivial_kernel() {
    let d = Dir::new();
    let ind = d.file("ind.json", INDEPENDENCE);
    let r = json(&bregmax(&["bbar", "-i", p(&ind), "--starts", "8"], None));
    assert!((num(&r["value"]) - LN_2).abs() <= 1e-6);
    let full = d.file("full.json", FULL);
    let r = json(&bregmax(&["bbar", "-i", p(&full)], None));
    assert_eq!(r["trivial_kernel"], true);
    assert_eq!(num(&r["value"]), 0.0);
}

#[test]
fn project_a_member() {
    let d = Dir::new();
    let inst = d.file("ind.json", INDEPENDENCE);
    // product of marginals (0.3, 0.7) x (0.6, 0.4)
    let pm = d.file("pm.json", r#"{"weights": [0.18, 0.12, 0.42, 0.28]}"#);
    let out = bregmax(&["project", "-i", p(&inst), "-P", p(&pm)], None);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(num(&r["value"]).abs() < 1e-12);
    for (a, b) in r["pi"].as_array().unwrap().iter().zip([0.18, 0.12, 0.42, 0.28]) {
        assert!((num(a) - b).abs() < 1e-11);
    }
    assert_eq!(r["face"].as_array().unwrap().len(), 4);
}

#[test]
fn divergence_reports_direction() {
    let d = Dir::new();
    let inst = d.file("ind.json", INDEPENDENCE);
    let pm = d.file("pm.json", r#"{"weights": [0.5, 0, 0, 0.5]}"#);
    let r = json(&bregmax(&["divergence", "-i", p(&inst), "-P", p(&pm)], None));
    assert!((num(&r["value"]) - LN_2).abs() < 1e-11);
    let u: Vec<f64> = r["direction"].as_array().unwrap().iter().map(num).collect();
    assert_eq!(u, vec![0.5, -0.5, -0.5, 0.5]);
}

#[test]
fn reruns_are_byte_identical() {
    let d = Dir::new();
    let inst = d.file("ind.json", INDEPENDENCE);
    let a = bregmax(&["maximize", "-i", p(&inst), "--seed", "11"], None);
    let b = bregmax(&["maximize", "-i", p(&inst), "--seed", "11"], None);
    assert_eq!(a.stdout, b.stdout);
    let p3 = d.file("p3.json", POINT3);
    let a = bregmax(&["conjecture-scan", "-i", p(&p3), "--trials", "5", "--starts", "2"], Some("5"));
    let b = bregmax(&["conjecture-scan", "-i", p(&p3), "--trials", "5", "--starts", "2"], Some("5"));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn seed_from_environment() {
    let d = Dir::new();
    let inst = d.file("ind.json", INDEPENDENCE);
    let r = json(&bregmax(&["maximize", "-i", p(&inst), "--starts", "4"], Some("123")));
    assert_eq!(r["seed"], 123);
    let r = json(&bregmax(&["maximize", "-i", p(&inst), "--starts", "4", "--seed", "9"], Some("123")));
    assert_eq!(r["seed"], 9);
}

#[test]
fn table_output() {
    let d = Dir::new();
    let inst = d.file("p3.json", POINT3);
    let out = bregmax(&["maximize", "-i", p(&inst), "--starts", "2", "--table"], None);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("schema") && l.ends_with("bregmax/1")));
}

#[test]
fn input_errors_exit_with_one() {
    let d = Dir::new();
    let short_row = d.file("bad.json", r#"{"z": ["a", "b"], "f": [[1]], "beta": {"kind": "classical", "nu": [1, 1]}}"#);
    let out = bregmax(&["maximize", "-i", p(&short_row)], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("f[0]"));

    let unknown = d.file("unk.json", r#"{"z": ["a"], "f": [], "beta": {"kind": "classical", "nu": [1]}, "g": 0}"#);
    assert_eq!(bregmax(&["maximize", "-i", p(&unknown)], None).status.code(), Some(1));
    assert_eq!(bregmax(&["maximize", "-i", "/nonexistent.json"], None).status.code(), Some(1));
    assert_eq!(bregmax(&["maximize"], None).status.code(), Some(1));

    let inst = d.file("ind.json", INDEPENDENCE);
    let off_kernel = d.file("u.json", r#"{"u": [1, -1, 0, 0]}"#);
    assert_eq!(bregmax(&["bbar", "-i", p(&inst), "-u", p(&off_kernel)], None).status.code(), Some(1));
    let not_pm = d.file("pm.json", r#"{"weights": [0.5, 0.5, 0.5, 0.5]}"#);
    assert_eq!(bregmax(&["project", "-i", p(&inst), "-P", p(&not_pm)], None).status.code(), Some(1));
    assert_eq!(bregmax(&["maximize", "-i", p(&inst), "--tol", "eps=1"], None).status.code(), Some(1));
}

#[test]
fn failed_checks_exit_with_two() {
    let d = Dir::new();
    let inst = d.file("p3.json", POINT3);
    // a loose root tolerance cannot meet the partition residual bound
    let out = bregmax(&["verify", "-i", p(&inst), "--starts", "2", "--tol", "root_abs=0.01"], None);
    assert_eq!(out.status.code(), Some(2));
    let r = json(&out);
    assert_eq!(r["passed"], false);
}

#[test]
fn verify_named_instances() {
    let d = Dir::new();
    for (text, expected) in [(INDEPENDENCE, LN_2), (POINT3, 3f64.ln()), (FULL, 0.0)] {
        let inst = d.file("inst.json", text);
        let out = bregmax(&["verify", "-i", p(&inst), "--starts", "8", "--seed", "1"], None);
        let r = json(&out);
        let failed: Vec<&Value> = r["checks"].as_array().unwrap().iter().filter(|c| c["passed"] != true).collect();
        assert!(failed.is_empty(), "{failed:?}");
        assert_eq!(out.status.code(), Some(0));
        assert!((num(&r["max_divergence"]) - expected).abs() <= 1e-6);
        assert!((num(&r["max_bbar"]) - expected).abs() <= 1e-6);
        let names: Vec<&str> = r["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
        assert_eq!(names, bregmax_cli::CHECK_NAMES);
    }
}
