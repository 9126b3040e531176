use std::path::Path;
use std::process::{Command, Output};

fn qaoa_reduce(args: &[&str], out_root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qaoa-reduce"))
        .args(args)
        .env("QAOA_REDUCE_OUT", out_root)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const TRIANGLE: &str = r#"{"n": 3, "edges": [[0, 1, 1.0], [1, 2, 1.0], [0, 2, 1.0]], "family": "complete"}"#;

#[test]
fn reduce_prints_accounting() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "k3.json", TRIANGLE);
    let o = qaoa_reduce(&["reduce", "--instance", &inst], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    for line in ["n = 3", "M = 4", "m = 2", "verdict = reducible"] {
        assert!(text.contains(line), "{text}");
    }
}

#[test]
fn reduce_weight_constrained_path() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(
        dir.path(),
        "p4.json",
        r#"{"n": 4, "edges": [[0, 1, 1.0], [1, 2, 2.0], [2, 3, 0.5]], "constraint": {"kind": "hamming_weight", "k": 1}}"#,
    );
    let text = stdout(&qaoa_reduce(&["reduce", "--instance", &inst], dir.path()));
    assert!(text.contains("n = 4") && text.contains("M = 4") && text.contains("m = 2"), "{text}");
}

#[test]
fn certify_reports_pass() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "k3.json", TRIANGLE);
    let params = write(dir.path(), "p.json", r#"{"gammas": [0.3, 0.9], "betas": [0.7, 0.2]}"#);
    let o = qaoa_reduce(&["certify", "--instance", &inst, "--params", &params], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.trim_end().ends_with("PASS"), "{text}");
    let json: serde_json::Value = serde_json::from_str(text.trim_end().trim_end_matches("PASS")).unwrap();
    assert!(json["fidelity_offset"].as_f64().unwrap().abs() <= 1e-10);
    assert_eq!(json["M"], 4);
}

#[test]
fn certify_rejects_bad_params() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "k3.json", TRIANGLE);
    let params = write(dir.path(), "p.json", r#"{"gammas": [0.3], "betas": [0.7, 0.2]}"#);
    let o = qaoa_reduce(&["certify", "--instance", &inst, "--params", &params], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_uses_env_root_then_audits() {
    let dir = tempfile::tempdir().unwrap();
    let o = qaoa_reduce(
        &["run", "--families", "cycle", "--sizes", "4", "--k-grid", "1", "--restarts", "1", "--layers", "1"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = stdout(&o).lines().find_map(|l| l.strip_prefix("manifest: ")).unwrap().to_string();
    assert!(Path::new(&manifest).starts_with(dir.path()));
    let a = qaoa_reduce(&["audit", "--manifest", &manifest], dir.path());
    assert!(a.status.success(), "{}", stdout(&a));
    assert_eq!(stdout(&a).lines().filter(|l| l.contains(" [")).count(), 12);
}

#[test]
fn audit_flags_corrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = qaoa_reduce(
        &[
            "run",
            "--families",
            "complete",
            "--sizes",
            "4",
            "--k-grid",
            "1",
            "--restarts",
            "1",
            "--corrupt-isometry",
            "1e-3",
        ],
        dir.path(),
    );
    let manifest = stdout(&o).lines().find_map(|l| l.strip_prefix("manifest: ")).unwrap().to_string();
    let a = qaoa_reduce(&["audit", "--manifest", &manifest], dir.path());
    assert!(!a.status.success());
    assert!(stdout(&a).contains("FAIL [ 4] state equivalence"));
}
