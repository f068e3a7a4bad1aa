use std::process::{Command, Output};

fn formnorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formnorm")).args(args).env_remove("FORMNORM_CONFIG").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(line: &str) -> f64 {
    line.split_whitespace().find_map(|w| w.strip_prefix("value=")).unwrap().parse().unwrap()
}

#[test]
fn lp_norm_of_x1() {
    let o = formnorm(&["norm", "--form", "poly:x1", "--kind", "lp", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((value(&stdout(&o)) - 1.0 / 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn luxemburg_of_zero_form() {
    let o = formnorm(&["norm", "--form", "zero:1", "--kind", "luxemburg", "--phi", "power:3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&stdout(&o)), 0.0);
}

#[test]
fn closed_constant_form_has_zero_bmo() {
    let o = formnorm(&["norm", "--form", "const:dx1", "--kind", "bmo", "--balls", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(value(&out).abs() < 1e-12);
    assert!(out.contains("argmax_center="));
}

#[test]
fn disk_domain() {
    let o = formnorm(&["norm", "--form", "poly:1", "--kind", "lp", "--p", "1", "--domain", "ball:0,0:1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((value(&stdout(&o)) - std::f64::consts::PI).abs() < 1e-3);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["norm", "--form", "bogus:1", "--kind", "lp"][..],
        &["norm", "--form", "poly:x1", "--kind", "lp", "--p", "0.5"],
        &["norm", "--form", "poly:x1", "--kind", "bmo", "--sigma", "0.9"],
        &["norm", "--form", "poly:x1", "--kind", "lp", "--weight", "const:-1"],
        &["norm", "--kind", "lp"],
        &["frobnicate"],
        &["verify", "--verifier", "no_such_verifier"],
        &["verify", "--config", "/nonexistent/run.toml"],
    ] {
        let o = formnorm(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn bad_config_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "sigma = 0.5\nk = 1.5\n").unwrap();
    for cmd in ["verify", "selftest"] {
        let o = Command::new(env!("CARGO_BIN_EXE_formnorm")).arg(cmd).env("FORMNORM_CONFIG", &path).output().unwrap();
        assert_eq!(o.status.code(), Some(2));
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains("sigma must exceed 1") && err.contains("k must lie in (0, 1)"), "{err}");
    }
}

#[test]
fn corpus_listing() {
    let o = formnorm(&["corpus", "list", "--output", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(rows.as_array().unwrap().len() >= 10);
    assert!(rows.as_array().unwrap().iter().any(|r| r["partner"] == true));
}

#[test]
fn small_verify_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "grid_resolution = 32\nball_resolution = 8\nball_count = 4\nstability = false\n\
         verifiers = [\"closed_part_boundedness\", \"weighted_norm_comparison\"]\n\
         [[corpus]]\nid = \"x1\"\nform = \"poly:x1\"\n\
         [[corpus]]\nid = \"five\"\nform = \"poly:5\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_formnorm"))
        .args(["verify", "--output", "csv", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    assert!(csv.starts_with("inequality_id,entry_id,lhs,rhs,ratio,flags"));
    assert_eq!(std::fs::read_to_string(out.join("report.csv")).unwrap(), csv);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["status"], "pass");
    assert_eq!(json["reports"].as_array().unwrap().len(), 2);
}
