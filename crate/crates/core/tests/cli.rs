use std::path::Path;
use std::process::{Command, Output};

fn pfsprior(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfsprior"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn prior_table_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = pfsprior(&["prior-table", "--prior", "md:omega=1", "--prior", "bb", "-p", "4"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("prior,k,log_pi,ratio\n"));
    let rows: Vec<Vec<String>> = csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0][0], "md:omega=1");
    assert_eq!(rows[4][3], "", "ratio is blank at k = p");
    for row in &rows[0..4] {
        assert!((row[3].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    }
    for (k, row) in rows[5..9].iter().enumerate() {
        assert!((row[3].parse::<f64>().unwrap() - (k + 1) as f64).abs() < 1e-10);
    }
}

#[test]
fn usage_and_descriptor_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = pfsprior(&["prior-table", "--prior", "shp:phi=-1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("phi"));
    let out = pfsprior(&["prior-table", "--prior", "zzz"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = pfsprior(&["no-such-command"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = pfsprior(&["summarize", "missing.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = pfsprior(&["generate", "--n", "10", "--p", "3", "--p-true", "5", "-o", "d.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(dir.path().join("bad.json"), r#"{"n": 50, "bogus": 1}"#).unwrap();
    let out = pfsprior(&["replicate", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn generate_then_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = pfsprior(&["generate", "--n", "40", "--p", "6", "--p-true", "2", "--seed", "4", "-o", "d.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("d.json").exists());
    let out = pfsprior(
        &["run", "--data", "d.csv", "--prior", "shp", "--prior", "bb", "--draws", "4000", "-o", "report.json"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let arr = report.as_array().unwrap();
    assert_eq!(arr.len(), 2);
    assert_eq!(arr[0]["prior"], "shp:phi=1,theta=1");
}

#[test]
fn replicate_is_deterministic_and_summarize_merges() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"n": 40, "p": 8, "p_true": 2, "replications": 3, "draws": 3000, "priors": ["shp", "bb"]}"#,
    )
    .unwrap();
    for name in ["a.csv", "b.csv"] {
        let out = pfsprior(&["replicate", "--config", "cfg.json", "--jobs", "2", "-o", name], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert!(dir.path().join("a.timing.csv").exists());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.starts_with("replication,prior,seed,"));

    // A flag overrides the config file.
    let out = pfsprior(&["replicate", "--config", "cfg.json", "--base-seed", "11", "-o", "c.csv"], dir.path());
    assert!(out.status.success());
    let c = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert!(c.lines().nth(1).unwrap().contains(",11,"));

    let out = pfsprior(&["summarize", "a.csv", "c.csv"], dir.path());
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let priors = summary["priors"].as_array().unwrap();
    assert_eq!(priors.len(), 2);
    assert_eq!(priors[0]["replications"], 6);
}
