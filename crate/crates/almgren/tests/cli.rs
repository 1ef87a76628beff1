use std::path::Path;
use std::process::{Command, Output};

use almgren::report::from_json;

const PHI1: &str = include_str!("../scenarios/phi1_interval.toml");

fn almgren(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_almgren"))
        .args(args)
        .env_remove("ALMGREN_THREADS")
        .output()
        .unwrap()
}

fn write_scenario(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(format!("{name}.toml"));
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn run_writes_all_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = almgren(&["--threads", "2", "run", "phi1_interval", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = std::fs::read_to_string(out.join("phi1_interval.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 15);
    assert!(lines[0].starts_with("r,H,D,N,eta,phi_1_1"));
    let width = lines[0].split(',').count();
    assert!(lines[1..].iter().all(|l| l.split(',').count() == width));

    let json = std::fs::read_to_string(out.join("phi1_interval.json")).unwrap();
    let report = from_json(&json).unwrap();
    assert_eq!(report.schema, "almgren-report/1");
    assert_eq!(report.verdict.m0, 1);
    assert_eq!(serde_json::to_string_pretty(&report).unwrap() + "\n", json);

    let svg = std::fs::read_to_string(out.join("phi1_interval.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<polyline").count(), 2);
    let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    assert_eq!(pts.split(' ').count(), 14);

    let again = dir.path().join("again");
    let o = almgren(&["report", out.join("phi1_interval.json").to_str().unwrap(), "--out-dir", again.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for ext in ["csv", "json", "svg"] {
        let a = std::fs::read(out.join(format!("phi1_interval.{ext}"))).unwrap();
        let b = std::fs::read(again.join(format!("phi1_interval.{ext}"))).unwrap();
        assert_eq!(a, b, "{ext} differs after re-rendering");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let oa = almgren(&["--threads", "1", "run", "phi1_interval", "--out-dir", a.to_str().unwrap(), "--format", "csv,json"]);
    let ob = Command::new(env!("CARGO_BIN_EXE_almgren"))
        .args(["run", "phi1_interval", "--out-dir", b.to_str().unwrap(), "--format", "csv,json"])
        .env("ALMGREN_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(ob.status.code(), Some(0));
    for ext in ["csv", "json"] {
        assert_eq!(
            std::fs::read(a.join(format!("phi1_interval.{ext}"))).unwrap(),
            std::fs::read(b.join(format!("phi1_interval.{ext}"))).unwrap()
        );
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    assert_eq!(almgren(&["run", "no_such_scenario", "--out-dir", out]).status.code(), Some(2));
    assert_eq!(almgren(&["run", "phi1_interval", "--format", "xml", "--out-dir", out]).status.code(), Some(2));
    assert_eq!(almgren(&["frobnicate"]).status.code(), Some(2));
    let bad_env = Command::new(env!("CARGO_BIN_EXE_almgren"))
        .args(["list"])
        .env("ALMGREN_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(2));

    let zero = write_scenario(dir.path(), "zero", &PHI1.replace("index = [1]", "index = [1]\namplitude = 0.0"));
    let o = almgren(&["run", &zero, "--out-dir", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));

    let unknown = write_scenario(dir.path(), "unknown", &format!("{PHI1}\ncolour = 3\n"));
    assert_eq!(almgren(&["run", &unknown, "--out-dir", out]).status.code(), Some(2));

    let strict = write_scenario(dir.path(), "strict", &format!("{PHI1}\n[tolerances]\nclassification = 1e-12\n"));
    assert_eq!(almgren(&["run", &strict, "--out-dir", out]).status.code(), Some(5));

    let audit = write_scenario(dir.path(), "audit", &format!("{PHI1}\n[tolerances]\npohozaev = 1e-30\n"));
    assert_eq!(almgren(&["run", &audit, "--out-dir", out]).status.code(), Some(4));
}

#[test]
fn inspection_subcommands() {
    let o = almgren(&["kernel", "--s", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["kappa"].as_f64().unwrap() - 1.0).abs() < 1e-8);

    let o = almgren(&["extend", "phi1_interval", "--points", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for p in v["points"].as_array().unwrap() {
        let (a, b) = (p["trace"].as_f64().unwrap(), p["expected"].as_f64().unwrap());
        assert!(((a - b) / b).abs() < 1e-4);
    }

    let o = almgren(&["eig", "phi1_interval", "--max-degree", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["sphere"].as_array().unwrap().len(), 2);

    for cmd in ["frequency", "blowup", "audit"] {
        let o = almgren(&[cmd, "phi1_interval"]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap();
    }

    let o = almgren(&["list"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 3);
}
