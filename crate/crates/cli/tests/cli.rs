use std::path::Path;
use std::process::{Command, Output};

use desitter_core::dispersion::threshold;
use serde_json::Value;
use tempfile::TempDir;

fn desitter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_desitter")).args(args).output().expect("binary runs")
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

/// Every object with a "value" number also carries "error" or "exact".
fn all_tagged(v: &Value) -> bool {
    match v {
        Value::Object(m) => {
            let own = if m.get("value").is_some_and(Value::is_number) || m.contains_key("re") {
                m.contains_key("error") || m.get("exact") == Some(&Value::Bool(true))
            } else {
                true
            };
            own && m.values().all(all_tagged)
        }
        Value::Array(a) => a.iter().all(all_tagged),
        _ => true,
    }
}

#[test]
fn modes_validate_writes_residual_table() {
    let t = TempDir::new().unwrap();
    let out = t.path().join("mv");
    let o = desitter(&["modes-validate", "--d", "4", "--frak-m2", "2", "--s-max", "30", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&out.join("residuals.csv"));
    assert_eq!(rows.len(), 31);
    for r in &rows {
        assert!(r[2].parse::<f64>().unwrap() < 1e-8);
        assert_eq!(&r[4], "exact");
    }
    assert!(all_tagged(&summary(&out)));
}

#[test]
fn npoint_fixture_reports_terms() {
    let t = TempDir::new().unwrap();
    let out = t.path().join("np");
    let o = desitter(&["npoint", "--d", "6", "--frak-m", "3", "--n", "3", "--fixture", "tri-bump", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(s, summary(&out));
    assert!(s["truncated"]["value"]["error"].as_f64().is_some());
    assert_eq!(s["truncated"]["terms"].as_array().unwrap().len(), 3);
    assert!(all_tagged(&s));
    let rows = csv_rows(&out.join("terms.csv"));
    assert_eq!(&rows.last().unwrap()[0], "total");
}

#[test]
fn stored_config_replays_bit_identically() {
    let t = TempDir::new().unwrap();
    let a = t.path().join("a");
    let b = t.path().join("b");
    let o = desitter(&["npoint", "--d", "6", "--frak-m", "3", "--n", "3", "--tags", "loc,in,out", "--sphere-points", "64", "-o", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = desitter(&["run", "--config", a.join("config.json").to_str().unwrap(), "-o", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(a.join("terms.csv")).unwrap(), std::fs::read(b.join("terms.csv")).unwrap());
}

#[test]
fn stationary_check_certificate() {
    let t = TempDir::new().unwrap();
    let out = t.path().join("st");
    let o = desitter(&["stationary-check", "--n", "3", "--epsilon", "0.1", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["certificate"]["status"], "exact_zero");
    assert!(s["bound"]["value"].as_f64().unwrap() <= -0.3 + 1e-15);
}

#[test]
fn config_errors_exit_64() {
    assert_eq!(desitter(&["no-such-command"]).status.code(), Some(64));
    assert_eq!(desitter(&["npoint", "--n", "three"]).status.code(), Some(64));
    let t = TempDir::new().unwrap();
    let bad = t.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(desitter(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(64));
    assert_eq!(desitter(&["npoint", "--d", "4", "--fixture", "tri-bump"]).status.code(), Some(64));
    assert_eq!(desitter(&["contrast", "-o", t.path().join("c").to_str().unwrap()]).status.code(), Some(64));
}

#[test]
fn budget_exceeded_exits_3() {
    let t = TempDir::new().unwrap();
    let out = t.path().join("ds");
    // scan reaches 1e-10 but the modes stop at 1e-6
    let o = desitter(&["dispersion-scan", "--d", "4", "--frak-m2", "2", "--n", "3", "--domain-eps", "1e-6", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn failed_check_exits_2() {
    let t = TempDir::new().unwrap();
    let run = t.path().join("ds");
    std::fs::create_dir_all(&run).unwrap();
    // d = 4, n = 3 diverges, so a converging scan contradicts the formula
    let fake = serde_json::json!({ "command": "dispersion-scan", "status": "pass", "d": 4, "n": 3, "verdict": "converges" });
    std::fs::write(run.join("summary.json"), fake.to_string()).unwrap();
    let o = desitter(&["report", run.to_str().unwrap(), "-o", t.path().join("rep").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(&t.path().join("rep"))["status"], "fail");
}

#[test]
fn report_bundle_collates_runs() {
    let t = TempDir::new().unwrap();
    let p = |s: &str| t.path().join(s).to_str().unwrap().to_string();
    assert_eq!(desitter(&["dispersion-scan", "--d", "4", "--frak-m2", "2", "--n", "3", "-o", &p("ds")]).status.code(), Some(0));
    assert_eq!(desitter(&["contrast", "--fixture", "tri-bump", "-o", &p("co")]).status.code(), Some(0));
    assert_eq!(desitter(&["gns-gram", "--d", "6", "--frak-m", "3", "--basis", "current-block", "-o", &p("gb")]).status.code(), Some(0));
    let o = desitter(&["report", &p("ds"), &p("co"), &p("gb"), "-o", &p("rep")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&t.path().join("rep/threshold.csv"));
    assert_eq!(rows.len(), 20);
    for r in &rows {
        let v = threshold(r[0].parse().unwrap(), r[1].parse().unwrap()).unwrap();
        assert_eq!(r[2].parse::<f64>().unwrap(), v.exponent);
        assert_eq!(r[3].parse::<bool>().unwrap(), v.passes);
    }
    let con = csv_rows(&t.path().join("rep/contrast.csv"));
    assert_eq!((&con[0][1], &con[0][5]), ("stationary", "exact"));
    assert_eq!(&con[1][1], "de_sitter");
    let gr = csv_rows(&t.path().join("rep/gram_signatures.csv"));
    assert_eq!((&gr[0][2], &gr[0][3], &gr[0][4]), ("1", "0", "1"));
    assert!(std::fs::read_to_string(t.path().join("rep/bundle.md")).unwrap().contains("## threshold"));
    assert_eq!(desitter(&["report", "-o", &p("empty")]).status.code(), Some(64));
    assert!(!t.path().join("empty").exists());
}
