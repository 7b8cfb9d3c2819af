use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use desitter_core::dispersion::threshold;
use serde_json::{json, Value};

use crate::output::{err_cell, num, Check, Outcome, Table};
use crate::CliError;

fn f(v: &Value) -> Option<f64> {
    v.get("value").and_then(Value::as_f64)
}

fn load(dir: &Path) -> Result<Value, CliError> {
    let p = dir.join("summary.json");
    let text = std::fs::read_to_string(&p).map_err(|e| CliError::Config(format!("missing run {}: {e}", dir.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
}

fn markdown(t: &Table) -> String {
    let mut s = format!("| {} |\n|{}\n", t.header.join(" | "), "---|".repeat(t.header.len()));
    for r in &t.rows {
        let _ = writeln!(s, "| {} |", r.join(" | "));
    }
    s
}

pub fn bundle(runs: &[PathBuf]) -> Result<(Outcome, String), CliError> {
    if runs.is_empty() {
        return Err(CliError::Config("report needs at least one run directory".into()));
    }
    let summaries: Vec<(PathBuf, Value)> = runs.iter().map(|r| Ok((r.clone(), load(r)?))).collect::<Result<_, CliError>>()?;
    let cmd = |v: &Value| v["command"].as_str().unwrap_or("").to_string();

    let mut runs_t = Table::new("runs", &["run", "command", "status"]);
    for (p, v) in &summaries {
        runs_t.push(vec![p.display().to_string(), cmd(v), v["status"].as_str().unwrap_or("").into()]);
    }

    let mut checks = Vec::new();
    let mut th = Table::new("threshold", &["d", "n", "exponent", "passes", "error", "observed"]);
    for d in 3..=7 {
        for n in 3..=6 {
            let v = threshold(d, n)?;
            let observed: Vec<String> = summaries
                .iter()
                .filter(|(_, s)| cmd(s) == "dispersion-scan" && s["d"] == json!(d) && s["n"] == json!(n))
                .map(|(_, s)| s["verdict"].as_str().unwrap_or("").to_string())
                .collect();
            for o in &observed {
                let ok = if v.passes { o == "converges" } else { o.starts_with("diverges") };
                checks.push(Check::new(&format!("threshold d={d} n={n}"), ok, format!("observed {o}, formula passes = {}", v.passes)));
            }
            th.push(vec![d.to_string(), n.to_string(), num(v.exponent), v.passes.to_string(), err_cell(None), observed.join(";")]);
        }
    }

    let mut env = Table::new("envelope", &["d", "frak_m2", "slope", "error", "envelope_exponent", "indicial_exponent"]);
    for (_, s) in summaries.iter().filter(|(_, s)| cmd(s) == "dispersion-scan") {
        let e = &s["envelope"];
        if let (Some(slope), Some(err)) = (f(&e["slope"]), e["slope"]["error"].as_f64()) {
            env.push(vec![
                s["d"].to_string(),
                num(f(&s["frak_m2"]).unwrap_or(f64::NAN)),
                num(slope),
                err_cell(Some(err)),
                num(f(&e["envelope_exponent"]).unwrap_or(f64::NAN)),
                num(f(&e["indicial_exponent"]).unwrap_or(f64::NAN)),
            ]);
        }
    }

    let mut con = Table::new("contrast", &["fixture", "model", "quantity", "re", "im", "error"]);
    for (_, s) in summaries.iter().filter(|(_, s)| cmd(s) == "contrast") {
        let fx = s["fixture"].as_str().unwrap_or("").to_string();
        con.push(vec![fx.clone(), "stationary".into(), "out_npoint".into(), num(0.0), num(0.0), err_cell(None)]);
        for (q, key) in [("out_npoint", "de_sitter_out"), ("smatrix_k1", "de_sitter_smatrix_k1")] {
            let v = &s[key];
            con.push(vec![
                fx.clone(),
                "de_sitter".into(),
                q.into(),
                num(v["re"].as_f64().unwrap_or(f64::NAN)),
                num(v["im"].as_f64().unwrap_or(f64::NAN)),
                err_cell(v["error"].as_f64()),
            ]);
        }
    }

    let mut gr = Table::new("gram_signatures", &["basis", "size", "positive", "zero", "negative", "min_eigenvalue", "error"]);
    for (_, s) in summaries.iter().filter(|(_, s)| cmd(s) == "gns-gram") {
        let sig = &s["signature"];
        let ev0 = &s["eigenvalues"][0];
        gr.push(vec![
            s["basis"].as_str().unwrap_or("").into(),
            s["size"].to_string(),
            sig["positive"].to_string(),
            sig["zero"].to_string(),
            sig["negative"].to_string(),
            num(f(ev0).unwrap_or(f64::NAN)),
            err_cell(ev0["error"].as_f64()),
        ]);
    }

    let tables = vec![runs_t, th, env, con, gr];
    let mut md = String::from("# Report bundle\n");
    for t in &tables {
        let _ = write!(md, "\n## {}\n\n{}", t.name.replace('_', " "), markdown(t));
    }
    let passed = checks.iter().all(|c| c.passed);
    let summary = json!({
        "command": "report",
        "status": if passed { "pass" } else { "fail" },
        "runs": runs.iter().map(|r| r.display().to_string()).collect::<Vec<_>>(),
        "checks": checks,
    });
    Ok((Outcome { summary, tables, checks }, md))
}
