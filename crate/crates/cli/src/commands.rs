use desitter_core::dispersion::{default_eps_sequence, envelope_fit, scan_in, threshold, ScanVerdict};
use desitter_core::fixtures::{frozen_tri_bump, load_fixture, OutFixture};
use desitter_core::geometry::{DeSitterPoint, ModelParams};
use desitter_core::gns::{default_tol, gram, signature, Signature, Word};
use desitter_core::kernels::KernelEngine;
use desitter_core::modes::ModeSet;
use desitter_core::quadrature::{make_grid, GridSpec};
use desitter_core::stationary::{
    contrast_report, replay_equivalence, replay_support, verify_out_in_equivalence, verify_spectral_support, EquivalenceStatus,
    TermPattern,
};
use desitter_core::testfn::{make_bump, unit_vector, TestFunction};
use desitter_core::wightman::{FieldSlot, FieldTag, NPointEngine, NPointResult};
use num_complex::Complex64;
use serde_json::{json, Value};
use std::path::Path;

use crate::config::{Basis, Command, RunConfig};
use crate::output::{cest, cexact, err_cell, est, exact, num, Check, Outcome, Table};
use crate::CliError;

type C64 = Complex64;

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.params.validate()?;
    match cfg.command {
        Command::ModesValidate => modes_validate(cfg),
        Command::KernelEval => kernel_eval(cfg),
        Command::Npoint => npoint(cfg),
        Command::Smatrix => smatrix(cfg),
        Command::OutNpoint => out_npoint(cfg),
        Command::GnsGram => gns_gram(cfg),
        Command::DispersionScan => dispersion_scan(cfg),
        Command::StationaryCheck => stationary_check(cfg),
        Command::Contrast => contrast(cfg),
    }
}

fn outcome(cfg: &RunConfig, mut body: Value, tables: Vec<Table>, checks: Vec<Check>) -> Outcome {
    let passed = checks.iter().all(|c| c.passed);
    let obj = body.as_object_mut().expect("summary body is an object");
    obj.insert("command".into(), json!(cfg.command.name()));
    obj.insert("status".into(), json!(if passed { "pass" } else { "fail" }));
    obj.insert("checks".into(), serde_json::to_value(&checks).expect("checks serialize"));
    Outcome { summary: body, tables, checks }
}

fn resolve(name: &str, src: &str) -> Result<OutFixture, CliError> {
    if src != "builtin" {
        return Ok(load_fixture(Path::new(src))?);
    }
    match name {
        "tri-bump" => Ok(frozen_tri_bump()?),
        other => Err(CliError::Config(format!("unknown builtin fixture '{other}'"))),
    }
}

pub fn fixture_params(name: &str, src: &str) -> Result<ModelParams, CliError> {
    Ok(resolve(name, src)?.params)
}

fn fixture(cfg: &RunConfig) -> Result<Option<(String, OutFixture)>, CliError> {
    let Some((name, src)) = cfg.fixtures.iter().next() else {
        return Ok(None);
    };
    let fx = resolve(name, src)?;
    if fx.params.d != cfg.params.d {
        return Err(CliError::Config(format!("fixture '{name}' is for d = {}, run has d = {}", fx.params.d, cfg.params.d)));
    }
    Ok(Some((name.clone(), fx)))
}

/// Setup shared by the n-point commands: fixture values take precedence.
struct Setup {
    params: ModelParams,
    grid: GridSpec,
    domain_eps: f64,
    functions: Vec<TestFunction>,
    source: String,
}

fn staggered(d: usize, n: usize) -> Result<Vec<TestFunction>, CliError> {
    let pole = unit_vector(d, d - 1, 1.0);
    (0..n)
        .map(|i| {
            let c = if n > 1 { -0.8 + 1.6 * i as f64 / (n - 1) as f64 } else { 0.0 };
            Ok(make_bump(c - 0.25, c + 0.25, 0, &pole, C64::new(1.0, 0.0))?)
        })
        .collect()
}

fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    if let Some((name, fx)) = fixture(cfg)? {
        return Ok(Setup { params: fx.params, grid: fx.grid, domain_eps: fx.domain_eps, functions: fx.functions, source: name });
    }
    Ok(Setup {
        params: cfg.params.clone(),
        grid: cfg.grid_spec(),
        domain_eps: cfg.options.domain_eps.unwrap_or(1e-7),
        functions: staggered(cfg.params.d, cfg.options.n)?,
        source: format!("{} staggered bumps", cfg.options.n),
    })
}

fn with_engine<T>(s: &Setup, body: impl FnOnce(&NPointEngine) -> Result<T, CliError>) -> Result<T, CliError> {
    let s_max = s.functions.iter().map(|f| f.max_degree()).max().unwrap_or(0);
    let k = KernelEngine::new(&s.params, s_max, s.domain_eps)?;
    let g = make_grid(&s.grid, &s.params)?;
    let e = NPointEngine::new(&k, &g)?;
    body(&e)
}

fn result_json(r: &NPointResult) -> Value {
    json!({
        "value": cest(r.value, r.error),
        "tau_error": exact(r.tau_error),
        "sphere_error": exact(r.sphere_error),
        "boundary_error": exact(r.boundary_error),
        "kernel_error": exact(r.kernel_error),
        "terms": r.terms.iter().map(|t| json!({ "k": t.k, "value": cest(t.value, t.error) })).collect::<Vec<_>>(),
        "warning": r.warning,
    })
}

fn terms_table(r: &NPointResult) -> Table {
    let mut t = Table::new("terms", &["k", "re", "im", "error"]);
    for c in &r.terms {
        t.push(vec![c.k.to_string(), num(c.value.re), num(c.value.im), err_cell(Some(c.error))]);
    }
    t.push(vec!["total".into(), num(r.value.re), num(r.value.im), err_cell(Some(r.error))]);
    t
}

fn modes_validate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let eps = cfg.options.domain_eps.unwrap_or(1e-6);
    let ms = ModeSet::build(&cfg.params, cfg.options.s_max, eps)?;
    let mut t = Table::new("residuals", &["s", "p", "max_residual", "wronskian_drift", "error"]);
    let (mut res, mut drift) = (0.0f64, 0.0f64);
    for m in &ms.modes {
        res = res.max(m.max_residual);
        drift = drift.max(m.wronskian_drift_scaled);
        t.push(vec![m.s.to_string(), num(m.p), num(m.max_residual), num(m.wronskian_drift_scaled), err_cell(None)]);
    }
    let checks = vec![
        Check::new("residual", res < 1e-8, format!("max residual {res:.3e} (< 1e-8)")),
        Check::new("wronskian", drift < 1e-8, format!("max Wronskian drift {drift:.3e} (< 1e-8)")),
    ];
    let body = json!({
        "d": cfg.params.d,
        "frak_m2": exact(cfg.params.frak_m2()),
        "s_max": cfg.options.s_max,
        "domain_eps": exact(eps),
        "max_residual": exact(res),
        "max_wronskian_drift": exact(drift),
    });
    Ok(outcome(cfg, body, vec![t], checks))
}

fn kernel_eval(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let o = &cfg.options;
    let d = cfg.params.d;
    let k = KernelEngine::new(&cfg.params, o.s_max, o.domain_eps.unwrap_or(1e-6))?;
    let mut a2 = unit_vector(d, d - 1, o.angle.cos());
    a2[d - 2] = o.angle.sin();
    let x1 = DeSitterPoint::new(o.tau1, unit_vector(d, d - 1, 1.0))?;
    let x2 = DeSitterPoint::new(o.tau2, a2)?;
    let v = k.kernel_point(&x1, &x2, o.eta, o.s_max)?;
    let w = k.kernel_point(&x2, &x1, o.eta, o.s_max)?;
    let defect = (v.value - w.value.conj()).norm();
    let mut t = Table::new("kernel", &["order", "re", "im", "error"]);
    t.push(vec!["x1,x2".into(), num(v.value.re), num(v.value.im), err_cell(Some(v.error))]);
    t.push(vec!["x2,x1".into(), num(w.value.re), num(w.value.im), err_cell(Some(w.error))]);
    let checks = vec![Check::new(
        "swap-conjugation",
        defect <= v.error + w.error + 1e-14 * v.value.norm(),
        format!("|D+(x1,x2) - conj D+(x2,x1)| = {defect:.3e}"),
    )];
    let body = json!({
        "points": { "tau1": exact(o.tau1), "tau2": exact(o.tau2), "angle": exact(o.angle) },
        "eta": exact(o.eta),
        "s_max": o.s_max,
        "dplus": cest(v.value, v.error),
        "mode_sum_tail": exact(v.tail),
    });
    Ok(outcome(cfg, body, vec![t], checks))
}

fn parse_tags(cfg: &RunConfig, n: usize) -> Result<Vec<FieldTag>, CliError> {
    match &cfg.options.tags {
        None => Ok(vec![FieldTag::Loc; n]),
        Some(t) if t.len() == n => Ok(t.clone()),
        Some(t) => Err(CliError::Config(format!("{} tags given for {n} functions", t.len()))),
    }
}

fn npoint(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = setup(cfg)?;
    let tags = parse_tags(cfg, s.functions.len())?;
    let slots: Vec<FieldSlot> = tags.iter().zip(&s.functions).map(|(t, f)| FieldSlot::new(*t, f.clone())).collect();
    let (r, h) = with_engine(&s, |e| Ok((e.truncated_npoint(&slots)?, e.verify_hermiticity(&slots)?)))?;
    let checks = vec![Check::new("hermiticity", h.passed, format!("relative defect {:.3e} (<= 1e-12)", h.relative))];
    let body = json!({
        "source": s.source,
        "n": slots.len(),
        "tags": tags,
        "truncated": result_json(&r),
        "hermiticity_relative": exact(h.relative),
    });
    Ok(outcome(cfg, body, vec![terms_table(&r)], checks))
}

fn smatrix(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = setup(cfg)?;
    let k = cfg.options.k;
    if k > s.functions.len() {
        return Err(CliError::Config(format!("k = {k} exceeds {} functions", s.functions.len())));
    }
    let r = with_engine(&s, |e| Ok(e.smatrix_element(&s.functions[..k], &s.functions[k..])?))?;
    let body = json!({ "source": s.source, "n": s.functions.len(), "k_in": k, "smatrix": result_json(&r) });
    Ok(outcome(cfg, body, vec![terms_table(&r)], vec![]))
}

fn out_npoint(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = setup(cfg)?;
    let (o, s0) = with_engine(&s, |e| Ok((e.out_npoint(&s.functions)?, e.smatrix_element(&[], &s.functions)?)))?;
    let cross = (o.value - s0.value).norm() / o.value.norm().max(f64::MIN_POSITIVE);
    let ratio = o.value.norm() / o.error.max(f64::MIN_POSITIVE);
    let checks = vec![Check::new("cross-path", cross < 1e-10, format!("relative difference to S(k=0) {cross:.3e} (< 1e-10)"))];
    let body = json!({
        "source": s.source,
        "n": s.functions.len(),
        "out": result_json(&o),
        "smatrix_k0": cest(s0.value, s0.error),
        "cross_path_relative": exact(cross),
        "ratio": exact(ratio),
        "nonzero_beyond_5x": ratio > 5.0,
    });
    Ok(outcome(cfg, body, vec![terms_table(&o)], checks))
}

fn gns_gram(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = cfg.params.d;
    let pole = unit_vector(d, d - 1, 1.0);
    let side = unit_vector(d, d - 2, 1.0);
    let b = |lo: f64, hi: f64, s: usize, p: &[f64], c: C64| make_bump(lo, hi, s, p, c);
    let f1 = b(-0.6, 0.0, 0, &pole, C64::new(1.0, 0.0))?;
    let f2 = b(-0.2, 0.4, 1, &side, C64::new(0.5, 0.5))?;
    let jf = FieldSlot::new(FieldTag::Current, b(-0.3, 0.3, 0, &pole, C64::new(1.0, 0.0))?);
    let h1 = FieldSlot::new(FieldTag::Loc, b(-0.6, -0.1, 0, &pole, C64::new(1.0, 0.0))?);
    let h2 = FieldSlot::new(FieldTag::Loc, b(0.1, 0.6, 0, &pole, C64::new(1.0, 0.0))?);
    let i1 = FieldSlot::new(FieldTag::In, f1);
    let i2 = FieldSlot::new(FieldTag::In, f2);
    let basis: Vec<Word> = match cfg.options.basis {
        Basis::In => vec![vec![], vec![i1.clone()], vec![i2.clone()], vec![i1, i2]],
        Basis::CurrentBlock => vec![vec![jf], vec![h1, h2]],
        Basis::Mixed => vec![vec![], vec![h1.clone()], vec![jf], vec![h1, h2]],
    };
    let s = Setup {
        params: cfg.params.clone(),
        grid: cfg.grid_spec(),
        domain_eps: cfg.options.domain_eps.unwrap_or(1e-7),
        functions: basis.iter().flatten().map(|s| s.f.clone()).collect(),
        source: String::new(),
    };
    let g = with_engine(&s, |e| Ok(gram(&basis, e)?))?;
    let tol = default_tol(&g);
    let sig = signature(&g, tol);
    let ev = g.eigenvalues();
    let ev_err = g.errors.norm();
    let mut checks = vec![Check::new(
        "hermiticity",
        g.hermiticity_relative() <= 1e-12,
        format!("relative defect {:.3e} (<= 1e-12)", g.hermiticity_relative()),
    )];
    if basis[0].is_empty() {
        let v = g.matrix[(0, 0)];
        checks.push(Check::new("vacuum", v == C64::new(1.0, 0.0), format!("G_00 = {v}")));
    }
    match cfg.options.basis {
        Basis::In => {
            let m = ev[0] / g.norm;
            checks.push(Check::new("in-sector positivity", m >= -1e-8, format!("min eigenvalue / |G| = {m:.3e} (>= -1e-8)")));
        }
        Basis::CurrentBlock => {
            let want = Signature { positive: 1, zero: 0, negative: 1 };
            checks.push(Check::new(
                "indefinite block",
                sig == want,
                format!("signature ({},{},{})", sig.positive, sig.zero, sig.negative),
            ));
        }
        Basis::Mixed => {}
    }
    let mut gt = Table::new("gram", &["i", "j", "re", "im", "error"]);
    let n = g.matrix.nrows();
    for i in 0..n {
        for j in 0..n {
            let z = g.matrix[(i, j)];
            gt.push(vec![i.to_string(), j.to_string(), num(z.re), num(z.im), err_cell(Some(g.errors[(i, j)]))]);
        }
    }
    let mut et = Table::new("eigenvalues", &["index", "eigenvalue", "error"]);
    for (i, v) in ev.iter().enumerate() {
        et.push(vec![i.to_string(), num(*v), err_cell(Some(ev_err))]);
    }
    let body = json!({
        "basis": cfg.options.basis,
        "size": n,
        "norm": exact(g.norm),
        "hermiticity_relative": exact(g.hermiticity_relative()),
        "eigenvalues": ev.iter().map(|v| est(*v, ev_err)).collect::<Vec<_>>(),
        "signature": { "positive": sig.positive, "zero": sig.zero, "negative": sig.negative, "tolerance": exact(tol) },
    });
    Ok(outcome(cfg, body, vec![gt, et], checks))
}

fn dispersion_scan(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = cfg.params.d;
    let n = cfg.options.n;
    let eps = cfg.options.domain_eps.unwrap_or(1e-11);
    let k = KernelEngine::new(&cfg.params, 0, eps)?;
    let f = make_bump(-0.3, 0.3, 0, &unit_vector(d, d - 1, 1.0), C64::new(1.0, 0.0))?;
    let seq = cfg.options.eps_sequence.clone().unwrap_or_else(default_eps_sequence);
    let scan = scan_in(&f, n, &k, &seq)?;
    let th = threshold(d, n)?;
    let consistent = if th.passes {
        scan.verdict == ScanVerdict::Converges
    } else {
        matches!(scan.verdict, ScanVerdict::DivergesLog | ScanVerdict::DivergesPower)
    };
    let checks = vec![Check::new(
        "threshold",
        consistent,
        format!("scan {:?}, threshold exponent {} ({})", scan.verdict, th.exponent, if th.passes { "passes" } else { "fails" }),
    )];
    let mut t = Table::new("scan", &["epsilon", "I_value", "error", "increment", "fit_residual"]);
    for r in &scan.rows {
        t.push(vec![num(r.epsilon), num(r.value), err_cell(Some(r.value.abs() * scan.sphere_error)), num(r.increment), num(r.fit_residual)]);
    }
    let envelope = match envelope_fit(&f, &k, 1e-6, 1e-2, 21) {
        Ok(e) => {
            let se = slope_standard_error(&e.samples, e.slope, e.intercept);
            json!({
                "slope": est(e.slope, se),
                "r2": exact(e.r2),
                "envelope_exponent": exact(e.envelope_exponent),
                "indicial_exponent": exact(e.indicial_exponent),
            })
        }
        Err(e) => json!({ "unavailable": e.to_string() }),
    };
    let body = json!({
        "d": d,
        "n": n,
        "frak_m2": exact(cfg.params.frak_m2()),
        "verdict": scan.verdict,
        "threshold": { "exponent": exact(th.exponent), "passes": th.passes },
        "last_relative_increment": exact(scan.last_relative_increment),
        "increment_ratio": exact(scan.increment_ratio),
        "log_fit": { "slope": exact(scan.log_fit_slope), "r2": exact(scan.log_fit_r2) },
        "sphere_relative_error": exact(scan.sphere_error),
        "envelope": envelope,
    });
    Ok(outcome(cfg, body, vec![t], checks))
}

fn slope_standard_error(samples: &[(f64, f64)], slope: f64, intercept: f64) -> f64 {
    let n = samples.len() as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mx).powi(2)).sum();
    let ssr: f64 = samples.iter().map(|s| (s.1 - slope * s.0 - intercept).powi(2)).sum();
    (ssr / (n - 2.0) / sxx).sqrt()
}

fn stationary_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (n, eps) = (cfg.options.n, cfg.options.epsilon);
    let cert = verify_out_in_equivalence(n, eps)?;
    let cert_json = serde_json::to_string(&cert)?;
    let mut t = Table::new("support_steps", &["n", "k", "r", "head", "tail", "feasible", "verdict", "error"]);
    let mut all_hold = true;
    let mut replay = replay_equivalence(&cert_json)?;
    let mut supports = Vec::new();
    for k in 1..=n {
        let sc = verify_spectral_support(&TermPattern::replacement(n, k)?, eps)?;
        all_hold &= sc.holds;
        replay &= replay_support(&serde_json::to_string(&sc)?)?;
        for st in &sc.steps {
            t.push(vec![
                n.to_string(),
                k.to_string(),
                st.r.to_string(),
                st.head.to_string(),
                st.tail.to_string(),
                st.feasible.to_string(),
                format!("{:?}", st.verdict),
                err_cell(None),
            ]);
        }
        supports.push(sc);
    }
    let mut checks = vec![
        Check::new("support", all_hold, format!("{n} replacement patterns hold: {all_hold}")),
        Check::new("replay", replay, "certificates replay byte-identically".into()),
    ];
    if eps > 0.0 {
        checks.push(Check::new(
            "equivalence",
            cert.status == EquivalenceStatus::ExactZero,
            format!("status {:?}, bound {}", cert.status, cert.bound),
        ));
    }
    let body = json!({
        "n": n,
        "epsilon": exact(eps),
        "certificate": cert,
        "bound": exact(cert.bound),
        "support_certificates": supports,
    });
    Ok(outcome(cfg, body, vec![t], checks))
}

fn contrast(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let fx = fixture(cfg)?.map(|(_, f)| f);
    let r = contrast_report(fx.as_ref(), cfg.options.epsilon)?;
    let mut t = Table::new("contrast", &["model", "quantity", "re", "im", "error"]);
    t.push(vec!["stationary".into(), "out_npoint".into(), num(0.0), num(0.0), err_cell(None)]);
    let o = r.desitter_out;
    t.push(vec!["de_sitter".into(), "out_npoint".into(), num(o.value.re), num(o.value.im), err_cell(Some(o.error))]);
    let s = r.desitter_smatrix_k1;
    t.push(vec!["de_sitter".into(), "smatrix_k1".into(), num(s.value.re), num(s.value.im), err_cell(Some(s.error))]);
    let checks = vec![Check::new(
        "stationary exact zero",
        r.stationary.status == EquivalenceStatus::ExactZero,
        format!("certificate {}", r.stationary.id),
    )];
    let body = json!({
        "fixture": r.fixture,
        "epsilon": exact(cfg.options.epsilon),
        "stationary": { "status": r.stationary.status, "value": cexact(C64::new(0.0, 0.0)), "bound": exact(r.stationary.bound) },
        "de_sitter_out": cest(o.value, o.error),
        "de_sitter_out_ratio": exact(r.ratio),
        "nonzero_beyond_5x": r.nonzero_beyond_5x,
        "de_sitter_smatrix_k1": cest(s.value, s.error),
        "smatrix_k1_ratio": exact(r.smatrix_k1_ratio),
    });
    Ok(outcome(cfg, body, vec![t], checks))
}
