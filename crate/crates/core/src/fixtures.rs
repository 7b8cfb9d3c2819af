//! Frozen out-n-point fixture and the search that produced it.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ModelParams;
use crate::kernels::KernelEngine;
use crate::quadrature::{make_grid, GridSpec};
use crate::testfn::{make_bump, unit_vector, TestFunction};
use crate::wightman::NPointEngine;

pub const TRI_BUMP_JSON: &str = include_str!("../fixtures/tri_bump.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub supports: Vec<(f64, f64)>,
    pub out: Estimate,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutFixture {
    pub name: String,
    pub params: ModelParams,
    pub grid: GridSpec,
    pub domain_eps: f64,
    pub functions: Vec<TestFunction>,
    pub out: Estimate,
    /// smatrix_element with no in-fields, same functions.
    pub smatrix_k0: Estimate,
    /// First function as in-field, the rest out.
    pub smatrix_k1: Estimate,
    pub ratio: f64,
    pub candidates: Vec<Candidate>,
}

impl OutFixture {
    pub fn cross_path_relative(&self) -> f64 {
        (self.out.value - self.smatrix_k0.value).norm() / self.out.value.norm().max(f64::MIN_POSITIVE)
    }
}

/// Width-0.4 bump triples with centres from {-0.9, -0.5, -0.1, 0.3, 0.7};
/// none of them is invariant under tau -> -tau.
pub fn candidate_supports() -> Vec<Vec<(f64, f64)>> {
    let c = [-0.9, -0.5, -0.1, 0.3, 0.7];
    let mut out = Vec::new();
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            for k in j + 1..c.len() {
                out.push([c[i], c[j], c[k]].iter().map(|&m| (m - 0.2, m + 0.2)).collect());
            }
        }
    }
    out
}

fn bumps(d: usize, supports: &[(f64, f64)]) -> Result<Vec<TestFunction>> {
    supports.iter().map(|&(a, b)| make_bump(a, b, 0, &unit_vector(d, 0, 1.0), Complex64::new(1.0, 0.0))).collect()
}

fn est(r: &crate::wightman::NPointResult) -> Estimate {
    Estimate { value: r.value, error: r.error }
}

/// d = 6, frak m = 3, b = m, b_3 = 1 on the default grid.
pub fn tri_bump_setup() -> Result<(ModelParams, GridSpec, f64)> {
    Ok((ModelParams::with_frak_m(6, 3.0)?, GridSpec::default(), 1e-7))
}

/// Evaluate every candidate and keep the one with the largest |value|/error.
pub fn search_tri_bump() -> Result<OutFixture> {
    let (params, grid, domain_eps) = tri_bump_setup()?;
    let k = KernelEngine::new(&params, 0, domain_eps)?;
    let g = make_grid(&grid, &params)?;
    let e = NPointEngine::new(&k, &g)?;
    let mut candidates = Vec::new();
    for sup in candidate_supports() {
        let r = e.out_npoint(&bumps(params.d, &sup)?)?;
        let ratio = r.value.norm() / r.error.max(f64::MIN_POSITIVE);
        candidates.push(Candidate { supports: sup, out: est(&r), ratio });
    }
    let best = candidates.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)).cloned().expect("nonempty candidate list");
    let functions = bumps(params.d, &best.supports)?;
    let s0 = e.smatrix_element(&[], &functions)?;
    let s1 = e.smatrix_element(&functions[..1], &functions[1..])?;
    Ok(OutFixture {
        name: "tri-bump".into(),
        params,
        grid,
        domain_eps,
        functions,
        out: best.out,
        smatrix_k0: est(&s0),
        smatrix_k1: est(&s1),
        ratio: best.ratio,
        candidates,
    })
}

pub fn frozen_tri_bump() -> Result<OutFixture> {
    Ok(serde_json::from_str(TRI_BUMP_JSON)?)
}

pub fn load_fixture(path: &Path) -> Result<OutFixture> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::MissingFixture(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Recompute out_npoint and both S-matrix paths for a stored fixture.
pub fn recompute(fix: &OutFixture) -> Result<(Estimate, Estimate, Estimate)> {
    let k = KernelEngine::new(&fix.params, fix.functions.iter().map(|f| f.max_degree()).max().unwrap_or(0), fix.domain_eps)?;
    let g = make_grid(&fix.grid, &fix.params)?;
    let e = NPointEngine::new(&k, &g)?;
    let o = e.out_npoint(&fix.functions)?;
    let s0 = e.smatrix_element(&[], &fix.functions)?;
    let s1 = e.smatrix_element(&fix.functions[..1], &fix.functions[1..])?;
    Ok((est(&o), est(&s0), est(&s1)))
}
