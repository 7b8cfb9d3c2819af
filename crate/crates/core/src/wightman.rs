//! Truncated n-point functions of in/loc/out fields and currents, S-matrix
//! elements and the structural checks built on them.
//!
//! For n >= 3 the truncated function is
//!   b_n sum_k int prod_{l<k} D-(f_l,y) K_k(y) prod_{l>k} D+(f_l,y) dV(y)
//! with K_k = G_r(f_k,.) for loc, D(f_k,.) for out, f_k itself for a current
//! and no term for in slots. A current in any other position kills the term.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cos_tau, DeSitterPoint};
use crate::kernels::{KernelEngine, KernelKind, KernelValue, PreparedFn, PreparedTerm};
use crate::quadrature::{pairwise_sum, QuadratureGrid, TauNode};
use crate::testfn::{zonal, SupportHull, TestFunction};

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldTag {
    In,
    Loc,
    Out,
    /// j(f) = phi((box + m^2) f).
    Current,
    /// j(G_r(f, .)), the current term of the Yang-Feldman equation.
    RetardedCurrent,
}

impl FieldTag {
    fn is_current(self) -> bool {
        matches!(self, FieldTag::Current | FieldTag::RetardedCurrent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSlot {
    pub tag: FieldTag,
    pub f: TestFunction,
}

impl FieldSlot {
    pub fn new(tag: FieldTag, f: TestFunction) -> Self {
        FieldSlot { tag, f }
    }

    /// Adjoint slot: conjugated test function, same tag.
    pub fn star(&self) -> Self {
        FieldSlot { tag: self.tag, f: self.f.conj() }
    }
}

/// Contribution of the k-th replacement term (k counted from 1). A
/// two-point value is stored as a single entry with k = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermContribution {
    pub k: usize,
    pub value: C64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NPointResult {
    pub value: C64,
    pub error: f64,
    pub terms: Vec<TermContribution>,
    /// |fine - coarse| of the tau rule.
    pub tau_error: f64,
    /// Replicate standard error of the sphere rule (times 2).
    pub sphere_error: f64,
    /// Extrapolated contribution of |tau| > pi/2 - epsilon_cut.
    pub boundary_error: f64,
    /// Propagated kernel and truncation errors.
    pub kernel_error: f64,
    pub warning: Option<String>,
}

impl NPointResult {
    fn exact(value: C64, terms: Vec<TermContribution>) -> Self {
        NPointResult {
            value,
            error: 0.0,
            terms,
            tau_error: 0.0,
            sphere_error: 0.0,
            boundary_error: 0.0,
            kernel_error: 0.0,
            warning: None,
        }
    }

    fn check_budget(mut self) -> Self {
        if self.error > 0.1 * self.value.norm() && self.value.norm() > 0.0 {
            self.warning = Some(format!(
                "grid insufficient: error {:.3e} exceeds 10% of |value| {:.3e}",
                self.error,
                self.value.norm()
            ));
        }
        self
    }
}

/// Kernel used for one slot inside a product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Factor {
    Minus,
    Plus,
    Comm,
    Ret,
    Value,
}

/// Tabulated kernel: tau part per term and node, sphere part per term and node.
struct SlotTables {
    sph: Vec<Vec<f64>>,
    sph_tail: Vec<Vec<f64>>,
    factors: Vec<(Factor, FactorTable)>,
    rel_err: f64,
}

struct FactorTable {
    fine: Vec<Vec<C64>>,
    coarse: Vec<Vec<C64>>,
    tail_fine: Vec<Vec<f64>>,
    tail_coarse: Vec<Vec<f64>>,
}

impl SlotTables {
    fn table(&self, f: Factor) -> &FactorTable {
        &self.factors.iter().find(|(g, _)| *g == f).expect("factor tabulated").1
    }
}

struct PatternIntegral {
    value: C64,
    reps: Vec<C64>,
    coarse: C64,
    abs: f64,
    tail: f64,
    boundary: f64,
    rel_err: f64,
}

pub struct NPointEngine<'a> {
    pub kernels: &'a KernelEngine,
    pub grid: &'a QuadratureGrid,
}

impl<'a> NPointEngine<'a> {
    pub fn new(kernels: &'a KernelEngine, grid: &'a QuadratureGrid) -> Result<Self> {
        if grid.d != kernels.params.d {
            return Err(Error::InvalidSpec(format!("grid d = {} but model d = {}", grid.d, kernels.params.d)));
        }
        let (lo, hi) = grid.tau_range();
        let (mlo, mhi) = kernels.mode(0)?.tau_range();
        if lo < mlo || hi > mhi {
            return Err(Error::Budget(format!(
                "grid epsilon_cut {:.1e} below the mode domain cutoff {:.1e}",
                grid.epsilon_cut(),
                kernels.modes.domain_eps
            )));
        }
        Ok(NPointEngine { kernels, grid })
    }

    fn factor_tau(&self, f: Factor, pt: &PreparedTerm, tau: f64) -> Result<C64> {
        let t = &pt.term;
        let r2 = self.kernels.params.r * self.kernels.params.r;
        if f == Factor::Value {
            return Ok(t.coef * t.profile.value(tau));
        }
        let tp = self.kernels.t_plus(t.s, tau)?;
        let tm = tp.conj();
        let i = pt.integral.total;
        let pref = t.coef * r2;
        Ok(match f {
            Factor::Minus => pref * i.conj() * tp,
            Factor::Plus => pref * i * tm,
            Factor::Comm => pref * (i * tm).im,
            Factor::Ret => pref * (tm * self.kernels.partial_integral(&pt.integral, &t.profile, tau)?).im,
            Factor::Value => unreachable!(),
        })
    }

    fn tau_table(&self, f: Factor, terms: &[PreparedTerm], nodes: &[TauNode]) -> Result<Vec<Vec<C64>>> {
        terms
            .iter()
            .map(|pt| nodes.par_iter().map(|n| self.factor_tau(f, pt, n.tau)).collect::<Result<Vec<_>>>())
            .collect()
    }

    fn tables(&self, p: &PreparedFn, factors: &[Factor]) -> Result<SlotTables> {
        let d = self.kernels.params.d;
        let sph_of = |terms: &[PreparedTerm]| -> Vec<Vec<f64>> {
            terms
                .iter()
                .map(|pt| self.grid.sphere_nodes.iter().map(|n| zonal(pt.term.s, d, &pt.term.pole, &n.alpha)).collect())
                .collect()
        };
        let abs_tab = |v: Vec<Vec<C64>>| -> Vec<Vec<f64>> { v.into_iter().map(|r| r.into_iter().map(|z| z.norm()).collect()).collect() };
        let mut out = Vec::new();
        for &f in factors {
            if out.iter().any(|(g, _)| *g == f) {
                continue;
            }
            let tab = FactorTable {
                fine: self.tau_table(f, &p.terms, &self.grid.tau_nodes)?,
                coarse: self.tau_table(f, &p.terms, &self.grid.tau_nodes_coarse)?,
                tail_fine: abs_tab(self.tau_table(f, &p.tail, &self.grid.tau_nodes)?),
                tail_coarse: abs_tab(self.tau_table(f, &p.tail, &self.grid.tau_nodes_coarse)?),
            };
            out.push((f, tab));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        let mut me: f64 = 0.0;
        for pt in &p.terms {
            num += pt.term.coef.norm() * pt.integral.error;
            den += pt.term.coef.norm() * pt.integral.total.norm();
            let m = self.kernels.mode(pt.term.s)?;
            me = me.max(m.max_residual.max(m.wronskian_drift_scaled));
        }
        let rel_err = if den > 0.0 { num / den } else { 0.0 } + me;
        Ok(SlotTables { sph: sph_of(&p.terms), sph_tail: sph_of(&p.tail), factors: out, rel_err })
    }

    /// Integrate each pattern (one factor per slot) over the grid.
    fn integrate(&self, tabs: &[SlotTables], patterns: &[Vec<Factor>]) -> Vec<PatternIntegral> {
        let params = &self.kernels.params;
        let d = params.d as i32;
        let rd = params.r.powi(d);
        let reps = self.grid.replicates;
        let nsph = self.grid.sphere_nodes.len();
        let rep_of: Vec<usize> = self.grid.sphere_nodes.iter().map(|n| n.replicate).collect();
        let rep_count: Vec<usize> = (0..reps).map(|r| rep_of.iter().filter(|&&x| x == r).count()).collect();
        let area_w: f64 = self.grid.sphere_nodes.iter().map(|n| n.weight).sum();

        // Per tau node: per pattern (rep sums, abs sum, tail sum).
        let node_pass = |fine: bool| -> Vec<Vec<(Vec<C64>, f64, f64)>> {
            let nodes = if fine { &self.grid.tau_nodes } else { &self.grid.tau_nodes_coarse };
            (0..nodes.len())
                .into_par_iter()
                .map(|i| {
                    // kernel values K[l][factor] over sphere nodes
                    let eval = |l: usize, f: Factor| -> (Vec<C64>, Vec<f64>) {
                        let st = &tabs[l];
                        let ft = st.table(f);
                        let (tau_t, tail_t) = if fine { (&ft.fine, &ft.tail_fine) } else { (&ft.coarse, &ft.tail_coarse) };
                        let mut k = vec![C64::new(0.0, 0.0); nsph];
                        let mut tl = vec![0.0; nsph];
                        for (t, row) in st.sph.iter().enumerate() {
                            let a = tau_t[t][i];
                            if a == C64::new(0.0, 0.0) {
                                continue;
                            }
                            for j in 0..nsph {
                                k[j] += a * row[j];
                            }
                        }
                        for (t, row) in st.sph_tail.iter().enumerate() {
                            let a = tail_t[t][i];
                            for j in 0..nsph {
                                tl[j] += a * row[j].abs();
                            }
                        }
                        (k, tl)
                    };
                    let mut cache: Vec<Vec<(Factor, (Vec<C64>, Vec<f64>))>> = (0..tabs.len()).map(|_| Vec::new()).collect();
                    for pat in patterns {
                        for (l, &f) in pat.iter().enumerate() {
                            if !cache[l].iter().any(|(g, _)| *g == f) {
                                let v = eval(l, f);
                                cache[l].push((f, v));
                            }
                        }
                    }
                    patterns
                        .iter()
                        .map(|pat| {
                            let cols: Vec<&(Vec<C64>, Vec<f64>)> = pat
                                .iter()
                                .enumerate()
                                .map(|(l, f)| &cache[l].iter().find(|(g, _)| g == f).unwrap().1)
                                .collect();
                            let mut per_rep: Vec<Vec<C64>> = rep_count.iter().map(|&c| Vec::with_capacity(c)).collect();
                            let mut abs = Vec::with_capacity(nsph);
                            let mut tail = Vec::with_capacity(nsph);
                            for j in 0..nsph {
                                let mut prod = C64::new(1.0, 0.0);
                                for c in &cols {
                                    prod *= c.0[j];
                                }
                                per_rep[rep_of[j]].push(prod);
                                abs.push(prod.norm());
                                let mut tb = 0.0;
                                for (l, c) in cols.iter().enumerate() {
                                    if c.1[j] == 0.0 {
                                        continue;
                                    }
                                    let mut others = 1.0;
                                    for (m, o) in cols.iter().enumerate() {
                                        if m != l {
                                            others *= o.0[j].norm() + o.1[j];
                                        }
                                    }
                                    tb += c.1[j] * others;
                                }
                                tail.push(tb);
                            }
                            let sums: Vec<C64> = per_rep.iter().map(|v| pairwise_sum(v)).collect();
                            (sums, pairwise_sum(&abs), pairwise_sum(&tail))
                        })
                        .collect()
                })
                .collect()
        };
        let fine = node_pass(true);
        let coarse = node_pass(false);
        let vol = |tau: f64| rd * cos_tau(tau).powi(-d);

        patterns
            .iter()
            .enumerate()
            .map(|(p, pat)| {
                let collect_rep = |passes: &Vec<Vec<(Vec<C64>, f64, f64)>>, nodes: &[TauNode], r: usize| -> C64 {
                    let v: Vec<C64> = nodes
                        .iter()
                        .enumerate()
                        .map(|(i, n)| passes[i][p].0[r] * (n.weight * vol(n.tau) * area_w / rep_count[r] as f64))
                        .collect();
                    pairwise_sum(&v)
                };
                let rep_vals: Vec<C64> = (0..reps).map(|r| collect_rep(&fine, &self.grid.tau_nodes, r)).collect();
                let value = pairwise_sum(&rep_vals) / reps as f64;
                let coarse_val = pairwise_sum(
                    &(0..reps).map(|r| collect_rep(&coarse, &self.grid.tau_nodes_coarse, r)).collect::<Vec<_>>(),
                ) / reps as f64;
                let wsum = |k: usize| -> f64 {
                    let v: Vec<f64> = self
                        .grid
                        .tau_nodes
                        .iter()
                        .enumerate()
                        .map(|(i, n)| {
                            let x = if k == 1 { fine[i][p].1 } else { fine[i][p].2 };
                            x * n.weight * vol(n.tau) * area_w / nsph as f64
                        })
                        .collect();
                    pairwise_sum(&v)
                };
                // boundary extrapolation from the two outermost nodes on each side
                let nodes = &self.grid.tau_nodes;
                let dens = |i: usize| -> f64 {
                    let s: C64 = fine[i][p].0.iter().sum();
                    s.norm() * vol(nodes[i].tau) * area_w / nsph as f64
                };
                let eps = self.grid.epsilon_cut();
                let side = |i0: usize, i1: usize| -> f64 {
                    let (g0, g1) = (dens(i0), dens(i1));
                    let (x0, x1) = (FRAC_PI_2 - nodes[i0].tau.abs(), FRAC_PI_2 - nodes[i1].tau.abs());
                    if g0 == 0.0 {
                        return 0.0;
                    }
                    let q = (g0 / g1.max(f64::MIN_POSITIVE)).ln() / (x0 / x1).ln() - 0.5;
                    if q <= -1.0 {
                        return f64::INFINITY;
                    }
                    g0 * eps.powf(q + 1.0) / ((q + 1.0) * x0.powf(q))
                };
                let n = nodes.len();
                let boundary = side(0, 1) + side(n - 1, n - 2);
                let rel_err = pat.iter().enumerate().map(|(l, f)| if *f == Factor::Value { 0.0 } else { tabs[l].rel_err }).sum();
                PatternIntegral { value, reps: rep_vals, coarse: coarse_val, abs: wsum(1), tail: wsum(2), boundary, rel_err }
            })
            .collect()
    }

    fn prepare_all(&self, fns: &[&TestFunction]) -> Result<Vec<PreparedFn>> {
        fns.iter().map(|f| self.kernels.prepare(f)).collect()
    }

    /// Combine pattern integrals c_p * I_p into one result with term breakdown.
    fn assemble(&self, parts: &[(usize, C64, &PatternIntegral)]) -> NPointResult {
        let reps = self.grid.replicates;
        let spread = |vals: &[C64], mean: C64| -> f64 {
            if reps < 2 {
                return 0.0;
            }
            let var = vals.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (reps as f64 - 1.0);
            2.0 * (var / reps as f64).sqrt()
        };
        let terms: Vec<TermContribution> = parts
            .iter()
            .map(|(k, c, pi)| {
                let value = c * pi.value;
                let scaled: Vec<C64> = pi.reps.iter().map(|r| c * r).collect();
                let error = (value - c * pi.coarse).norm()
                    + spread(&scaled, value)
                    + c.norm() * (pi.boundary + pi.abs * (pi.rel_err + 1e-13) + pi.tail);
                TermContribution { k: *k, value, error }
            })
            .collect();
        let value: C64 = terms.iter().map(|t| t.value).sum();
        let rep_tot: Vec<C64> = (0..reps).map(|r| parts.iter().map(|(_, c, pi)| c * pi.reps[r]).sum()).collect();
        let sphere_error = spread(&rep_tot, value);
        let coarse: C64 = parts.iter().map(|(_, c, pi)| c * pi.coarse).sum();
        let tau_error = (value - coarse).norm();
        let boundary_error = parts.iter().map(|(_, c, pi)| c.norm() * pi.boundary).sum();
        let kernel_error = parts.iter().map(|(_, c, pi)| c.norm() * (pi.abs * (pi.rel_err + 1e-13) + pi.tail)).sum();
        let error = tau_error + sphere_error + boundary_error + kernel_error;
        NPointResult { value, error, terms, tau_error, sphere_error, boundary_error, kernel_error, warning: None }.check_budget()
    }

    /// Two-point value (b^2/m^2) D+(f1, f2), zero if a current is involved.
    fn two_point(&self, slots: &[FieldSlot]) -> Result<NPointResult> {
        if slots.iter().any(|s| s.tag.is_current()) {
            return Ok(NPointResult::exact(C64::new(0.0, 0.0), vec![TermContribution { k: 0, value: C64::new(0.0, 0.0), error: 0.0 }]));
        }
        let kv = self.kernels.full_fns(KernelKind::Dplus, &slots[0].f, &slots[1].f)?;
        let c = self.kernels.params.two_point_factor();
        let mut r = NPointResult::exact(kv.value * c, vec![TermContribution { k: 0, value: kv.value * c, error: kv.error * c }]);
        r.kernel_error = kv.error * c;
        r.error = r.kernel_error;
        Ok(r.check_budget())
    }

    pub fn truncated_npoint(&self, slots: &[FieldSlot]) -> Result<NPointResult> {
        let n = slots.len();
        if n < 2 {
            return Err(Error::Precondition(format!("truncated functions need n >= 2, got {n}")));
        }
        if n == 2 {
            return self.two_point(slots);
        }
        let bn = self.kernels.params.bn(n);
        let mut patterns = Vec::new();
        let mut ks = Vec::new();
        let mut zero_terms = Vec::new();
        for k in 0..n {
            let own = match slots[k].tag {
                FieldTag::In => continue,
                FieldTag::Loc | FieldTag::RetardedCurrent => Factor::Ret,
                FieldTag::Out => Factor::Comm,
                FieldTag::Current => Factor::Value,
            };
            if slots.iter().enumerate().any(|(l, s)| l != k && s.tag.is_current()) {
                zero_terms.push(k);
                continue;
            }
            let pat: Vec<Factor> = (0..n)
                .map(|l| if l < k { Factor::Minus } else if l == k { own } else { Factor::Plus })
                .collect();
            patterns.push(pat);
            ks.push(k);
        }
        if patterns.is_empty() {
            let terms = zero_terms.iter().map(|&k| TermContribution { k: k + 1, value: C64::new(0.0, 0.0), error: 0.0 }).collect();
            return Ok(NPointResult::exact(C64::new(0.0, 0.0), terms));
        }
        let prepared = self.prepare_all(&slots.iter().map(|s| &s.f).collect::<Vec<_>>())?;
        let tabs: Vec<SlotTables> = (0..n)
            .map(|l| {
                let fs: Vec<Factor> = patterns.iter().map(|p| p[l]).collect();
                self.tables(&prepared[l], &fs)
            })
            .collect::<Result<_>>()?;
        let ints = self.integrate(&tabs, &patterns);
        let bnc = C64::new(bn, 0.0);
        let mut parts: Vec<(usize, C64, &PatternIntegral)> = ks.iter().zip(&ints).map(|(&k, pi)| (k + 1, bnc, pi)).collect();
        parts.sort_by_key(|p| p.0);
        let mut r = self.assemble(&parts);
        for k in zero_terms {
            r.terms.push(TermContribution { k: k + 1, value: C64::new(0.0, 0.0), error: 0.0 });
        }
        r.terms.sort_by_key(|t| t.k);
        Ok(r)
    }

    /// <phi_in(conj f_k)...phi_in(conj f_1) Psi0, phi_out(f_{k+1})...phi_out(f_n) Psi0>^T
    /// = b_n (i/2) [int prod_{l<=k} D- prod_{l>k} D+ - int prod D-], k = |in|.
    pub fn smatrix_element(&self, in_fns: &[TestFunction], out_fns: &[TestFunction]) -> Result<NPointResult> {
        let n = in_fns.len() + out_fns.len();
        if n < 3 {
            return Err(Error::Precondition(format!("S-matrix elements need n >= 3, got {n}")));
        }
        if out_fns.is_empty() {
            return Ok(NPointResult::exact(C64::new(0.0, 0.0), vec![]));
        }
        let k = in_fns.len();
        let fns: Vec<&TestFunction> = in_fns.iter().chain(out_fns).collect();
        let prepared = self.prepare_all(&fns)?;
        let mixed: Vec<Factor> = (0..n).map(|l| if l < k { Factor::Minus } else { Factor::Plus }).collect();
        let minus = vec![Factor::Minus; n];
        let patterns = vec![mixed, minus];
        let tabs: Vec<SlotTables> = (0..n)
            .map(|l| self.tables(&prepared[l], &[patterns[0][l], patterns[1][l]]))
            .collect::<Result<_>>()?;
        let ints = self.integrate(&tabs, &patterns);
        let c = C64::new(0.0, 0.5 * self.kernels.params.bn(n));
        Ok(self.assemble(&[(1, c, &ints[0]), (2, -c, &ints[1])]))
    }

    /// b_n Im int prod D-(f_l, y) dV for real test functions.
    pub fn out_npoint(&self, fns: &[TestFunction]) -> Result<NPointResult> {
        let n = fns.len();
        if n < 3 {
            return Err(Error::Precondition(format!("out n-point needs n >= 3, got {n}")));
        }
        if let Some(i) = fns.iter().position(|f| !f.is_real()) {
            return Err(Error::NonReal(format!("test function {i} has complex coefficients")));
        }
        let prepared = self.prepare_all(&fns.iter().collect::<Vec<_>>())?;
        let pat = vec![vec![Factor::Minus; n]];
        let tabs: Vec<SlotTables> = prepared.iter().map(|p| self.tables(p, &[Factor::Minus])).collect::<Result<_>>()?;
        let ints = self.integrate(&tabs, &pat);
        let pi = &ints[0];
        let bn = self.kernels.params.bn(n);
        // Im z = (z - conj z)/(2i): take the imaginary part replicate-wise.
        let im = PatternIntegral {
            value: C64::new(pi.value.im, 0.0),
            reps: pi.reps.iter().map(|z| C64::new(z.im, 0.0)).collect(),
            coarse: C64::new(pi.coarse.im, 0.0),
            abs: pi.abs,
            tail: pi.tail,
            boundary: pi.boundary,
            rel_err: pi.rel_err,
        };
        Ok(self.assemble(&[(1, C64::new(bn, 0.0), &im)]))
    }
}

/// Hermiticity check result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HermiticityReport {
    pub lhs: C64,
    pub rhs_conj: C64,
    pub defect: f64,
    pub scale: f64,
    pub relative: f64,
    pub passed: bool,
}

impl<'a> NPointEngine<'a> {
    /// W^T(f_1..f_n) against conj W^T(conj f_n..conj f_1) on the same grid.
    pub fn verify_hermiticity(&self, slots: &[FieldSlot]) -> Result<HermiticityReport> {
        let a = self.truncated_npoint(slots)?;
        let rev: Vec<FieldSlot> = slots.iter().rev().map(|s| s.star()).collect();
        let b = self.truncated_npoint(&rev)?;
        let defect = (a.value - b.value.conj()).norm();
        let scale = a.value.norm().max(b.value.norm()).max(f64::MIN_POSITIVE);
        let relative = defect / scale;
        Ok(HermiticityReport { lhs: a.value, rhs_conj: b.value.conj(), defect, scale, relative, passed: relative <= 1e-12 })
    }

    /// Yang-Feldman term check: loc slot k equals in slot k plus the retarded
    /// current in slot k, term by term. Returns the largest term mismatch.
    pub fn yang_feldman_check(&self, slots: &[FieldSlot], k: usize) -> Result<YangFeldmanReport> {
        if k >= slots.len() {
            return Err(Error::Precondition(format!("slot {k} out of range")));
        }
        let with = |tag: FieldTag| -> Result<NPointResult> {
            let mut s = slots.to_vec();
            s[k].tag = tag;
            self.truncated_npoint(&s)
        };
        let loc = with(FieldTag::Loc)?;
        let inn = with(FieldTag::In)?;
        let cur = with(FieldTag::RetardedCurrent)?;
        let get = |r: &NPointResult, k: usize| r.terms.iter().filter(|t| t.k == k).map(|t| t.value).sum::<C64>();
        let mut max_defect: f64 = 0.0;
        let mut rows = Vec::new();
        for kk in 0..=slots.len() {
            let (a, b, c) = (get(&loc, kk), get(&inn, kk), get(&cur, kk));
            max_defect = max_defect.max((a - b - c).norm());
            rows.push((kk, a, b, c));
        }
        Ok(YangFeldmanReport { loc: loc.value, inn: inn.value, current: cur.value, rows, max_defect })
    }

    /// W^T on the rotated slots and rotated grid against the original.
    pub fn verify_rotation_invariance(&self, slots: &[FieldSlot], rot: &DMatrix<f64>) -> Result<(NPointResult, NPointResult)> {
        let rotated: Vec<FieldSlot> =
            slots.iter().map(|s| Ok(FieldSlot { tag: s.tag, f: s.f.rotate(rot)? })).collect::<Result<_>>()?;
        let g2 = self.grid.rotated(rot);
        let e2 = NPointEngine { kernels: self.kernels, grid: &g2 };
        Ok((self.truncated_npoint(slots)?, e2.truncated_npoint(&rotated)?))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct YangFeldmanReport {
    pub loc: C64,
    pub inn: C64,
    pub current: C64,
    /// (k, loc term, in term, current term)
    pub rows: Vec<(usize, C64, C64, C64)>,
    pub max_defect: f64,
}

/// Which case of the locality argument applies at a point y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalityCase {
    /// y causally unrelated to both supports.
    I,
    /// y in supp f_k.
    II,
    /// Both light cones of y meet supp f_k.
    III,
    /// Only the past cone of y meets supp f_k.
    IV,
    /// Only the future cone of y meets supp f_k.
    V,
}

pub fn locality_case(hull: &SupportHull, other: &SupportHull, y: &DeSitterPoint) -> LocalityCase {
    let inside = y.tau >= hull.tau_lo && y.tau <= hull.tau_hi && hull.sphere_distance(&y.alpha) == 0.0;
    if inside {
        return LocalityCase::II;
    }
    let past_meets = hull.in_causal_future(y);
    let future_meets = hull.in_causal_past(y);
    match (past_meets, future_meets) {
        (true, true) => LocalityCase::III,
        (true, false) => LocalityCase::IV,
        (false, true) => LocalityCase::V,
        (false, false) => {
            if other.in_causal_future(y) || other.in_causal_past(y) {
                // y only related to the other support: same bracket argument with roles exchanged
                if other.in_causal_future(y) { LocalityCase::IV } else { LocalityCase::V }
            } else {
                LocalityCase::I
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BracketSample {
    pub y: DeSitterPoint,
    pub case: LocalityCase,
    pub bracket: C64,
    pub error: f64,
    pub ccr_bracket: C64,
    pub ccr_scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BracketReport {
    pub samples: Vec<BracketSample>,
    /// max |bracket| / error over the samples.
    pub max_ratio: f64,
    pub max_bracket: f64,
    /// max |ccr bracket| / scale.
    pub max_ccr_relative: f64,
    pub spacelike: bool,
}

fn prod_err(a: &KernelValue, b: &KernelValue) -> f64 {
    a.value.norm() * b.error + a.error * b.value.norm() + a.error * b.error
}

impl KernelEngine {
    /// The locality bracket
    ///   G_r(f_k)D+(f_{k+1}) + D-(f_k)G_r(f_{k+1}) - G_r(f_{k+1})D+(f_k) - D-(f_{k+1})G_r(f_k)
    /// = 2i [G_r(f_k) D(f_{k+1}) - G_r(f_{k+1}) D(f_k)] at each sample point,
    /// together with the same bracket with G_r replaced by D.
    pub fn locality_bracket(&self, fk: &TestFunction, fk1: &TestFunction, points: &[DeSitterPoint]) -> Result<BracketReport> {
        let (pk, pk1) = (self.prepare(fk)?, self.prepare(fk1)?);
        let (hk, hk1) = (fk.hull(), fk1.hull());
        let spacelike = hk.spacelike_to(&hk1);
        let samples: Vec<BracketSample> = points
            .par_iter()
            .map(|y| -> Result<BracketSample> {
                let ev = |p: &PreparedFn, k: KernelKind| self.half(k, p, y);
                let (gk, gk1) = (ev(&pk, KernelKind::Gret)?, ev(&pk1, KernelKind::Gret)?);
                let (dpk, dpk1) = (ev(&pk, KernelKind::Dplus)?, ev(&pk1, KernelKind::Dplus)?);
                let (dmk, dmk1) = (ev(&pk, KernelKind::Dminus)?, ev(&pk1, KernelKind::Dminus)?);
                let (dk, dk1) = (ev(&pk, KernelKind::Dcomm)?, ev(&pk1, KernelKind::Dcomm)?);
                let bracket = gk.value * dpk1.value + dmk.value * gk1.value - gk1.value * dpk.value - dmk1.value * gk.value;
                let error = prod_err(&gk, &dpk1) + prod_err(&dmk, &gk1) + prod_err(&gk1, &dpk) + prod_err(&dmk1, &gk);
                let t = [dk.value * dpk1.value, dmk.value * dk1.value, dk1.value * dpk.value, dmk1.value * dk.value];
                let ccr_bracket = t[0] + t[1] - t[2] - t[3];
                let ccr_scale = t.iter().map(|z| z.norm()).sum::<f64>();
                Ok(BracketSample { y: y.clone(), case: locality_case(&hk, &hk1, y), bracket, error, ccr_bracket, ccr_scale })
            })
            .collect::<Result<_>>()?;
        let max_ratio = samples.iter().map(|s| if s.error > 0.0 { s.bracket.norm() / s.error } else if s.bracket.norm() == 0.0 { 0.0 } else { f64::INFINITY }).fold(0.0, f64::max);
        let max_bracket = samples.iter().map(|s| s.bracket.norm()).fold(0.0, f64::max);
        let max_ccr_relative = samples
            .iter()
            .map(|s| if s.ccr_scale > 0.0 { s.ccr_bracket.norm() / s.ccr_scale } else { 0.0 })
            .fold(0.0, f64::max);
        Ok(BracketReport { samples, max_ratio, max_bracket, max_ccr_relative, spacelike })
    }

    /// As `locality_bracket`, but refuses pairs whose support hulls are not spacelike.
    pub fn verify_locality_bracket(&self, fk: &TestFunction, fk1: &TestFunction, points: &[DeSitterPoint]) -> Result<BracketReport> {
        if !fk.hull().spacelike_to(&fk1.hull()) {
            return Err(Error::Precondition("supports are not spacelike separated".into()));
        }
        self.locality_bracket(fk, fk1, points)
    }
}
