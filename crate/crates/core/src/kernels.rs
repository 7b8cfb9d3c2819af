//! Smeared fundamental kernels D+, D-, D, G_r, G_a as mode sums.
//!
//! With f = c a(tau) Z_{s,beta} the sphere projection is exact, so
//!   D+(f,y)  = c r^2 I  conj(T(tau_y)) Z(alpha_y)
//!   D-(f,y)  = c r^2 conj(I) T(tau_y) Z(alpha_y)
//!   G_r(f,y) = c r^2 Im(conj(T(tau_y)) J(tau_y)) Z(alpha_y)
//! where T = T+_p, I = int a T cos^-d, J(t) = int_t^inf a T cos^-d.
//! T- is taken as conj(T+) throughout (both mass series).

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cos_tau, sphere_area, DeSitterPoint, ModelParams};
use crate::modes::{ModeFunction, ModeSet};
use crate::quadrature::gauss_legendre;
use crate::specfun::harmonic_dimension;
use crate::testfn::{zonal, Profile, Term, TestFunction};

type C64 = Complex64;

const PANEL_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    Dplus,
    Dminus,
    Dcomm,
    Gret,
    Gadv,
}

/// A kernel value with its error bound. `tail` is the part of the bound
/// coming from truncated harmonic components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: C64,
    pub error: f64,
    pub tail: f64,
}

impl KernelValue {
    fn zero() -> Self {
        KernelValue { value: C64::new(0.0, 0.0), error: 0.0, tail: 0.0 }
    }
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

fn gl_panel<F: Fn(f64) -> C64>(a: f64, b: f64, f: &F) -> C64 {
    let (x, w) = rule();
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..x.len() {
        acc += w[i] * f(mid + half * x[i]);
    }
    acc * half
}

fn panels_for(width: f64, p: f64) -> usize {
    ((width * (p + 2.0) / 1.5).ceil() as usize).max(32)
}

/// Composite rule with `n` panels and with `n/2` panels; returns (fine, |fine - coarse|).
fn integrate_pair<F: Fn(f64) -> C64>(a: f64, b: f64, n: usize, f: &F) -> (C64, f64) {
    if b <= a {
        return (C64::new(0.0, 0.0), 0.0);
    }
    let sum = |m: usize| -> C64 {
        let h = (b - a) / m as f64;
        (0..m).map(|k| gl_panel(a + k as f64 * h, a + (k + 1) as f64 * h, f)).sum()
    };
    let fine = sum(n);
    let coarse = sum((n / 2).max(1));
    (fine, (fine - coarse).norm())
}

/// Mode error used to propagate relative uncertainty of T.
fn mode_error(m: &ModeFunction) -> f64 {
    m.max_residual.max(m.wronskian_drift_scaled).max(1e-14)
}

/// I = int a T+ cos^-d over the support, with the cumulative tail J at
/// panel edges for partial integrals.
#[derive(Debug, Clone)]
pub struct ProfileIntegral {
    pub s: usize,
    pub lo: f64,
    pub hi: f64,
    edges: Vec<f64>,
    tail: Vec<C64>,
    pub total: C64,
    pub error: f64,
}

impl ProfileIntegral {
    fn panel_of(&self, tau: f64) -> usize {
        let k = self.edges.partition_point(|&e| e <= tau);
        k.clamp(1, self.edges.len() - 1) - 1
    }
}

#[derive(Debug, Clone)]
pub struct PreparedTerm {
    pub term: Term,
    pub integral: ProfileIntegral,
}

/// A test function with all profile integrals computed.
#[derive(Debug, Clone)]
pub struct PreparedFn {
    pub f: TestFunction,
    pub terms: Vec<PreparedTerm>,
    pub tail: Vec<PreparedTerm>,
}

pub struct KernelEngine {
    pub params: ModelParams,
    pub modes: ModeSet,
}

impl KernelEngine {
    pub fn new(params: &ModelParams, s_max: usize, domain_eps: f64) -> Result<Self> {
        Ok(KernelEngine { params: params.clone(), modes: ModeSet::build(params, s_max, domain_eps)? })
    }

    pub fn from_modes(modes: ModeSet) -> Self {
        KernelEngine { params: modes.params.clone(), modes }
    }

    pub fn s_max(&self) -> usize {
        self.modes.s_max()
    }

    pub fn mode(&self, s: usize) -> Result<&ModeFunction> {
        self.modes.mode(s)
    }

    /// T+_p(tau) for degree s.
    pub fn t_plus(&self, s: usize, tau: f64) -> Result<C64> {
        self.mode(s)?.t_plus(tau)
    }

    fn weight(&self, tau: f64) -> f64 {
        cos_tau(tau).powi(-(self.params.d as i32))
    }

    /// r^2: r^{2-d} of the kernel times r^d of the volume element.
    fn half_prefactor(&self) -> f64 {
        self.params.r * self.params.r
    }

    pub fn profile_integral(&self, profile: &Profile, s: usize) -> Result<ProfileIntegral> {
        let mode = self.mode(s)?;
        let (lo, hi) = profile.support();
        let (mlo, mhi) = mode.tau_range();
        if lo < mlo || hi > mhi {
            return Err(Error::Domain(format!("support [{lo}, {hi}] leaves the mode domain")));
        }
        let n = panels_for(hi - lo, mode.p);
        let g = |t: f64| -> C64 {
            let a = profile.value(t);
            if a == 0.0 {
                return C64::new(0.0, 0.0);
            }
            a * self.weight(t) * mode.t_plus(t).unwrap_or_default()
        };
        let h = (hi - lo) / n as f64;
        let edges: Vec<f64> = (0..=n).map(|k| lo + k as f64 * h).collect();
        let mut tail = vec![C64::new(0.0, 0.0); n + 1];
        for k in (0..n).rev() {
            tail[k] = tail[k + 1] + gl_panel(edges[k], edges[k + 1], &g);
        }
        let total = tail[0];
        let coarse = integrate_pair(lo, hi, n / 2, &g).0;
        let error = (total - coarse).norm() + total.norm() * mode_error(mode);
        Ok(ProfileIntegral { s, lo, hi, edges, tail, total, error })
    }

    /// J(tau) = int_tau^hi a T+ cos^-d.
    pub fn partial_integral(&self, pi: &ProfileIntegral, profile: &Profile, tau: f64) -> Result<C64> {
        if tau <= pi.lo {
            return Ok(pi.total);
        }
        if tau >= pi.hi {
            return Ok(C64::new(0.0, 0.0));
        }
        let mode = self.mode(pi.s)?;
        let k = pi.panel_of(tau);
        let g = |t: f64| -> C64 {
            let a = profile.value(t);
            if a == 0.0 {
                return C64::new(0.0, 0.0);
            }
            a * self.weight(t) * mode.t_plus(t).unwrap_or_default()
        };
        Ok(pi.tail[k + 1] + gl_panel(tau, pi.edges[k + 1], &g))
    }

    fn prepare_terms(&self, terms: &[Term]) -> Result<Vec<PreparedTerm>> {
        terms
            .iter()
            .map(|t| {
                if t.pole.len() != self.params.d {
                    return Err(Error::Domain("test function dimension differs from d".into()));
                }
                Ok(PreparedTerm { term: t.clone(), integral: self.profile_integral(&t.profile, t.s)? })
            })
            .collect()
    }

    pub fn prepare(&self, f: &TestFunction) -> Result<PreparedFn> {
        if f.d != self.params.d {
            return Err(Error::Domain(format!("test function has d = {} but model d = {}", f.d, self.params.d)));
        }
        let need = f.max_degree();
        if need > self.s_max() {
            return Err(Error::Truncation { needed: need, available: self.s_max() });
        }
        Ok(PreparedFn { f: f.clone(), terms: self.prepare_terms(&f.terms)?, tail: self.prepare_terms(&f.tail)? })
    }

    /// Value and error of one term's half-smeared kernel at y.
    pub fn half_term(&self, kind: KernelKind, pt: &PreparedTerm, y: &DeSitterPoint) -> Result<(C64, f64)> {
        let t = &pt.term;
        let z = zonal(t.s, self.params.d, &t.pole, &y.alpha);
        let mode = self.mode(t.s)?;
        let tp = mode.t_plus(y.tau)?;
        let tm = tp.conj();
        let pref = t.coef * self.half_prefactor() * z;
        let i = pt.integral.total;
        let me = mode_error(mode);
        let base_err = pref.norm() * tp.norm() * (pt.integral.error + i.norm() * me);
        let v = match kind {
            KernelKind::Dplus => pref * i * tm,
            KernelKind::Dminus => pref * i.conj() * tp,
            KernelKind::Dcomm => pref * (i * tm).im,
            KernelKind::Gret => {
                let j = self.partial_integral(&pt.integral, &t.profile, y.tau)?;
                pref * (tm * j).im
            }
            KernelKind::Gadv => {
                let j = self.partial_integral(&pt.integral, &t.profile, y.tau)?;
                -pref * (tm * (i - j)).im
            }
        };
        Ok((v, base_err))
    }

    pub fn half(&self, kind: KernelKind, f: &PreparedFn, y: &DeSitterPoint) -> Result<KernelValue> {
        y.validate()?;
        let mut out = KernelValue::zero();
        for pt in &f.terms {
            let (v, e) = self.half_term(kind, pt, y)?;
            out.value += v;
            out.error += e;
        }
        for pt in &f.tail {
            let (v, e) = self.half_term(kind, pt, y)?;
            out.tail += v.norm() + e;
        }
        out.error += out.tail + 4.0 * f64::EPSILON * out.value.norm();
        Ok(out)
    }

    pub fn smear_plus(&self, f: &TestFunction, y: &DeSitterPoint) -> Result<KernelValue> {
        self.half(KernelKind::Dplus, &self.prepare(f)?, y)
    }

    pub fn smear_minus(&self, f: &TestFunction, y: &DeSitterPoint) -> Result<KernelValue> {
        self.half(KernelKind::Dminus, &self.prepare(f)?, y)
    }

    pub fn smear_comm(&self, f: &TestFunction, y: &DeSitterPoint) -> Result<KernelValue> {
        self.half(KernelKind::Dcomm, &self.prepare(f)?, y)
    }

    /// Retarded kernel; a multi-harmonic f is handled term by term.
    pub fn smear_retarded(&self, f: &TestFunction, y: &DeSitterPoint) -> Result<KernelValue> {
        self.half(KernelKind::Gret, &self.prepare(f)?, y)
    }

    pub fn smear_advanced(&self, f: &TestFunction, y: &DeSitterPoint) -> Result<KernelValue> {
        self.half(KernelKind::Gadv, &self.prepare(f)?, y)
    }

    /// tau integral of b(tau) Im(conj T J_a(tau)) cos^-d over [lo, hi] (retarded)
    /// or of b Im(conj T (I - J_a)) (advanced), returned with its error.
    fn green_tau(&self, a: &PreparedTerm, b: &PreparedTerm, advanced: bool) -> Result<(f64, f64)> {
        let (blo, bhi) = b.term.profile.support();
        let (lo, hi) = if advanced { (blo.max(a.integral.lo), bhi) } else { (blo, bhi.min(a.integral.hi)) };
        if hi <= lo {
            return Ok((0.0, 0.0));
        }
        let mode = self.mode(a.term.s)?;
        let g = |t: f64| -> C64 {
            let bv = b.term.profile.value(t);
            if bv == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let tm = mode.t_plus(t).unwrap_or_default().conj();
            let j = self.partial_integral(&a.integral, &a.term.profile, t).unwrap_or_default();
            let k = if advanced { a.integral.total - j } else { j };
            C64::new(bv * self.weight(t) * (tm * k).im, 0.0)
        };
        let n = panels_for(hi - lo, mode.p);
        let (v, e) = integrate_pair(lo, hi, n, &g);
        Ok((v.re, e + v.norm() * mode_error(mode) + a.integral.error * b.integral.total.norm().max(1.0)))
    }

    fn full_pair(&self, kind: KernelKind, a: &PreparedTerm, b: &PreparedTerm) -> Result<(C64, f64)> {
        if a.term.s != b.term.s {
            return Ok((C64::new(0.0, 0.0), 0.0));
        }
        let d = self.params.d;
        let zf = zonal(a.term.s, d, &a.term.pole, &b.term.pole);
        let pref = a.term.coef * b.term.coef * self.params.r.powi(d as i32 + 2) * zf;
        let (ia, ib) = (a.integral.total, b.integral.total);
        let prod_err = a.integral.error * ib.norm() + b.integral.error * ia.norm();
        Ok(match kind {
            KernelKind::Dplus => (pref * ia * ib.conj(), pref.norm() * prod_err),
            KernelKind::Dminus => (pref * ib * ia.conj(), pref.norm() * prod_err),
            KernelKind::Dcomm => (pref * (ia * ib.conj()).im, pref.norm() * prod_err),
            KernelKind::Gret => {
                let (v, e) = self.green_tau(a, b, false)?;
                (pref * v, pref.norm() * e)
            }
            KernelKind::Gadv => {
                let (v, e) = self.green_tau(a, b, true)?;
                (-pref * v, pref.norm() * e)
            }
        })
    }

    /// Fully smeared K(f, h) = int K(f, y) h(y) dV.
    pub fn full(&self, kind: KernelKind, f: &PreparedFn, h: &PreparedFn) -> Result<KernelValue> {
        let mut out = KernelValue::zero();
        let fs = f.terms.iter().map(|t| (t, false)).chain(f.tail.iter().map(|t| (t, true)));
        for (a, at) in fs {
            let hs = h.terms.iter().map(|t| (t, false)).chain(h.tail.iter().map(|t| (t, true)));
            for (b, bt) in hs {
                let (v, e) = self.full_pair(kind, a, b)?;
                if at || bt {
                    out.tail += v.norm() + e;
                } else {
                    out.value += v;
                    out.error += e;
                }
            }
        }
        out.error += out.tail + 8.0 * f64::EPSILON * out.value.norm();
        Ok(out)
    }

    pub fn full_fns(&self, kind: KernelKind, f: &TestFunction, h: &TestFunction) -> Result<KernelValue> {
        self.full(kind, &self.prepare(f)?, &self.prepare(h)?)
    }

    /// int f h dV for separable test functions (same-degree pairing of zonals).
    pub fn volume_pairing(&self, f: &TestFunction, h: &TestFunction) -> Result<KernelValue> {
        let d = self.params.d;
        let rd = self.params.r.powi(d as i32);
        let mut out = KernelValue::zero();
        for a in &f.terms {
            for b in &h.terms {
                if a.s != b.s {
                    continue;
                }
                let (alo, ahi) = a.profile.support();
                let (blo, bhi) = b.profile.support();
                let (lo, hi) = (alo.max(blo), ahi.min(bhi));
                if hi <= lo {
                    continue;
                }
                let g = |t: f64| C64::new(a.profile.value(t) * b.profile.value(t) * self.weight(t), 0.0);
                let (v, e) = integrate_pair(lo, hi, 32, &g);
                let pref = a.coef * b.coef * rd * zonal(a.s, d, &a.pole, &b.pole);
                out.value += pref * v.re;
                out.error += pref.norm() * e;
            }
        }
        out.error += 8.0 * f64::EPSILON * out.value.norm();
        Ok(out)
    }

    /// Abel-damped pointwise two-point function
    /// sum_{s <= s_max} e^{-p eta} T+(tau1) T-(tau2) A(s,d) C_s(alpha1.alpha2), with a tail bound.
    pub fn kernel_point(&self, x1: &DeSitterPoint, x2: &DeSitterPoint, eta: f64, s_max: usize) -> Result<KernelValue> {
        if !(eta > 0.0) {
            return Err(Error::Domain(format!("damping eta = {eta} must be positive")));
        }
        x1.validate()?;
        x2.validate()?;
        if s_max > self.s_max() {
            return Err(Error::Truncation { needed: s_max, available: self.s_max() });
        }
        let d = self.params.d;
        let kr = self.params.r.powi(2 - d as i32);
        let mut sum = C64::new(0.0, 0.0);
        let mut err = 0.0;
        let mut c_t: f64 = 0.0;
        for s in 0..=s_max {
            let mode = self.mode(s)?;
            let p = mode.p;
            let t1 = mode.t_plus(x1.tau)?;
            let t2 = mode.t_plus(x2.tau)?.conj();
            let z = zonal(s, d, &x1.alpha, &x2.alpha);
            let term = (-p * eta).exp() * t1 * t2 * z * kr;
            sum += term;
            err += term.norm() * 2.0 * mode_error(mode);
            if 2 * s >= s_max {
                c_t = c_t.max(p * t1.norm() * t2.norm());
            }
        }
        // |T+(tau1) T-(tau2)| <~ c_t / p beyond the cutoff; |A C_s| <= h(s,d)/|S^{d-1}|
        let area = sphere_area(d);
        let mut tail = 0.0;
        let mut s = s_max + 1;
        loop {
            let p = self.params.p_of(s);
            let b = 2.0 * c_t / p * (-p * eta).exp() * harmonic_dimension(s, d) as f64 / area * kr;
            tail += b;
            if b <= 1e-17 * (sum.norm() + tail) || s > s_max + 1_000_000 {
                break;
            }
            s += 1;
        }
        Ok(KernelValue { value: sum, error: err + tail, tail })
    }

    /// Green identity check: returns (G_r((box+m^2) f, h), int f h dV).
    pub fn green_identity(&self, f: &TestFunction, h: &TestFunction) -> Result<(KernelValue, KernelValue)> {
        let kf = f.apply_kg(&self.params);
        let lhs = self.full_fns(KernelKind::Gret, &kf, h)?;
        let rhs = self.volume_pairing(f, h)?;
        Ok((lhs, rhs))
    }
}

/// Closed form of the damped coincident kernel for d = 4, frak_m^2 = 2 at tau = 0:
/// (1/2 pi^2) e^{-eta} / (1 - e^{-eta})^2.
pub fn coincident_d4_closed_form(eta: f64) -> f64 {
    let q = (-eta).exp();
    q / ((1.0 - q) * (1.0 - q)) / (2.0 * PI * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::{make_bump, unit_vector};

    fn engine4(s_max: usize) -> KernelEngine {
        KernelEngine::new(&ModelParams::with_frak_m(4, 2f64.sqrt()).unwrap(), s_max, 1e-6).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn profile_integral_mu0_closed_form() {
        // T = cos e^{i p tau}/sqrt p, so I = int a e^{ipt} cos^{-3} / sqrt p
        let e = engine4(3);
        let prof = Profile::Bump { lo: -0.3, hi: 0.4 };
        let pi = e.profile_integral(&prof, 2).unwrap();
        let p = 3.0f64;
        let g = |t: f64| c(0.0, p * t).exp() * prof.value(t) / t.cos().powi(3) / p.sqrt();
        let (exact, _) = integrate_pair(-0.3, 0.4, 64, &g);
        assert!((pi.total - exact).norm() < 1e-9 * exact.norm());
        assert!(pi.error < 1e-7 * exact.norm());
        let j = e.partial_integral(&pi, &prof, 0.1).unwrap();
        let (part, _) = integrate_pair(0.1, 0.4, 64, &g);
        assert!((j - part).norm() < 1e-9 * exact.norm());
    }

    #[test]
    fn dcomm_is_imaginary_part_of_dplus_for_real_f() {
        let e = engine4(2);
        let f = make_bump(-0.3, 0.3, 1, &unit_vector(4, 3, 1.0), c(1.0, 0.0)).unwrap();
        let y = DeSitterPoint::normalized(0.9, vec![0.2, 0.1, -0.3, 0.9]).unwrap();
        let dp = e.smear_plus(&f, &y).unwrap().value;
        let dc = e.smear_comm(&f, &y).unwrap().value;
        assert_eq!(dc.re, dp.im);
        assert_eq!(dc.im, 0.0);
        let dm = e.smear_minus(&f, &y).unwrap().value;
        assert!((dm - dp.conj()).norm() < 1e-15 * dp.norm());
    }

    #[test]
    fn retarded_minus_advanced_is_commutator() {
        let e = engine4(2);
        let f = make_bump(-0.3, 0.3, 2, &unit_vector(4, 3, 1.0), c(0.7, -0.2)).unwrap();
        for &tau in &[-0.8, -0.1, 0.05, 0.6] {
            let y = DeSitterPoint::normalized(tau, vec![0.4, 0.1, -0.3, 0.8]).unwrap();
            let gr = e.smear_retarded(&f, &y).unwrap();
            let ga = e.smear_advanced(&f, &y).unwrap();
            let d = e.smear_comm(&f, &y).unwrap();
            assert!((gr.value - ga.value - d.value).norm() <= gr.error + ga.error + d.error);
        }
    }

    #[test]
    fn retarded_vanishes_after_support() {
        let e = engine4(1);
        let f = make_bump(-0.3, 0.3, 0, &unit_vector(4, 3, 1.0), c(1.0, 0.0)).unwrap();
        let y = DeSitterPoint::new(0.5, unit_vector(4, 0, 1.0)).unwrap();
        assert_eq!(e.smear_retarded(&f, &y).unwrap().value, c(0.0, 0.0));
        let y = DeSitterPoint::new(-0.5, unit_vector(4, 0, 1.0)).unwrap();
        assert_eq!(e.smear_advanced(&f, &y).unwrap().value, c(0.0, 0.0));
    }

    #[test]
    fn single_harmonic_is_exact_in_s() {
        let small = engine4(2);
        let big = engine4(6);
        let f = make_bump(-0.2, 0.4, 2, &unit_vector(4, 3, 1.0), c(1.0, 0.3)).unwrap();
        let y = DeSitterPoint::normalized(0.3, vec![0.1, 0.2, 0.3, 0.9]).unwrap();
        assert_eq!(small.smear_plus(&f, &y).unwrap().value, big.smear_plus(&f, &y).unwrap().value);
        let f3 = make_bump(-0.2, 0.4, 3, &unit_vector(4, 3, 1.0), c(1.0, 0.3)).unwrap();
        assert!(matches!(small.smear_plus(&f3, &y), Err(Error::Truncation { .. })));
    }

    #[test]
    fn kernel_point_coincident_closed_form() {
        let e = engine4(60);
        let x = DeSitterPoint::new(0.0, unit_vector(4, 3, 1.0)).unwrap();
        let eta = 0.5;
        let k = e.kernel_point(&x, &x, eta, 60).unwrap();
        let exact = coincident_d4_closed_form(eta);
        assert!(k.value.im.abs() < 1e-12 * exact);
        assert!((k.value.re - exact).abs() <= k.error + 1e-9 * exact, "{} {} {}", k.value.re, exact, k.error);
        assert!(k.error < 1e-3 * exact);
    }

    #[test]
    fn kernel_point_swap_conjugates() {
        let e = engine4(20);
        let x = DeSitterPoint::normalized(0.3, vec![0.1, 0.5, 0.2, 0.8]).unwrap();
        let y = DeSitterPoint::normalized(-0.4, vec![0.6, -0.1, 0.3, 0.5]).unwrap();
        let a = e.kernel_point(&x, &y, 0.3, 20).unwrap().value;
        let b = e.kernel_point(&y, &x, 0.3, 20).unwrap().value;
        assert!((a - b.conj()).norm() < 1e-13 * a.norm());
        assert!(e.kernel_point(&x, &y, 0.0, 20).is_err());
    }

    #[test]
    fn green_identity_single_pair() {
        let e = engine4(2);
        let pole = unit_vector(4, 3, 1.0);
        let f = make_bump(-0.4, 0.2, 1, &pole, c(1.0, 0.0)).unwrap();
        let h = make_bump(-0.1, 0.5, 1, &unit_vector(4, 2, 1.0), c(0.5, 0.5)).unwrap();
        let h = h.add(&make_bump(-0.1, 0.5, 1, &pole, c(1.0, 0.0)).unwrap()).unwrap();
        let (lhs, rhs) = e.green_identity(&f, &h).unwrap();
        assert!((lhs.value - rhs.value).norm() < 1e-8 * rhs.value.norm(), "{:?} {:?}", lhs, rhs);
    }

    #[test]
    fn retarded_advanced_transpose() {
        let e = engine4(2);
        let f = make_bump(-0.4, 0.2, 2, &unit_vector(4, 3, 1.0), c(1.0, 0.0)).unwrap();
        let h = make_bump(-0.1, 0.5, 2, &unit_vector(4, 1, 1.0), c(0.3, -0.2)).unwrap();
        let gr = e.full_fns(KernelKind::Gret, &f, &h).unwrap();
        let ga = e.full_fns(KernelKind::Gadv, &h, &f).unwrap();
        assert!((gr.value - ga.value).norm() <= gr.error + ga.error, "{gr:?} {ga:?}");
    }
}
