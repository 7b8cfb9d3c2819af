//! Mode functions T^±_p = cos^{(d-2)/2} u^±_p of the separated time equation.
//!
//! u solves u'' + [p^2 + mu(1-mu)/cos^2] u = 0. Initial data at tau = 0 come
//! from the hypergeometric expression, the rest from a 4-stage Gauss
//! collocation integrator applied to the real transfer matrix.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cos_tau, ModelParams};
use crate::quadrature::gauss_legendre;
use crate::specfun::{hyp2f1, ln_gamma_complex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesType {
    Complementary,
    Principal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuParameter {
    pub mu: Complex64,
    pub series_type: SeriesType,
}

impl MuParameter {
    /// mu (1 - mu), real for both series.
    pub fn indicial(&self) -> f64 {
        (self.mu * (1.0 - self.mu)).re
    }
}

pub fn compute_mu(params: &ModelParams) -> MuParameter {
    let dm1 = params.d as f64 - 1.0;
    let disc = dm1 * dm1 - 4.0 * params.frak_m2();
    if disc >= 0.0 {
        MuParameter { mu: Complex64::new((1.0 - disc.sqrt()) / 2.0, 0.0), series_type: SeriesType::Complementary }
    } else {
        MuParameter { mu: Complex64::new(0.5, -(-disc).sqrt() / 2.0), series_type: SeriesType::Principal }
    }
}

/// Which argument the hypergeometric factor is evaluated at:
/// `Literal` uses e^{±ip tau}/(2 cos tau), `Unit` uses e^{±i tau}/(2 cos tau).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HypReading {
    Literal,
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeOptions {
    /// Step bound relative to the local wavelength, h <= step_factor / p_eff.
    pub step_factor: f64,
    /// Step bound relative to the distance to the boundary, h <= factor * cos tau.
    pub boundary_step_factor: f64,
    pub residual_tol: f64,
    pub wronskian_tol: f64,
}

impl Default for ModeOptions {
    fn default() -> Self {
        ModeOptions { step_factor: 0.1, boundary_step_factor: 0.03, residual_tol: 1e-8, wronskian_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReadingReport {
    pub accepted: HypReading,
    pub literal_residual: f64,
    pub unit_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeFunction {
    pub d: usize,
    pub s: usize,
    pub p: f64,
    pub mu: MuParameter,
    pub frak_m2: f64,
    pub domain_eps: f64,
    pub reading: ReadingReport,
    pub nodes: Vec<f64>,
    /// (u, u') for the + and - solutions at each node.
    pub uplus: Vec<[Complex64; 2]>,
    pub uminus: Vec<[Complex64; 2]>,
    /// cos^{2-d}(T+ T-' - T- T+') at tau = 0.
    pub wronskian: Complex64,
    /// max |W(tau) - W(0)| / |W(0)| over the nodes.
    pub wronskian_drift: f64,
    /// Same, relative to |u+ u-'| + |u- u+'| where the solutions grow.
    pub wronskian_drift_scaled: f64,
    pub max_residual: f64,
    pub conjugacy_defect: f64,
}

struct Tableau {
    c: [f64; 4],
    a: [[f64; 4]; 4],
    b: [f64; 4],
}

fn tableau() -> &'static Tableau {
    static T: OnceLock<Tableau> = OnceLock::new();
    T.get_or_init(|| {
        let (x, w) = gauss_legendre(4);
        let c: [f64; 4] = std::array::from_fn(|i| 0.5 * (x[i] + 1.0));
        let b: [f64; 4] = std::array::from_fn(|i| 0.5 * w[i]);
        let lag = |j: usize, t: f64| -> f64 {
            (0..4).filter(|&k| k != j).map(|k| (t - c[k]) / (c[j] - c[k])).product()
        };
        let mut a = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                a[i][j] = (0..4).map(|k| 0.5 * c[i] * w[k] * lag(j, 0.5 * c[i] * (x[k] + 1.0))).sum();
            }
        }
        Tableau { c, a, b }
    })
}

#[derive(Clone, Copy)]
struct Coeffs {
    p2: f64,
    ind: f64,
}

impl Coeffs {
    fn q(&self, tau: f64) -> f64 {
        let c = cos_tau(tau);
        self.p2 + self.ind / (c * c)
    }

    fn p_eff(&self, tau: f64) -> f64 {
        let c = cos_tau(tau);
        (self.p2 + self.ind.abs() / (c * c)).sqrt()
    }
}

/// Transfer matrix of (u, u') over [t, t + h].
fn gauss_step(co: Coeffs, t: f64, h: f64) -> [[f64; 2]; 2] {
    let tab = tableau();
    let q: [f64; 4] = std::array::from_fn(|i| co.q(t + tab.c[i] * h));
    // Stage equations: Y_i = y + h sum_j a_ij A_j Y_j, A_j = [[0,1],[-q_j,0]].
    let mut m = SMatrix::<f64, 8, 8>::identity();
    for i in 0..4 {
        for j in 0..4 {
            let ha = h * tab.a[i][j];
            m[(2 * i, 2 * j + 1)] -= ha;
            m[(2 * i + 1, 2 * j)] += ha * q[j];
        }
    }
    let lu = m.lu();
    let mut phi = [[0.0; 2]; 2];
    for col in 0..2 {
        let mut rhs = SVector::<f64, 8>::zeros();
        for i in 0..4 {
            rhs[2 * i + col] = 1.0;
        }
        let y = lu.solve(&rhs).expect("collocation system is regular for small steps");
        let mut out = [if col == 0 { 1.0 } else { 0.0 }, if col == 1 { 1.0 } else { 0.0 }];
        for j in 0..4 {
            out[0] += h * tab.b[j] * y[2 * j + 1];
            out[1] -= h * tab.b[j] * q[j] * y[2 * j];
        }
        phi[0][col] = out[0];
        phi[1][col] = out[1];
    }
    phi
}

fn apply(phi: &[[f64; 2]; 2], v: [Complex64; 2]) -> [Complex64; 2] {
    [phi[0][0] * v[0] + phi[0][1] * v[1], phi[1][0] * v[0] + phi[1][1] * v[1]]
}

/// u^±, u^±' and u^±'' from the hypergeometric formula, |tau| < pi/3.
fn hyp_solution(p: f64, mu: Complex64, sign: f64, reading: HypReading, tau: f64) -> Result<[Complex64; 3]> {
    let i = Complex64::i();
    let a = mu;
    let b = 1.0 - mu;
    let c = Complex64::new(p + 1.0, 0.0);
    let omega = match reading {
        HypReading::Literal => p,
        HypReading::Unit => 1.0,
    };
    let ct = tau.cos();
    let tn = tau.tan();
    let z = (sign * i * omega * tau).exp() / (2.0 * ct);
    let dz = z * (sign * i * omega + tn);
    let ddz = dz * (sign * i * omega + tn) + z / (ct * ct);
    let f0 = hyp2f1(a, b, c, z)?;
    let f1 = a * b / c * hyp2f1(a + 1.0, b + 1.0, c + 1.0, z)?;
    let f2 = a * (a + 1.0) * b * (b + 1.0) / (c * (c + 1.0)) * hyp2f1(a + 2.0, b + 2.0, c + 2.0, z)?;
    let norm = (0.5 * (ln_gamma_complex(p + mu)? + ln_gamma_complex(p - mu + 1.0)?)
        - ln_gamma_complex(Complex64::new(p + 1.0, 0.0))?)
    .exp();
    let g = (sign * i * p * tau).exp();
    let dg = sign * i * p * g;
    let ddg = -p * p * g;
    let u = norm * g * f0;
    let du = norm * (dg * f0 + g * f1 * dz);
    let ddu = norm * (ddg * f0 + 2.0 * dg * f1 * dz + g * f2 * dz * dz + g * f1 * ddz);
    Ok([u, du, ddu])
}

fn analytic_residual(p: f64, mu: MuParameter, reading: HypReading) -> Result<f64> {
    let co = Coeffs { p2: p * p, ind: mu.indicial() };
    let mut worst: f64 = 0.0;
    for &tau in &[0.05, 0.1, 0.2, -0.15] {
        for &sign in &[1.0, -1.0] {
            let [u, _, ddu] = hyp_solution(p, mu.mu, sign, reading, tau)?;
            let qu = co.q(tau) * u;
            let r = (ddu + qu).norm() / (ddu.norm() + qu.norm());
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

impl ModeFunction {
    pub fn coeffs(&self) -> (f64, f64) {
        (self.p * self.p, self.mu.indicial())
    }

    fn q(&self, tau: f64) -> f64 {
        let c = cos_tau(tau);
        self.p * self.p + self.mu.indicial() / (c * c)
    }

    pub fn tau_range(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }

    fn locate(&self, tau: f64) -> Option<usize> {
        let n = self.nodes.len();
        if tau < self.nodes[0] || tau > self.nodes[n - 1] {
            return None;
        }
        let k = self.nodes.partition_point(|&t| t <= tau);
        Some(k.clamp(1, n - 1) - 1)
    }

    /// (u, u') of the ± solution by quintic Hermite interpolation.
    pub fn eval_u(&self, tau: f64, plus: bool) -> Result<[Complex64; 2]> {
        let k = self
            .locate(tau)
            .ok_or_else(|| Error::Domain(format!("tau = {tau} outside the mode domain")))?;
        let data = if plus { &self.uplus } else { &self.uminus };
        let (t0, t1) = (self.nodes[k], self.nodes[k + 1]);
        let h = t1 - t0;
        let t = (tau - t0) / h;
        let [y0, d0] = data[k];
        let [y1, d1] = data[k + 1];
        let s0 = -self.q(t0) * y0;
        let s1 = -self.q(t1) * y1;
        let (t2, t3, t4, t5) = (t * t, t * t * t, t * t * t * t, t * t * t * t * t);
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h3 = 0.5 * t3 - t4 + 0.5 * t5;
        let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let dh0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
        let dh1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let dh2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
        let dh3 = 1.5 * t2 - 4.0 * t3 + 2.5 * t4;
        let dh4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
        let dh5 = -dh0;
        let u = y0 * h0 + d0 * (h * h1) + s0 * (h * h * h2) + y1 * h5 + d1 * (h * h4) + s1 * (h * h * h3);
        let du = (y0 * dh0 + y1 * dh5) / h + d0 * dh1 + d1 * dh4 + (s0 * dh2 + s1 * dh3) * h;
        Ok([u, du])
    }

    /// (T, T') of the ± solution.
    pub fn eval_t(&self, tau: f64, plus: bool) -> Result<[Complex64; 2]> {
        let [u, du] = self.eval_u(tau, plus)?;
        let a = (self.d as f64 - 2.0) / 2.0;
        let ca = cos_tau(tau).powf(a);
        Ok([ca * u, ca * (du - a * tau.tan() * u)])
    }

    pub fn t_plus(&self, tau: f64) -> Result<Complex64> {
        self.eval_t(tau, true).map(|v| v[0])
    }

    pub fn t_minus(&self, tau: f64) -> Result<Complex64> {
        self.eval_t(tau, false).map(|v| v[0])
    }

    /// Relative residual of the tau equation at every node whose finite
    /// difference stencil stays inside the domain and is resolvable in
    /// double precision (cos tau >~ 5e-4). Returns (tau, residual).
    pub fn residual_table(&self) -> Vec<(f64, f64)> {
        let (lo, hi) = self.tau_range();
        let a = (self.d as f64 - 2.0) / 2.0;
        let kappa2 = (self.s * (self.s + self.d - 2)) as f64;
        const W: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
        let co = Coeffs { p2: self.p * self.p, ind: self.mu.indicial() };
        self.nodes
            .par_iter()
            .enumerate()
            .filter_map(|(k, &tau)| {
                let delta = (0.2 / co.p_eff(tau)).min(0.04 * cos_tau(tau));
                if tau - 4.0 * delta < lo || tau + 4.0 * delta > hi {
                    return None;
                }
                // Stencil offsets below ~1e-11 relative resolution of tau are meaningless.
                if delta < 1e11 * f64::EPSILON * tau.abs().max(1.0) {
                    return None;
                }
                let mut worst: f64 = 0.0;
                for plus in [true, false] {
                    let data = if plus { &self.uplus } else { &self.uminus };
                    let [u, du] = data[k];
                    let mut ddu = W[0] * u;
                    for j in 1..5 {
                        let up = self.eval_u(tau + j as f64 * delta, plus).ok()?[0];
                        let um = self.eval_u(tau - j as f64 * delta, plus).ok()?[0];
                        ddu += W[j] * (up + um);
                    }
                    ddu /= delta * delta;
                    let c = cos_tau(tau);
                    let tn = tau.tan();
                    let ca = c.powf(a);
                    let t0 = ca * u;
                    let t1 = ca * (du - a * tn * u);
                    let t2 = ca * (ddu - 2.0 * a * tn * du + (a * a * tn * tn - a / (c * c)) * u);
                    let terms = [
                        c * c * t2,
                        (self.d as f64 - 2.0) * tau.sin() * c * t1,
                        kappa2 * c * c * t0,
                        self.frak_m2 * t0,
                    ];
                    let sum: Complex64 = terms.iter().sum();
                    let scale: f64 = terms.iter().map(|t| t.norm()).sum();
                    worst = worst.max(sum.norm() / scale);
                }
                Some((tau, worst))
            })
            .collect()
    }
}

/// Integrate the ± solutions from tau = 0 to ±(pi/2 - domain_eps).
pub fn build_mode_with(params: &ModelParams, s: usize, domain_eps: f64, opts: &ModeOptions) -> Result<ModeFunction> {
    params.validate()?;
    if !(domain_eps > 0.0 && domain_eps < 0.5) {
        return Err(Error::InvalidSpec(format!("domain_eps = {domain_eps} must lie in (0, 0.5)")));
    }
    let p = params.p_of(s);
    let mu = compute_mu(params);
    let lit = analytic_residual(p, mu, HypReading::Literal)?;
    let unit = analytic_residual(p, mu, HypReading::Unit)?;
    let accepted = if lit < unit { HypReading::Literal } else { HypReading::Unit };
    let best = lit.min(unit);
    if best > 1e-10 {
        return Err(Error::ResidualExceeded { s, residual: best, tolerance: 1e-10 });
    }
    let reading = ReadingReport { accepted, literal_residual: lit, unit_residual: unit };

    let init = |sign: f64| -> Result<[Complex64; 2]> {
        let [u, du, _] = hyp_solution(p, mu.mu, sign, accepted, 0.0)?;
        Ok([u, du])
    };
    let up0 = init(1.0)?;
    let um0 = init(-1.0)?;

    let co = Coeffs { p2: p * p, ind: mu.indicial() };
    let end = FRAC_PI_2 - domain_eps;
    let integrate = |dir: f64| -> (Vec<f64>, Vec<[Complex64; 2]>, Vec<[Complex64; 2]>) {
        let mut taus = vec![0.0];
        let mut vp = vec![up0];
        let mut vm = vec![um0];
        let mut t: f64 = 0.0;
        while t.abs() < end {
            let mut h = (opts.step_factor / co.p_eff(t)).min(opts.boundary_step_factor * cos_tau(t)).min(0.02);
            let remaining = end - t.abs();
            if h >= remaining || remaining - h < 1e-3 * h {
                h = remaining;
            }
            let phi = gauss_step(co, t, dir * h);
            let np = apply(&phi, *vp.last().unwrap());
            let nm = apply(&phi, *vm.last().unwrap());
            t = if h == remaining { dir * end } else { t + dir * h };
            taus.push(t);
            vp.push(np);
            vm.push(nm);
        }
        (taus, vp, vm)
    };
    let ((tn, pn, mn), (tp, pp, mp)) = rayon::join(|| integrate(-1.0), || integrate(1.0));
    let mut nodes: Vec<f64> = tn.iter().rev().copied().collect();
    let mut uplus: Vec<[Complex64; 2]> = pn.iter().rev().copied().collect();
    let mut uminus: Vec<[Complex64; 2]> = mn.iter().rev().copied().collect();
    nodes.extend_from_slice(&tp[1..]);
    uplus.extend_from_slice(&pp[1..]);
    uminus.extend_from_slice(&mp[1..]);

    let w = |a: [Complex64; 2], b: [Complex64; 2]| a[0] * b[1] - b[0] * a[1];
    let w0 = w(up0, um0);
    let wronskian_drift = uplus
        .iter()
        .zip(&uminus)
        .map(|(a, b)| (w(*a, *b) - w0).norm() / w0.norm())
        .fold(0.0, f64::max);
    let wronskian_drift_scaled = uplus
        .iter()
        .zip(&uminus)
        .map(|(a, b)| {
            let scale = (a[0] * b[1]).norm() + (b[0] * a[1]).norm();
            (w(*a, *b) - w0).norm() / scale.max(w0.norm())
        })
        .fold(0.0, f64::max);
    let conjugacy_defect = uplus
        .iter()
        .zip(&uminus)
        .map(|(a, b)| (a[0] - b[0].conj()).norm().max((a[1] - b[1].conj()).norm()))
        .fold(0.0, f64::max);

    let mut mode = ModeFunction {
        d: params.d,
        s,
        p,
        mu,
        frak_m2: params.frak_m2(),
        domain_eps,
        reading,
        nodes,
        uplus,
        uminus,
        wronskian: w0,
        wronskian_drift,
        wronskian_drift_scaled,
        max_residual: 0.0,
        conjugacy_defect,
    };
    mode.max_residual = mode.residual_table().iter().map(|r| r.1).fold(0.0, f64::max);
    if mode.max_residual > opts.residual_tol {
        return Err(Error::ResidualExceeded { s, residual: mode.max_residual, tolerance: opts.residual_tol });
    }
    if mode.wronskian_drift_scaled > opts.wronskian_tol {
        return Err(Error::ResidualExceeded { s, residual: mode.wronskian_drift_scaled, tolerance: opts.wronskian_tol });
    }
    Ok(mode)
}

pub fn build_mode(params: &ModelParams, s: usize, domain_eps: f64) -> Result<ModeFunction> {
    build_mode_with(params, s, domain_eps, &ModeOptions::default())
}

/// Modes for all degrees 0..=s_max.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeSet {
    pub params: ModelParams,
    pub domain_eps: f64,
    pub modes: Vec<ModeFunction>,
}

impl ModeSet {
    pub fn build(params: &ModelParams, s_max: usize, domain_eps: f64) -> Result<Self> {
        let modes: Result<Vec<ModeFunction>> =
            (0..=s_max).into_par_iter().map(|s| build_mode(params, s, domain_eps)).collect();
        Ok(ModeSet { params: params.clone(), domain_eps, modes: modes? })
    }

    pub fn s_max(&self) -> usize {
        self.modes.len() - 1
    }

    pub fn mode(&self, s: usize) -> Result<&ModeFunction> {
        self.modes.get(s).ok_or(Error::Truncation { needed: s, available: self.s_max() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p4() -> ModelParams {
        ModelParams::with_frak_m(4, 2f64.sqrt()).unwrap()
    }

    #[test]
    fn mu_examples() {
        let mu = compute_mu(&p4());
        assert!(mu.mu.norm() < 1e-7);
        assert_eq!(mu.series_type, SeriesType::Complementary);
        let mu6 = compute_mu(&ModelParams::with_frak_m(6, 3.0).unwrap());
        assert_eq!(mu6.series_type, SeriesType::Principal);
        assert_eq!(mu6.mu.re, 0.5);
        assert!((mu6.mu.im + 11f64.sqrt() / 2.0).abs() < 1e-15);
        let mu_c = compute_mu(&ModelParams::with_frak_m(4, (9.0f64 / 8.0).sqrt()).unwrap());
        assert_eq!(mu_c.series_type, SeriesType::Complementary);
        assert!((mu_c.mu.re - (1.0 - 4.5f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn tableau_is_gauss() {
        let t = tableau();
        let bsum: f64 = t.b.iter().sum();
        assert!((bsum - 1.0).abs() < 1e-15);
        for i in 0..4 {
            let row: f64 = t.a[i].iter().sum();
            assert!((row - t.c[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn harmonic_oscillator_step() {
        // ind = 0: u'' + p^2 u = 0, transfer matrix is a rotation.
        let co = Coeffs { p2: 4.0, ind: 0.0 };
        let h = 0.05;
        let phi = gauss_step(co, 0.0, h);
        assert!((phi[0][0] - (2.0 * h).cos()).abs() < 1e-15);
        assert!((phi[0][1] - (2.0 * h).sin() / 2.0).abs() < 1e-15);
        assert!((phi[1][0] + 2.0 * (2.0 * h).sin()).abs() < 1e-14);
    }

    #[test]
    fn closed_form_at_mu_zero() {
        let m = build_mode(&p4(), 1, 1e-6).unwrap();
        let p = m.p;
        assert_eq!(p, 2.0);
        for &tau in &[-1.4, -0.3, 0.0, 0.9, 1.5] {
            let t = m.t_plus(tau).unwrap();
            let exact = cos_tau(tau) * Complex64::new(0.0, p * tau).exp() / p.sqrt();
            assert!((t - exact).norm() < 1e-9, "tau={tau}: {t} vs {exact}");
        }
        let m3 = build_mode(&p4(), 2, 1e-6).unwrap();
        assert!((m3.t_plus(0.0).unwrap() - Complex64::new(1.0 / 3f64.sqrt(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn wronskian_is_minus_two_i() {
        let params = ModelParams::with_frak_m(6, 3.0).unwrap();
        for s in [0, 3, 10] {
            let m = build_mode(&params, s, 1e-6).unwrap();
            assert!((m.wronskian - Complex64::new(0.0, -2.0)).norm() < 1e-12, "s={s} W={}", m.wronskian);
            assert!(m.wronskian_drift < 1e-8);
            assert!(m.max_residual < 1e-8);
            assert_eq!(m.reading.accepted, HypReading::Unit);
        }
    }

    #[test]
    fn literal_reading_fails_residual() {
        let params = ModelParams::with_frak_m(6, 3.0).unwrap();
        let mu = compute_mu(&params);
        let lit = analytic_residual(2.0, mu, HypReading::Literal).unwrap();
        let unit = analytic_residual(2.0, mu, HypReading::Unit).unwrap();
        assert!(lit > 1e-3, "{lit}");
        assert!(unit < 1e-12, "{unit}");
    }

    #[test]
    fn minus_is_conjugate_of_plus() {
        let params = ModelParams::with_frak_m(4, (9.0f64 / 8.0).sqrt()).unwrap();
        let m = build_mode(&params, 4, 1e-6).unwrap();
        assert!(m.conjugacy_defect < 1e-13);
        let a = m.t_plus(0.77).unwrap();
        let b = m.t_minus(0.77).unwrap();
        assert!((a - b.conj()).norm() < 1e-13);
    }

    #[test]
    fn out_of_domain_is_error() {
        let m = build_mode(&p4(), 0, 1e-3).unwrap();
        assert!(m.t_plus(FRAC_PI_2 - 1e-4).is_err());
    }
}
