//! L^n integrability of the half-smeared two-point kernel, boundary decay
//! exponents and the dimension/order threshold table.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cos_tau, sphere_area, DeSitterPoint};
use crate::kernels::KernelEngine;
use crate::modes::compute_mu;
use crate::quadrature::{composite_gl, gauss_gegenbauer, gauss_legendre, pairwise_sum};
use crate::testfn::{zonal, Term, TestFunction};
use crate::wightman::{FieldSlot, NPointEngine};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdVerdict {
    pub d: usize,
    pub n: usize,
    /// (dn - 2n - 2d)/2, which is also the cos-power n(d-2)/2 - d of the
    /// integrand envelope near the boundary.
    pub exponent: f64,
    pub passes: bool,
}

impl ThresholdVerdict {
    pub fn boundary_power(&self) -> f64 {
        self.exponent
    }
}

pub fn threshold(d: usize, n: usize) -> Result<ThresholdVerdict> {
    if d < 3 || n < 3 {
        return Err(Error::Precondition(format!("threshold needs d >= 3 and n >= 3, got d = {d}, n = {n}")));
    }
    let exponent = (d as f64 * n as f64 - 2.0 * n as f64 - 2.0 * d as f64) / 2.0;
    Ok(ThresholdVerdict { d, n, exponent, passes: exponent > -1.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanVerdict {
    Converges,
    DivergesLog,
    DivergesPower,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanRow {
    pub epsilon: f64,
    pub value: f64,
    pub increment: f64,
    /// Residual of the a + b ln(1/eps) fit at this point.
    pub fit_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceScan {
    pub d: usize,
    pub n: usize,
    pub rows: Vec<ScanRow>,
    pub verdict: ScanVerdict,
    pub last_relative_increment: f64,
    /// Mean ratio of successive increments over the last half of the scan.
    pub increment_ratio: f64,
    pub log_fit_slope: f64,
    pub log_fit_r2: f64,
    /// Relative error of the sphere factor (0 for s = 0).
    pub sphere_error: f64,
}

impl ConvergenceScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,I_value,increment,fit_residual\n");
        for r in &self.rows {
            out.push_str(&format!("{:e},{:e},{:e},{:e}\n", r.epsilon, r.value, r.increment, r.fit_residual));
        }
        out
    }
}

/// Decades 1e-1 .. 1e-10.
pub fn default_eps_sequence() -> Vec<f64> {
    (1..=10).map(|k| 10f64.powi(-k)).collect()
}

fn single_term(f: &TestFunction) -> Result<&Term> {
    if !f.is_single_harmonic() || f.terms.len() != 1 {
        return Err(Error::Precondition("test function must be a single harmonic".into()));
    }
    Ok(&f.terms[0])
}

/// int_{S^{d-1}} |Z_s|^n, exact for s = 0; otherwise Gauss-Gegenbauer in
/// t = cos(theta) with the difference of two orders as error.
fn sphere_power(d: usize, s: usize, n: usize) -> (f64, f64) {
    let pole = {
        let mut v = vec![0.0; d];
        v[0] = 1.0;
        v
    };
    let z = |t: f64| {
        let mut a = vec![0.0; d];
        a[0] = t;
        a[1] = (1.0 - t * t).max(0.0).sqrt();
        zonal(s, d, &pole, &a).abs().powi(n as i32)
    };
    if s == 0 {
        return (sphere_area(d) * z(1.0), 0.0);
    }
    let lam = (d as f64 - 2.0) / 2.0;
    let rule = |m: usize| {
        let (x, w) = gauss_gegenbauer(m, lam);
        sphere_area(d - 1) * pairwise_sum(&x.iter().zip(&w).map(|(&t, &w)| w * z(t)).collect::<Vec<_>>())
    };
    let (a, b) = (rule(200), rule(100));
    (a, (a - b).abs() / a.abs().max(f64::MIN_POSITIVE))
}

/// int over pi/2 - |tau| in [x_lo, x_hi] on both sides of g(tau), by GL
/// panels of unit width in ln x.
fn boundary_strips(x_lo: f64, x_hi: f64, g: &(dyn Fn(f64) -> f64 + Sync)) -> f64 {
    let (u0, u1) = (x_lo.ln(), x_hi.ln());
    let panels = ((u1 - u0).ceil() as usize).max(1);
    let (nodes, weights) = gauss_legendre(20);
    let h = (u1 - u0) / panels as f64;
    let vals: Vec<f64> = (0..panels)
        .flat_map(|k| {
            let a = u0 + k as f64 * h;
            nodes.iter().zip(&weights).map(move |(&t, &w)| (a + 0.5 * h * (t + 1.0), 0.5 * h * w)).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(u, w)| {
            let x = u.exp();
            w * x * (g(FRAC_PI_2 - x) + g(-FRAC_PI_2 + x))
        })
        .collect();
    pairwise_sum(&vals)
}

/// I(eps) = int_{|tau| < pi/2 - eps} int_S |D+(f, x)|^n dV along a strictly
/// decreasing eps sequence.
pub fn scan_in(f: &TestFunction, n: usize, engine: &KernelEngine, eps_sequence: &[f64]) -> Result<ConvergenceScan> {
    let t = single_term(f)?;
    let params = &engine.params;
    let d = params.d;
    if eps_sequence.is_empty() || eps_sequence.windows(2).any(|w| !(w[1] < w[0])) || eps_sequence.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Precondition("eps sequence must be positive and strictly decreasing".into()));
    }
    if n < 1 {
        return Err(Error::Precondition("n must be positive".into()));
    }
    let last = *eps_sequence.last().unwrap();
    if last < engine.modes.domain_eps {
        return Err(Error::Budget(format!("eps {last:e} below the mode domain cutoff {:e}", engine.modes.domain_eps)));
    }
    let mode = engine.mode(t.s)?;
    let pi = engine.profile_integral(&t.profile, t.s)?;
    let amp = (t.coef * pi.total * params.r * params.r).norm().powi(n as i32);
    let (sph, sphere_error) = sphere_power(d, t.s, n);
    let rd = params.r.powi(d as i32);
    let g = move |tau: f64| -> f64 {
        let tv: Complex64 = mode.t_plus(tau).unwrap_or_default();
        tv.norm().powi(n as i32) * rd * cos_tau(tau).powi(-(d as i32))
    };
    let e0 = eps_sequence[0];
    let central: Vec<f64> = composite_gl(-FRAC_PI_2 + e0, FRAC_PI_2 - e0, 64, 16).par_iter().map(|&(x, w)| w * g(x)).collect();
    let mut acc = pairwise_sum(&central);
    let mut values = vec![acc];
    for w in eps_sequence.windows(2) {
        acc += boundary_strips(w[1], w[0], &g);
        values.push(acc);
    }
    let scale = amp * sph;
    let values: Vec<f64> = values.into_iter().map(|v| v * scale).collect();
    Ok(classify(d, n, eps_sequence, &values, sphere_error))
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, icpt, r2)
}

fn classify(d: usize, n: usize, eps: &[f64], values: &[f64], sphere_error: f64) -> ConvergenceScan {
    let incs: Vec<f64> = std::iter::once(0.0).chain(values.windows(2).map(|w| w[1] - w[0])).collect();
    let x: Vec<f64> = eps.iter().map(|e| (1.0 / e).ln()).collect();
    let (slope, icpt, r2) = if values.len() >= 2 { linear_fit(&x, values) } else { (0.0, values[0], 0.0) };
    let rows = eps
        .iter()
        .zip(values)
        .zip(&incs)
        .zip(&x)
        .map(|(((&e, &v), &i), &lx)| ScanRow { epsilon: e, value: v, increment: i, fit_residual: v - (icpt + slope * lx) })
        .collect();
    let last_rel = if values.len() >= 2 { incs[incs.len() - 1] / values[values.len() - 1] } else { f64::INFINITY };
    let tail: Vec<f64> = incs[1..].to_vec();
    let half = &tail[tail.len() / 2..];
    let ratios: Vec<f64> = half.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
    let ratio = if ratios.is_empty() { f64::NAN } else { ratios.iter().sum::<f64>() / ratios.len() as f64 };
    let verdict = if last_rel < 1e-3 {
        ScanVerdict::Converges
    } else if r2 > 0.99 && (0.8..=1.25).contains(&ratio) {
        ScanVerdict::DivergesLog
    } else if ratio > 1.25 {
        ScanVerdict::DivergesPower
    } else {
        ScanVerdict::Inconclusive
    };
    ConvergenceScan {
        d,
        n,
        rows,
        verdict,
        last_relative_increment: last_rel,
        increment_ratio: ratio,
        log_fit_slope: slope,
        log_fit_r2: r2,
        sphere_error,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// (d-2)/2
    pub envelope_exponent: f64,
    /// (d-2)/2 + Re mu
    pub indicial_exponent: f64,
    /// (ln cos tau, ln sup |D+|) samples on both sides.
    pub samples: Vec<(f64, f64)>,
}

/// Least-squares slope of ln sup_alpha |D+(f, (tau, alpha))| against
/// ln cos tau over cos tau in [cos_lo, cos_hi] on both sides.
pub fn envelope_fit(f: &TestFunction, engine: &KernelEngine, cos_lo: f64, cos_hi: f64, points: usize) -> Result<EnvelopeFit> {
    let t = single_term(f)?;
    let d = engine.params.d;
    if !(cos_lo > 0.0 && cos_lo < cos_hi && cos_hi < 1.0) || points < 3 {
        return Err(Error::InsufficientWindow(format!("window [{cos_lo:e}, {cos_hi:e}] with {points} points")));
    }
    let (mlo, mhi) = engine.mode(t.s)?.tau_range();
    if FRAC_PI_2 - cos_lo.asin() > mhi || -FRAC_PI_2 + cos_lo.asin() < mlo {
        return Err(Error::InsufficientWindow(format!("mode domain ends before cos tau = {cos_lo:e}")));
    }
    let (flo, fhi) = t.profile.support();
    let pole = t.pole.clone();
    let mut samples = Vec::new();
    for k in 0..points {
        let lc = cos_lo.ln() + (cos_hi.ln() - cos_lo.ln()) * k as f64 / (points - 1) as f64;
        for sign in [1.0, -1.0] {
            let tau = sign * (FRAC_PI_2 - lc.exp().asin());
            if tau >= flo && tau <= fhi {
                return Err(Error::InsufficientWindow("window overlaps the support of f".into()));
            }
            let y = DeSitterPoint::new(tau, pole.clone())?;
            let v = engine.smear_plus(f, &y)?.value.norm();
            samples.push((cos_tau(tau).ln(), v.ln()));
        }
    }
    let (x, y): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    let (slope, intercept, r2) = linear_fit(&x, &y);
    let base = (d as f64 - 2.0) / 2.0;
    Ok(EnvelopeFit {
        slope,
        intercept,
        r2,
        envelope_exponent: base,
        indicial_exponent: base + compute_mu(&engine.params).mu.re,
        samples,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominatedProbe {
    pub coefficients: Vec<f64>,
    pub values: Vec<Complex64>,
    pub errors: Vec<f64>,
    /// max over l and nodes of |D+(c_l f, x)| - F(x), F = sup_l |c_l| |D+(f, x)|.
    pub max_bound_violation: f64,
    pub bound_holds: bool,
    /// |value_l / c_l - value_0 / c_0| relative, max over l.
    pub linearity_defect: f64,
    pub converges_to_zero: bool,
}

/// Scales slot `slot` by each coefficient and evaluates the truncated
/// n-point function along the sequence.
pub fn dominated_convergence_probe(engine: &NPointEngine, slots: &[FieldSlot], slot: usize, coefficients: &[f64]) -> Result<DominatedProbe> {
    if slot >= slots.len() || coefficients.is_empty() {
        return Err(Error::Precondition("slot out of range or empty sequence".into()));
    }
    let f = &slots[slot].f;
    let sup = coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let k = engine.kernels;
    let pts: Vec<DeSitterPoint> = engine
        .grid
        .tau_nodes
        .iter()
        .step_by(7)
        .flat_map(|t| engine.grid.sphere_nodes.iter().step_by(97).map(move |s| DeSitterPoint { tau: t.tau, alpha: s.alpha.clone() }))
        .collect();
    let base: Vec<f64> = pts.par_iter().map(|y| k.smear_plus(f, y).map(|v| v.value.norm())).collect::<Result<_>>()?;
    let mut viol = f64::NEG_INFINITY;
    let mut values = Vec::new();
    let mut errors = Vec::new();
    for &c in coefficients {
        let fc = f.scale(Complex64::new(c, 0.0));
        for (y, b) in pts.iter().zip(&base) {
            let v = k.smear_plus(&fc, y)?.value.norm();
            viol = viol.max(v - sup * b * (1.0 + 1e-12));
        }
        let mut s = slots.to_vec();
        s[slot].f = fc;
        let r = engine.truncated_npoint(&s)?;
        values.push(r.value);
        errors.push(r.error);
    }
    let v0 = values[0] / coefficients[0];
    let lin = values
        .iter()
        .zip(coefficients)
        .map(|(v, c)| (v / *c - v0).norm() / v0.norm().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let converges = values.last().unwrap().norm() <= 1e-3 * peak && coefficients.last().unwrap().abs() < sup;
    Ok(DominatedProbe {
        coefficients: coefficients.to_vec(),
        values,
        errors,
        max_bound_violation: viol,
        bound_holds: viol <= 0.0,
        linearity_defect: lin,
        converges_to_zero: converges,
    })
}
