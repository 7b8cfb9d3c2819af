//! Test functions: finite sums of c * a(tau) * Z_{s,beta}(alpha) with smooth
//! compactly supported profiles and zonal sphere factors.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle, dot, sphere_area, DeSitterPoint, ModelParams};
use crate::jet::Jet;
use crate::quadrature::{composite_gl, mat_vec};
use crate::specfun::{addition_coefficient, gegenbauer_all};

/// Time profile a(tau).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// exp(-1/(1-u^2)) with u mapping [lo, hi] onto [-1, 1].
    Bump { lo: f64, hi: f64 },
    /// r^-2 [cos^2 a'' + (d-2) sin cos a' + (kappa^2 cos^2 + m^2) a] of the inner profile.
    KleinGordon { inner: Box<Profile>, s: usize, d: usize, r: f64, frak_m2: f64 },
}

impl Profile {
    pub fn support(&self) -> (f64, f64) {
        match self {
            Profile::Bump { lo, hi } => (*lo, *hi),
            Profile::KleinGordon { inner, .. } => inner.support(),
        }
    }

    /// Taylor jet of order `order` at tau.
    pub fn jet(&self, tau: f64, order: usize) -> Jet {
        match self {
            Profile::Bump { lo, hi } => {
                if tau <= *lo || tau >= *hi {
                    return Jet::zero(order);
                }
                let slope = 2.0 / (hi - lo);
                let u = Jet::variable((2.0 * tau - lo - hi) / (hi - lo), slope, order);
                let g = &Jet::constant(1.0, order) - &(&u * &u);
                if 1.0 / g.value() > 700.0 {
                    return Jet::zero(order);
                }
                (-&g.recip()).exp()
            }
            Profile::KleinGordon { inner, s, d, r, frak_m2 } => {
                let a = inner.jet(tau, order + 2);
                let a1 = a.differentiate();
                let a2 = a1.differentiate();
                let (sn, cs) = Jet::variable(tau, 1.0, order).sin_cos();
                let kappa2 = (s * (s + d - 2)) as f64;
                let c2 = &cs * &cs;
                let t1 = &c2 * &a2;
                let t2 = (&(&sn * &cs) * &a1).scale(*d as f64 - 2.0);
                let coef = &c2.scale(kappa2) + &Jet::constant(*frak_m2, order);
                let t3 = &coef * &a.truncate(order);
                (&(&t1 + &t2) + &t3).scale(1.0 / (r * r))
            }
        }
    }

    pub fn value(&self, tau: f64) -> f64 {
        self.jet(tau, 0).value()
    }

    pub fn derivative(&self, tau: f64, k: usize) -> f64 {
        self.jet(tau, k).derivative(k)
    }
}

/// Z_{s,beta}(alpha) = A(s,d) C_s^{(d-2)/2}(alpha . beta).
pub fn zonal(s: usize, d: usize, pole: &[f64], alpha: &[f64]) -> f64 {
    let t = dot(pole, alpha).clamp(-1.0, 1.0);
    addition_coefficient(s, d) * gegenbauer_all(s, (d as f64 - 2.0) / 2.0, t)[s]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: Complex64,
    pub profile: Profile,
    pub s: usize,
    pub pole: Vec<f64>,
}

impl Term {
    pub fn eval(&self, tau: f64, alpha: &[f64]) -> Complex64 {
        let a = self.profile.value(tau);
        if a == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coef * a * zonal(self.s, self.pole.len(), &self.pole, alpha)
    }
}

/// Angular support cap around `pole` of half-opening `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub pole: Vec<f64>,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub d: usize,
    pub terms: Vec<Term>,
    /// Harmonic components beyond the truncation; used only for error bounds.
    #[serde(default)]
    pub tail: Vec<Term>,
    #[serde(default)]
    pub cap: Option<Cap>,
}

/// Causal hull of a support: a tau interval times a cap (or the whole sphere).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportHull {
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub cap: Option<Cap>,
}

impl SupportHull {
    /// Angular distance from alpha to the hull's sphere part.
    pub fn sphere_distance(&self, alpha: &[f64]) -> f64 {
        match &self.cap {
            None => 0.0,
            Some(c) => (angle(&c.pole, alpha) - c.theta).max(0.0),
        }
    }

    /// True if y is outside the closed causal past and future of the hull.
    pub fn is_spacelike_to(&self, y: &DeSitterPoint) -> bool {
        let dist = self.sphere_distance(&y.alpha);
        let dt = if y.tau < self.tau_lo {
            self.tau_lo - y.tau
        } else if y.tau > self.tau_hi {
            y.tau - self.tau_hi
        } else {
            0.0
        };
        dist > dt
    }

    /// True if y can be reached from the hull by future-directed causal curves.
    pub fn in_causal_future(&self, y: &DeSitterPoint) -> bool {
        y.tau >= self.tau_lo && self.sphere_distance(&y.alpha) <= y.tau - self.tau_lo
    }

    pub fn in_causal_past(&self, y: &DeSitterPoint) -> bool {
        y.tau <= self.tau_hi && self.sphere_distance(&y.alpha) <= self.tau_hi - y.tau
    }

    /// Every pair of points of the two hulls is spacelike separated.
    pub fn spacelike_to(&self, other: &SupportHull) -> bool {
        let (Some(a), Some(b)) = (&self.cap, &other.cap) else {
            return false;
        };
        let min_angle = (angle(&a.pole, &b.pole) - a.theta - b.theta).max(0.0);
        let max_dt = (self.tau_hi - other.tau_lo).abs().max((other.tau_hi - self.tau_lo).abs());
        min_angle > max_dt
    }
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !(-FRAC_PI_2 < lo && lo < hi && hi < FRAC_PI_2) {
        return Err(Error::Domain(format!("support [{lo}, {hi}] not inside (-pi/2, pi/2)")));
    }
    Ok(())
}

fn check_pole(pole: &[f64]) -> Result<()> {
    let n = pole.iter().map(|x| x * x).sum::<f64>().sqrt();
    if pole.len() < 3 || (n - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("pole must be a unit vector in R^d, d >= 3".into()));
    }
    Ok(())
}

/// Single-harmonic bump c * a(tau) * Z_{s,pole}(alpha).
pub fn make_bump(tau_minus: f64, tau_plus: f64, s: usize, pole: &[f64], coef: Complex64) -> Result<TestFunction> {
    check_interval(tau_minus, tau_plus)?;
    check_pole(pole)?;
    Ok(TestFunction {
        d: pole.len(),
        terms: vec![Term { coef, profile: Profile::Bump { lo: tau_minus, hi: tau_plus }, s, pole: pole.to_vec() }],
        tail: vec![],
        cap: None,
    })
}

/// Cap profile w(theta) = exp(-1/(1-(theta/theta_c)^2)) on the sphere.
fn cap_profile(theta: f64, theta_c: f64) -> f64 {
    let u = theta / theta_c;
    if u >= 1.0 {
        return 0.0;
    }
    let g = 1.0 - u * u;
    if 1.0 / g > 700.0 {
        0.0
    } else {
        (-1.0 / g).exp()
    }
}

/// Degree-s Funk-Hecke coefficients of the cap profile, s = 0..=s_max.
pub fn cap_coefficients(d: usize, theta_c: f64, s_max: usize) -> Vec<f64> {
    let lambda = (d as f64 - 2.0) / 2.0;
    let area = sphere_area(d - 1);
    let norm = gegenbauer_all(s_max, lambda, 1.0);
    let rule = composite_gl(0.0, theta_c, 64, 16);
    let mut acc = vec![0.0; s_max + 1];
    for (th, w) in rule {
        let wt = w * cap_profile(th, theta_c) * th.sin().powi(d as i32 - 2);
        if wt == 0.0 {
            continue;
        }
        let c = gegenbauer_all(s_max, lambda, th.cos());
        for s in 0..=s_max {
            acc[s] += wt * c[s];
        }
    }
    (0..=s_max).map(|s| area * acc[s] / norm[s]).collect()
}

/// bump(tau) * cap(alpha), expanded in harmonics up to degree `s_trunc`;
/// degrees s_trunc+1..=2 s_trunc are kept as the error tail.
pub fn make_cap(
    tau_minus: f64,
    tau_plus: f64,
    pole: &[f64],
    theta_c: f64,
    s_trunc: usize,
    coef: Complex64,
) -> Result<TestFunction> {
    check_interval(tau_minus, tau_plus)?;
    check_pole(pole)?;
    if !(theta_c > 0.0 && theta_c < std::f64::consts::PI) {
        return Err(Error::Domain(format!("cap angle {theta_c} outside (0, pi)")));
    }
    let d = pole.len();
    let lam = cap_coefficients(d, theta_c, 2 * s_trunc);
    let profile = Profile::Bump { lo: tau_minus, hi: tau_plus };
    let term = |s: usize| Term { coef: coef * lam[s], profile: profile.clone(), s, pole: pole.to_vec() };
    Ok(TestFunction {
        d,
        terms: (0..=s_trunc).map(term).collect(),
        tail: (s_trunc + 1..=2 * s_trunc).map(term).collect(),
        cap: Some(Cap { pole: pole.to_vec(), theta: theta_c }),
    })
}

/// Exact value of the (untruncated) cap function.
pub fn cap_exact(tau_minus: f64, tau_plus: f64, pole: &[f64], theta_c: f64, coef: Complex64, y: &DeSitterPoint) -> Complex64 {
    let a = Profile::Bump { lo: tau_minus, hi: tau_plus }.value(y.tau);
    coef * a * cap_profile(angle(pole, &y.alpha), theta_c)
}

impl TestFunction {
    pub fn evaluate(&self, y: &DeSitterPoint) -> Complex64 {
        self.terms.iter().map(|t| t.eval(y.tau, &y.alpha)).sum()
    }

    /// Sum of |tail term| at y.
    pub fn tail_bound(&self, y: &DeSitterPoint) -> f64 {
        self.tail.iter().map(|t| t.eval(y.tau, &y.alpha).norm()).sum()
    }

    pub fn max_degree(&self) -> usize {
        self.terms.iter().chain(&self.tail).map(|t| t.s).max().unwrap_or(0)
    }

    pub fn is_single_harmonic(&self) -> bool {
        self.terms.len() == 1 && self.tail.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().chain(&self.tail).all(|t| t.coef.im == 0.0)
    }

    pub fn hull(&self) -> SupportHull {
        let (lo, hi) = self
            .terms
            .iter()
            .map(|t| t.profile.support())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (l, h)| (a.min(l), b.max(h)));
        SupportHull { tau_lo: lo, tau_hi: hi, cap: self.cap.clone() }
    }

    fn map_terms<F: Fn(&Term) -> Term>(&self, f: F) -> TestFunction {
        TestFunction {
            d: self.d,
            terms: self.terms.iter().map(&f).collect(),
            tail: self.tail.iter().map(&f).collect(),
            cap: self.cap.clone(),
        }
    }

    pub fn conj(&self) -> TestFunction {
        self.map_terms(|t| Term { coef: t.coef.conj(), ..t.clone() })
    }

    pub fn scale(&self, c: Complex64) -> TestFunction {
        self.map_terms(|t| Term { coef: t.coef * c, ..t.clone() })
    }

    pub fn add(&self, other: &TestFunction) -> Result<TestFunction> {
        if self.d != other.d {
            return Err(Error::InvalidSpec("adding test functions of different dimension".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        let mut tail = self.tail.clone();
        tail.extend(other.tail.iter().cloned());
        let cap = if self.cap == other.cap { self.cap.clone() } else { None };
        Ok(TestFunction { d: self.d, terms, tail, cap })
    }

    /// (box + m^2) f, term by term.
    pub fn apply_kg(&self, params: &ModelParams) -> TestFunction {
        self.map_terms(|t| Term {
            profile: Profile::KleinGordon {
                inner: Box::new(t.profile.clone()),
                s: t.s,
                d: self.d,
                r: params.r,
                frak_m2: params.frak_m2(),
            },
            ..t.clone()
        })
    }

    /// f(R^{-1} x): poles (and the cap) rotated by R.
    pub fn rotate(&self, rot: &DMatrix<f64>) -> Result<TestFunction> {
        check_rotation(rot, self.d)?;
        let mut g = self.map_terms(|t| Term { pole: mat_vec(rot, &t.pole), ..t.clone() });
        if let Some(c) = &self.cap {
            g.cap = Some(Cap { pole: mat_vec(rot, &c.pole), theta: c.theta });
        }
        Ok(g)
    }
}

pub fn check_rotation(rot: &DMatrix<f64>, d: usize) -> Result<()> {
    if rot.nrows() != d || rot.ncols() != d {
        return Err(Error::Domain(format!("rotation must be {d} x {d}")));
    }
    let defect = (rot.transpose() * rot - DMatrix::<f64>::identity(d, d)).amax();
    if defect > 1e-12 {
        return Err(Error::Domain(format!("matrix is not orthogonal (defect {defect:.2e})")));
    }
    if rot.determinant() < 0.0 {
        return Err(Error::Domain("rotation has determinant -1".into()));
    }
    Ok(())
}

/// Deterministic random rotation in SO(d) via QR of a Gaussian matrix.
pub fn random_rotation<R: rand::Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let m = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    if q.determinant() < 0.0 {
        for i in 0..d {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

/// Unit vector e_k in R^d (k counted from 0), with optional sign.
pub fn unit_vector(d: usize, k: usize, sign: f64) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[k] = sign;
    v
}
