//! Global coordinates on de Sitter space, the ambient embedding and causal
//! classification.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::gamma_real;

/// cos(tau), evaluated through the distance to the boundary when |tau| > pi/4.
#[inline]
pub fn cos_tau(tau: f64) -> f64 {
    if tau.abs() <= FRAC_PI_4 {
        tau.cos()
    } else {
        (FRAC_PI_2 - tau.abs()).sin()
    }
}

/// |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2), the area of the unit sphere in R^n.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_real(n as f64 / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeSitterPoint {
    pub tau: f64,
    pub alpha: Vec<f64>,
}

impl DeSitterPoint {
    pub fn new(tau: f64, alpha: Vec<f64>) -> Result<Self> {
        let p = DeSitterPoint { tau, alpha };
        p.validate()?;
        Ok(p)
    }

    /// Normalizes `alpha` before validating.
    pub fn normalized(tau: f64, mut alpha: Vec<f64>) -> Result<Self> {
        let n = alpha.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::Domain("zero direction vector".into()));
        }
        alpha.iter_mut().for_each(|x| *x /= n);
        Self::new(tau, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.abs() < FRAC_PI_2) {
            return Err(Error::Domain(format!("tau = {} outside (-pi/2, pi/2)", self.tau)));
        }
        let n = self.alpha.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("|alpha| = {n} is not 1")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Angle between two unit vectors, stable near 0 and pi.
pub fn angle(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
    2.0 * diff.atan2(sum)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub r: f64,
    pub m: f64,
    pub b: f64,
    #[serde(default)]
    pub b_n: BTreeMap<usize, f64>,
}

impl ModelParams {
    pub fn new(d: usize, r: f64, m: f64, b: f64) -> Result<Self> {
        let p = ModelParams { d, r, m, b, b_n: BTreeMap::new() };
        p.validate()?;
        Ok(p)
    }

    /// Unit radius, b = m, all b_n = 1.
    pub fn with_frak_m(d: usize, frak_m: f64) -> Result<Self> {
        Self::new(d, 1.0, frak_m, frak_m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 3 {
            return Err(Error::InvalidSpec(format!("d = {} < 3", self.d)));
        }
        if !(self.r > 0.0 && self.m > 0.0 && self.b > 0.0) {
            return Err(Error::InvalidSpec("r, m, b must be positive".into()));
        }
        Ok(())
    }

    pub fn frak_m(&self) -> f64 {
        self.m * self.r
    }

    pub fn frak_m2(&self) -> f64 {
        let fm = self.frak_m();
        fm * fm
    }

    pub fn bn(&self, n: usize) -> f64 {
        self.b_n.get(&n).copied().unwrap_or(1.0)
    }

    /// Prefactor b^2/m^2 of the two-point function.
    pub fn two_point_factor(&self) -> f64 {
        (self.b / self.m).powi(2)
    }

    pub fn p_of(&self, s: usize) -> f64 {
        s as f64 + (self.d as f64 - 2.0) / 2.0
    }

    pub fn lambda(&self) -> f64 {
        (self.d as f64 - 2.0) / 2.0
    }
}

/// Ambient vector (r tan tau, r alpha / cos tau) in R^{1,d}.
pub fn embed(x: &DeSitterPoint, params: &ModelParams) -> Result<Vec<f64>> {
    x.validate()?;
    if x.alpha.len() != params.d {
        return Err(Error::Domain(format!("alpha has dimension {} but d = {}", x.alpha.len(), params.d)));
    }
    let c = cos_tau(x.tau);
    let mut v = Vec::with_capacity(params.d + 1);
    v.push(params.r * x.tau.tan());
    v.extend(x.alpha.iter().map(|a| params.r * a / c));
    Ok(v)
}

pub fn minkowski_square(v: &[f64]) -> f64 {
    v[0] * v[0] - v[1..].iter().map(|x| x * x).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CausalRelation {
    Spacelike,
    LightlikeFuture,
    LightlikePast,
    TimelikeFuture,
    TimelikePast,
    Coincident,
}

impl CausalRelation {
    pub fn time_reversed(self) -> Self {
        use CausalRelation::*;
        match self {
            LightlikeFuture => LightlikePast,
            LightlikePast => LightlikeFuture,
            TimelikeFuture => TimelikePast,
            TimelikePast => TimelikeFuture,
            other => other,
        }
    }

    pub fn is_causal(self) -> bool {
        !matches!(self, CausalRelation::Spacelike)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub relation: CausalRelation,
    pub interval: f64,
    pub band: f64,
    pub in_band: bool,
}

pub const LIGHTLIKE_BAND: f64 = 1e-9;

/// Classification by the ambient interval of the embedded difference.
/// "Future" means `y` is later than `x`.
pub fn causal_classify_detailed(x: &DeSitterPoint, y: &DeSitterPoint, params: &ModelParams) -> Result<Classification> {
    let ex = embed(x, params)?;
    let ey = embed(y, params)?;
    let band = LIGHTLIKE_BAND * params.r * params.r;
    if x == y {
        return Ok(Classification { relation: CausalRelation::Coincident, interval: 0.0, band, in_band: true });
    }
    let diff: Vec<f64> = ex.iter().zip(&ey).map(|(a, b)| b - a).collect();
    let s2 = minkowski_square(&diff);
    let later = y.tau > x.tau;
    let relation = if s2.abs() <= band {
        if y.tau == x.tau && x.alpha == y.alpha {
            CausalRelation::Coincident
        } else if later {
            CausalRelation::LightlikeFuture
        } else {
            CausalRelation::LightlikePast
        }
    } else if s2 < 0.0 {
        CausalRelation::Spacelike
    } else if later {
        CausalRelation::TimelikeFuture
    } else {
        CausalRelation::TimelikePast
    };
    Ok(Classification { relation, interval: s2, band, in_band: s2.abs() <= band })
}

pub fn causal_classify(x: &DeSitterPoint, y: &DeSitterPoint, params: &ModelParams) -> Result<CausalRelation> {
    causal_classify_detailed(x, y, params).map(|c| c.relation)
}

/// r^d cos^{-d}(tau).
pub fn volume_weight(tau: f64, params: &ModelParams) -> Result<f64> {
    if !(tau.abs() < FRAC_PI_2) {
        return Err(Error::Domain(format!("volume weight at |tau| = {} >= pi/2", tau.abs())));
    }
    Ok(params.r.powi(params.d as i32) * cos_tau(tau).powi(-(params.d as i32)))
}
