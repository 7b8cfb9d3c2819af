//! Complex Gamma, Gauss hypergeometric series, Gegenbauer polynomials and
//! harmonic-space data on S^{d-1}.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// ln Gamma(z) on the principal branch of the Lanczos form, Re z >= 1/2.
fn ln_gamma_lanczos(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// log Gamma(z). The imaginary part is not reduced to a fixed branch.
pub fn ln_gamma_complex(z: Complex64) -> Result<Complex64> {
    if is_nonpositive_integer(z) {
        return Err(Error::Pole { function: "gamma", at: format!("{z}") });
    }
    if z.re < 0.5 {
        let s = (PI * z).sin();
        Ok(Complex64::new(PI, 0.0).ln() - s.ln() - ln_gamma_lanczos(1.0 - z))
    } else {
        Ok(ln_gamma_lanczos(z))
    }
}

/// Gamma(z) for complex z, with reflection for Re z < 1/2.
pub fn gamma_complex(z: Complex64) -> Result<Complex64> {
    if is_nonpositive_integer(z) {
        return Err(Error::Pole { function: "gamma", at: format!("{z}") });
    }
    if z.re < 0.5 {
        let g = ln_gamma_lanczos(1.0 - z).exp();
        Ok(PI / ((PI * z).sin() * g))
    } else {
        Ok(ln_gamma_lanczos(z).exp())
    }
}

pub fn gamma_real(x: f64) -> f64 {
    gamma_complex(Complex64::new(x, 0.0)).map(|g| g.re).unwrap_or(f64::NAN)
}

/// Pochhammer-series 2F1(a, b; c; z) for |z| < 1.
pub fn hyp2f1(a: Complex64, b: Complex64, c: Complex64, z: Complex64) -> Result<Complex64> {
    if z.norm() >= 1.0 {
        return Err(Error::Domain(format!("hyp2f1 series needs |z| < 1, got |z| = {}", z.norm())));
    }
    if is_nonpositive_integer(c) {
        return Err(Error::Pole { function: "hyp2f1", at: format!("c = {c}") });
    }
    let mut sum = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for k in 0..100_000usize {
        let kf = k as f64;
        let ratio = (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        term *= ratio;
        sum += term;
        if term.norm() == 0.0 {
            return Ok(sum);
        }
        let rho = ratio.norm();
        if rho < 1.0 {
            let tail = term.norm() * rho / (1.0 - rho);
            if tail <= 1e-16 * sum.norm() && k > 2 {
                return Ok(sum);
            }
        }
    }
    Err(Error::Domain("hyp2f1 series failed to converge".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GegenbauerIndex {
    pub s: usize,
    pub lambda: f64,
}

impl GegenbauerIndex {
    pub fn for_dimension(s: usize, d: usize) -> Self {
        GegenbauerIndex { s, lambda: (d as f64 - 2.0) / 2.0 }
    }
}

/// C_s^lambda(t) by the three-term recurrence.
pub fn gegenbauer(idx: GegenbauerIndex, t: f64) -> f64 {
    gegenbauer_all(idx.s, idx.lambda, t)[idx.s]
}

/// C_0^lambda(t), ..., C_smax^lambda(t).
pub fn gegenbauer_all(s_max: usize, lambda: f64, t: f64) -> Vec<f64> {
    let mut c = Vec::with_capacity(s_max + 1);
    c.push(1.0);
    if s_max == 0 {
        return c;
    }
    c.push(2.0 * lambda * t);
    for s in 2..=s_max {
        let sf = s as f64;
        let v = (2.0 * t * (sf + lambda - 1.0) * c[s - 1] - (sf + 2.0 * lambda - 2.0) * c[s - 2]) / sf;
        c.push(v);
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicData {
    pub s: usize,
    pub d: usize,
    pub h: u64,
    pub a: f64,
}

/// h(s,d) = (2s+d-2)(s+d-3)!/(s!(d-2)!), h(0,d) = 1.
pub fn harmonic_dimension(s: usize, d: usize) -> u64 {
    if s == 0 {
        return 1;
    }
    // (s+d-3)!/(s!(d-3)!) * (2s+d-2)/(d-2), kept in integers.
    let binom = binomial((s + d - 3) as u64, s as u64);
    binom * (2 * s + d - 2) as u64 / (d - 2) as u64
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r as u64
}

/// Addition-theorem coefficient A(s,d) = (2s+d-2) Gamma(d/2) / (2 pi^{d/2} (d-2)).
pub fn addition_coefficient(s: usize, d: usize) -> f64 {
    let df = d as f64;
    (2.0 * s as f64 + df - 2.0) * gamma_real(df / 2.0) / (2.0 * PI.powf(df / 2.0) * (df - 2.0))
}

pub fn harmonic_data(s: usize, d: usize) -> HarmonicData {
    HarmonicData { s, d, h: harmonic_dimension(s, d), a: addition_coefficient(s, d) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gamma_examples() {
        assert_relative_eq!(gamma_complex(c(5.0, 0.0)).unwrap().re, 24.0, max_relative = 1e-14);
        assert_relative_eq!(gamma_complex(c(0.5, 0.0)).unwrap().re, PI.sqrt(), max_relative = 1e-14);
        let prod = gamma_complex(c(1.0, 1.0)).unwrap() * gamma_complex(c(1.0, -1.0)).unwrap();
        assert_relative_eq!(prod.re, PI / PI.sinh(), max_relative = 1e-13);
        assert!(prod.im.abs() < 1e-14);
    }

    #[test]
    fn gamma_poles() {
        assert!(gamma_complex(c(0.0, 0.0)).is_err());
        assert!(gamma_complex(c(-3.0, 0.0)).is_err());
        assert!(gamma_complex(c(-2.5, 0.0)).is_ok());
    }

    #[test]
    fn gamma_negative_real_values() {
        // Gamma(-1/2) = -2 sqrt(pi)
        let g = gamma_complex(c(-0.5, 0.0)).unwrap();
        assert_relative_eq!(g.re, -2.0 * PI.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for &(x, y) in &[(0.3, 0.0), (2.5, 1.0), (10.0, -4.0), (-1.5, 2.0), (30.0, 20.0)] {
            let z = c(x, y);
            let a = ln_gamma_complex(z).unwrap().exp();
            let b = gamma_complex(z).unwrap();
            assert!((a - b).norm() <= 1e-12 * b.norm(), "{z}");
        }
    }

    #[test]
    fn hyp2f1_examples() {
        let one = c(1.0, 0.0);
        assert_eq!(hyp2f1(c(0.3, 0.1), c(2.0, 0.0), c(3.0, 0.0), c(0.0, 0.0)).unwrap(), one);
        assert_eq!(hyp2f1(c(0.0, 0.0), c(2.0, 1.0), c(3.0, 0.0), c(0.4, 0.2)).unwrap(), one);
        let v = hyp2f1(one, one, c(2.0, 0.0), c(0.5, 0.0)).unwrap();
        assert_relative_eq!(v.re, 2.0 * 2f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn hyp2f1_closed_form_complex_argument() {
        // F(1,1;2;z) = -ln(1-z)/z
        let z = c(0.5, 0.5);
        let v = hyp2f1(c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), z).unwrap();
        let exact = -(1.0 - z).ln() / z;
        assert!((v - exact).norm() < 1e-14);
        // F(a,b;b;z) = (1-z)^-a
        let a = c(0.7, -0.2);
        let v = hyp2f1(a, c(2.3, 0.0), c(2.3, 0.0), z).unwrap();
        assert!((v - (1.0 - z).powc(-a)).norm() < 1e-13);
    }

    #[test]
    fn hyp2f1_errors() {
        let one = c(1.0, 0.0);
        assert!(hyp2f1(one, one, one, c(1.0, 0.0)).is_err());
        assert!(hyp2f1(one, one, c(-2.0, 0.0), c(0.5, 0.0)).is_err());
    }

    #[test]
    fn gegenbauer_examples() {
        let t = 0.37;
        assert_eq!(gegenbauer(GegenbauerIndex { s: 0, lambda: 1.5 }, t), 1.0);
        assert_relative_eq!(gegenbauer(GegenbauerIndex { s: 1, lambda: 1.5 }, t), 3.0 * t);
        assert!(gegenbauer(GegenbauerIndex { s: 2, lambda: 1.0 }, 0.5).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_u_oracle() {
        // C_s^1(cos th) = sin((s+1) th) / sin th
        let th: f64 = 0.7;
        let v = gegenbauer_all(12, 1.0, th.cos());
        for (s, val) in v.iter().enumerate() {
            let exact = ((s as f64 + 1.0) * th).sin() / th.sin();
            assert!((val - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_examples() {
        for d in 3..9 {
            assert_eq!(harmonic_dimension(0, d), 1);
        }
        assert_eq!(harmonic_dimension(2, 3), 5);
        for s in 0..10 {
            assert_relative_eq!(addition_coefficient(s, 3), (2.0 * s as f64 + 1.0) / (4.0 * PI), max_relative = 1e-14);
        }
    }

    #[test]
    fn harmonic_dimension_matches_polynomial_count() {
        // dim H^s = dim P_s - dim P_{s-2} with dim P_s = C(s+d-1, d-1)
        for d in 3..8u64 {
            for s in 0..12u64 {
                let ps = binomial(s + d - 1, d - 1);
                let ps2 = if s >= 2 { binomial(s - 2 + d - 1, d - 1) } else { 0 };
                assert_eq!(harmonic_dimension(s as usize, d as usize), ps - ps2, "s={s} d={d}");
            }
        }
    }
}
