//! Truncated Taylor series arithmetic. Coefficient k stores f^{(k)}(x0)/k!.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub c: Vec<f64>,
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        Jet { c: vec![0.0; order + 1] }
    }

    pub fn constant(v: f64, order: usize) -> Self {
        let mut j = Self::zero(order);
        j.c[0] = v;
        j
    }

    /// The jet of x -> x0 + slope (x - x0).
    pub fn variable(x0: f64, slope: f64, order: usize) -> Self {
        let mut j = Self::constant(x0, order);
        if order >= 1 {
            j.c[1] = slope;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        if k > self.order() {
            return 0.0;
        }
        let mut f = 1.0;
        for i in 2..=k {
            f *= i as f64;
        }
        self.c[k] * f
    }

    /// Jet of f' (one order lower).
    pub fn differentiate(&self) -> Jet {
        if self.c.len() == 1 {
            return Jet::zero(0);
        }
        Jet { c: (1..self.c.len()).map(|k| k as f64 * self.c[k]).collect() }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let mut c = self.c.clone();
        c.resize(order + 1, 0.0);
        Jet { c }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { c: self.c.iter().map(|x| x * s).collect() }
    }

    pub fn exp(&self) -> Jet {
        let n = self.c.len();
        let mut e = vec![0.0; n];
        e[0] = self.c[0].exp();
        for k in 1..n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.c[j] * e[k - j];
            }
            e[k] = acc / k as f64;
        }
        Jet { c: e }
    }

    pub fn recip(&self) -> Jet {
        let n = self.c.len();
        let mut r = vec![0.0; n];
        r[0] = 1.0 / self.c[0];
        for k in 1..n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += self.c[j] * r[k - j];
            }
            r[k] = -acc * r[0];
        }
        Jet { c: r }
    }

    /// (sin, cos) of the jet.
    pub fn sin_cos(&self) -> (Jet, Jet) {
        let n = self.c.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = self.c[0].sin();
        c[0] = self.c[0].cos();
        for k in 1..n {
            let mut as_ = 0.0;
            let mut ac = 0.0;
            for j in 1..=k {
                as_ += j as f64 * self.c[j] * c[k - j];
                ac += j as f64 * self.c[j] * s[k - j];
            }
            s[k] = as_ / k as f64;
            c[k] = -ac / k as f64;
        }
        (Jet { c: s }, Jet { c })
    }
}

fn zip_len(a: &Jet, b: &Jet) -> usize {
    a.c.len().min(b.c.len())
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        Jet { c: (0..zip_len(self, o)).map(|k| self.c[k] + o.c[k]).collect() }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        Jet { c: (0..zip_len(self, o)).map(|k| self.c[k] - o.c[k]).collect() }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let n = zip_len(self, o);
        let mut c = vec![0.0; n];
        for (k, ck) in c.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..=k {
                acc += self.c[i] * o.c[k - i];
            }
            *ck = acc;
        }
        Jet { c }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_variable() {
        let x = Jet::variable(0.3, 1.0, 6);
        let e = x.exp();
        for k in 0..=6 {
            assert!((e.derivative(k) - 0.3f64.exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn recip_and_product() {
        let x = Jet::variable(2.0, 1.0, 5);
        let one_plus = &Jet::constant(1.0, 5) + &(&x * &x);
        let r = one_plus.recip();
        let back = &r * &one_plus;
        assert!((back.c[0] - 1.0).abs() < 1e-15);
        for k in 1..=5 {
            assert!(back.c[k].abs() < 1e-14);
        }
        // d/dx 1/(1+x^2) = -2x/(1+x^2)^2 at x = 2 -> -4/25
        assert!((r.derivative(1) + 4.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn sin_cos_derivatives() {
        let x = Jet::variable(0.7, 1.0, 8);
        let (s, c) = x.sin_cos();
        let sv = [0.7f64.sin(), 0.7f64.cos(), -0.7f64.sin(), -0.7f64.cos()];
        for k in 0..=8 {
            assert!((s.derivative(k) - sv[k % 4]).abs() < 1e-12);
            assert!((c.derivative(k) - sv[(k + 1) % 4]).abs() < 1e-12);
        }
    }

    #[test]
    fn differentiate_shifts() {
        let x = Jet::variable(0.5, 1.0, 4);
        let cube = &(&x * &x) * &x;
        let d = cube.differentiate();
        assert!((d.value() - 0.75).abs() < 1e-15);
        assert!((d.derivative(1) - 3.0).abs() < 1e-15);
    }
}
