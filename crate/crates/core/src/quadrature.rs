//! Gauss rules, pairwise summation and the tau x sphere integration grid.

use std::f64::consts::PI;
use std::ops::Add;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::geometry::{cos_tau, sphere_area, ModelParams};

/// Tree summation over a fixed order. Bit-reproducible for a given slice.
pub fn pairwise_sum<T: Copy + Add<Output = T> + Default>(xs: &[T]) -> T {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        let mut acc = T::default();
        for &x in xs {
            acc = acc + x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss rule for the weight (1 - t^2)^(lambda - 1/2) on [-1, 1] (Golub-Welsch).
pub fn gauss_gegenbauer(n: usize, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && lambda > -0.5);
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let b2 = kf * (kf + 2.0 * lambda - 1.0) / (4.0 * (kf + lambda) * (kf + lambda - 1.0));
        let b = b2.sqrt();
        jm[(k, k - 1)] = b;
        jm[(k - 1, k)] = b;
    }
    // lambda = 0 makes the k = 1 formula 0/0; the Chebyshev limit is 1/2.
    if n > 1 && lambda.abs() < 1e-300 {
        jm[(1, 0)] = 0.5f64.sqrt();
        jm[(0, 1)] = 0.5f64.sqrt();
    }
    let mu0 = PI.sqrt() * crate::specfun::gamma_real(lambda + 0.5) / crate::specfun::gamma_real(lambda + 1.0);
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

/// Composite Gauss-Legendre rule on [a, b] with `panels` equal panels.
pub fn composite_gl(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let lo = a + h * k as f64;
        let mid = lo + 0.5 * h;
        for i in 0..order {
            out.push((mid + 0.5 * h * x[i], 0.5 * h * w[i]));
        }
    }
    out
}

/// Serializable grid request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub tau_panels: usize,
    pub tau_order: usize,
    pub sphere_points: usize,
    pub seed: u64,
    pub epsilon_cut: f64,
    #[serde(default = "default_replicates")]
    pub sphere_replicates: usize,
}

fn default_replicates() -> usize {
    8
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            tau_panels: 48,
            tau_order: 12,
            sphere_points: 512,
            seed: 20240611,
            epsilon_cut: 1e-6,
            sphere_replicates: 8,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.tau_panels < 2 || self.tau_order < 1 || self.sphere_points < 1 || self.sphere_replicates < 1 {
            return Err(Error::InvalidSpec("grid sizes must be positive (tau_panels >= 2)".into()));
        }
        if !(self.epsilon_cut > 0.0 && self.epsilon_cut < PI / 2.0) {
            return Err(Error::InvalidSpec(format!("epsilon_cut {} outside (0, pi/2)", self.epsilon_cut)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauNode {
    pub tau: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereNode {
    pub alpha: Vec<f64>,
    pub weight: f64,
    pub replicate: usize,
}

/// Product grid on the tau slab and the sphere S^{d-1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub d: usize,
    pub spec: GridSpec,
    pub tau_nodes: Vec<TauNode>,
    /// Companion rule with half the panels, used for the tau error estimate.
    pub tau_nodes_coarse: Vec<TauNode>,
    /// Width of the outermost panel on each side.
    pub outer_panel_width: f64,
    pub sphere_nodes: Vec<SphereNode>,
    pub replicates: usize,
}

impl QuadratureGrid {
    pub fn seed(&self) -> u64 {
        self.spec.seed
    }

    pub fn epsilon_cut(&self) -> f64 {
        self.spec.epsilon_cut
    }

    pub fn tau_range(&self) -> (f64, f64) {
        let e = self.spec.epsilon_cut;
        (-PI / 2.0 + e, PI / 2.0 - e)
    }

    /// Sphere nodes rotated by `rot` (row-major d x d); tau rule unchanged.
    pub fn rotated(&self, rot: &DMatrix<f64>) -> QuadratureGrid {
        let mut g = self.clone();
        for node in g.sphere_nodes.iter_mut() {
            node.alpha = mat_vec(rot, &node.alpha);
        }
        g
    }

    /// Integral of g(tau) * r^d cos^-d(tau) over the slab times |S^{d-1}|.
    pub fn integrate_tau_volume<F: Fn(f64) -> f64>(&self, params: &ModelParams, g: F) -> f64 {
        let rd = params.r.powi(params.d as i32);
        let vals: Vec<f64> = self
            .tau_nodes
            .iter()
            .map(|n| n.weight * g(n.tau) * rd * cos_tau(n.tau).powi(-(params.d as i32)))
            .collect();
        pairwise_sum(&vals) * sphere_area(params.d)
    }
}

pub(crate) fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

fn tau_rule(a: f64, b: f64, panels: usize, order: usize) -> Vec<TauNode> {
    composite_gl(a, b, panels, order)
        .into_iter()
        .map(|(tau, weight)| TauNode { tau, weight })
        .collect()
}

/// Build the grid. The sphere part is `replicates` Cranley-Patterson shifted
/// Halton sets mapped to the sphere through the Gaussian inverse CDF.
pub fn make_grid(spec: &GridSpec, params: &ModelParams) -> Result<QuadratureGrid> {
    spec.validate()?;
    let d = params.d;
    if d > PRIMES.len() {
        return Err(Error::InvalidSpec(format!("dimension {d} too large for the Halton sampler")));
    }
    let e = spec.epsilon_cut;
    let (a, b) = (-PI / 2.0 + e, PI / 2.0 - e);
    let tau_nodes = tau_rule(a, b, spec.tau_panels, spec.tau_order);
    let coarse_panels = (spec.tau_panels / 2).max(1);
    let tau_nodes_coarse = tau_rule(a, b, coarse_panels, spec.tau_order);

    let reps = spec.sphere_replicates.min(spec.sphere_points).max(1);
    let per = spec.sphere_points / reps;
    let total = per * reps;
    let area = sphere_area(d);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut sphere_nodes = Vec::with_capacity(total);
    for rep in 0..reps {
        let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        for i in 0..per {
            let idx = (i + 1) as u64;
            let mut v: Vec<f64> = (0..d)
                .map(|k| {
                    let u = (radical_inverse(idx, PRIMES[k]) + shift[k]).fract();
                    normal.inverse_cdf(u.clamp(1e-15, 1.0 - 1e-15))
                })
                .collect();
            let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= nrm);
            sphere_nodes.push(SphereNode { alpha: v, weight: area / total as f64, replicate: rep });
        }
    }
    Ok(QuadratureGrid {
        d,
        spec: spec.clone(),
        tau_nodes,
        tau_nodes_coarse,
        outer_panel_width: (b - a) / spec.tau_panels as f64,
        sphere_nodes,
        replicates: reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        for n in 1..20 {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} k={k} {q} {exact}");
            }
        }
    }

    #[test]
    fn gegenbauer_rule_moments() {
        // lambda = 1: weight sqrt(1-t^2), moments pi/2, pi/8 for t^0, t^2.
        let (x, w) = gauss_gegenbauer(10, 1.0);
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((m0 - PI / 2.0).abs() < 1e-13);
        assert!((m2 - PI / 8.0).abs() < 1e-13);
        let (_, w) = gauss_gegenbauer(5, 0.5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499500.0);
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
    }

    #[test]
    fn radical_inverse_base2() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(1, 3), 1.0 / 3.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        let p = ModelParams::new(4, 1.0, 1.0, 1.0).unwrap();
        let mut s = GridSpec::default();
        s.epsilon_cut = 0.0;
        assert!(make_grid(&s, &p).is_err());
        let mut s = GridSpec::default();
        s.tau_panels = 0;
        assert!(make_grid(&s, &p).is_err());
    }
}
