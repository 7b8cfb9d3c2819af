//! Finite Gram matrices of the form factor functional over explicit word bases.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{elements, expand_with, Ring};
use crate::error::{Error, Result};
use crate::wightman::{FieldSlot, NPointEngine};

type C64 = Complex64;

/// Ordered product of field slots applied to the vacuum; empty = vacuum.
pub type Word = Vec<FieldSlot>;

pub fn star(w: &[FieldSlot]) -> Word {
    w.iter().rev().map(|s| s.star()).collect()
}

/// Value with an absolute error bound, propagated through sums and products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Est {
    pub value: C64,
    pub error: f64,
}

impl Ring for Est {
    fn zero() -> Self {
        Est { value: C64::new(0.0, 0.0), error: 0.0 }
    }
    fn one() -> Self {
        Est { value: C64::new(1.0, 0.0), error: 0.0 }
    }
    fn add(&self, o: &Self) -> Self {
        Est { value: self.value + o.value, error: self.error + o.error }
    }
    fn sub(&self, o: &Self) -> Self {
        Est { value: self.value - o.value, error: self.error + o.error }
    }
    fn mul(&self, o: &Self) -> Self {
        Est {
            value: self.value * o.value,
            error: self.value.norm() * o.error + self.error * o.value.norm() + self.error * o.error,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormFactorGram {
    pub basis: Vec<Word>,
    pub matrix: DMatrix<C64>,
    pub errors: DMatrix<f64>,
    /// max |G_ij - conj G_ji| before symmetrization.
    pub hermiticity_defect: f64,
    pub norm: f64,
}

impl FormFactorGram {
    pub fn hermiticity_relative(&self) -> f64 {
        if self.norm > 0.0 { self.hermiticity_defect / self.norm } else { self.hermiticity_defect }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn to_csv(&self) -> String {
        let n = self.matrix.nrows();
        let mut out = String::from("i,j,re,im,error\n");
        for i in 0..n {
            for j in 0..n {
                let z = self.matrix[(i, j)];
                out.push_str(&format!("{i},{j},{:e},{:e},{:e}\n", z.re, z.im, self.errors[(i, j)]));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub positive: usize,
    pub zero: usize,
    pub negative: usize,
}

/// Full value F(slots) by cluster expansion over truncated functions.
/// One-point truncated values vanish.
pub struct FormFactor<'a> {
    engine: &'a NPointEngine<'a>,
    cache: Mutex<HashMap<String, Est>>,
}

impl<'a> FormFactor<'a> {
    pub fn new(engine: &'a NPointEngine<'a>) -> Self {
        FormFactor { engine, cache: Mutex::new(HashMap::new()) }
    }

    fn truncated(&self, slots: &[FieldSlot]) -> Result<Est> {
        if slots.len() < 2 {
            return Ok(Est::zero());
        }
        let key = serde_json::to_string(slots)?;
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let r = self.engine.truncated_npoint(slots)?;
        let v = Est { value: r.value, error: r.error };
        self.cache.lock().unwrap().insert(key, v);
        Ok(v)
    }

    pub fn full(&self, slots: &[FieldSlot]) -> Result<Est> {
        if slots.is_empty() {
            return Ok(Est::one());
        }
        if slots.len() > 63 {
            return Err(Error::Precondition("word too long".into()));
        }
        let all = (1u64 << slots.len()) - 1;
        expand_with(all, |m| {
            let sub: Vec<FieldSlot> = elements(m).into_iter().map(|i| slots[i].clone()).collect();
            self.truncated(&sub)
        })
    }

    /// F(star(v) (x) w).
    pub fn inner(&self, v: &[FieldSlot], w: &[FieldSlot]) -> Result<Est> {
        let mut s = star(v);
        s.extend_from_slice(w);
        self.full(&s)
    }
}

/// Gram matrix G_ij = F(star(w_i) (x) w_j); every entry is computed
/// independently so the Hermiticity defect is measured, then symmetrized.
pub fn gram(basis: &[Word], engine: &NPointEngine) -> Result<FormFactorGram> {
    let ff = FormFactor::new(engine);
    let n = basis.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let vals: Vec<Est> = pairs.par_iter().map(|&(i, j)| ff.inner(&basis[i], &basis[j])).collect::<Result<_>>()?;
    let raw = DMatrix::from_fn(n, n, |i, j| vals[i * n + j]);
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            defect = defect.max((raw[(i, j)].value - raw[(j, i)].value.conj()).norm());
        }
    }
    let matrix = DMatrix::from_fn(n, n, |i, j| 0.5 * (raw[(i, j)].value + raw[(j, i)].value.conj()));
    let errors = DMatrix::from_fn(n, n, |i, j| raw[(i, j)].error.max(raw[(j, i)].error));
    let norm = matrix.norm();
    Ok(FormFactorGram { basis: basis.to_vec(), matrix, errors, hermiticity_defect: defect, norm })
}

/// Default tolerance 1e-8 * ||G||.
pub fn default_tol(g: &FormFactorGram) -> f64 {
    1e-8 * g.norm
}

pub fn signature(g: &FormFactorGram, tol: f64) -> Signature {
    let ev = g.eigenvalues();
    Signature {
        positive: ev.iter().filter(|&&x| x > tol).count(),
        zero: ev.iter().filter(|&&x| x.abs() <= tol).count(),
        negative: ev.iter().filter(|&&x| x < -tol).count(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullQuotient {
    /// P* G P on the kept eigendirections.
    pub reduced: DMatrix<C64>,
    /// Columns: kept eigenvectors in the original basis.
    pub projection: DMatrix<C64>,
    /// Null vectors removed, as columns.
    pub null_vectors: DMatrix<C64>,
    pub removed: usize,
}

pub fn null_quotient(g: &FormFactorGram, tol: f64) -> NullQuotient {
    let n = g.matrix.nrows();
    let eig = g.matrix.clone().symmetric_eigen();
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() > tol).collect();
    let drop: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() <= tol).collect();
    let cols = |idx: &[usize]| DMatrix::from_fn(n, idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
    if keep.len() == n {
        return NullQuotient {
            reduced: g.matrix.clone(),
            projection: DMatrix::identity(n, n),
            null_vectors: DMatrix::zeros(n, 0),
            removed: 0,
        };
    }
    let projection = cols(&keep);
    let reduced = projection.adjoint() * &g.matrix * &projection;
    NullQuotient { reduced, projection, null_vectors: cols(&drop), removed: drop.len() }
}

/// Gram norm <s v, s v> of the vector v (coefficients over `basis`) after
/// left multiplication of every word by `slot`.
pub fn left_extended_norm(basis: &[Word], v: &[C64], slot: &FieldSlot, engine: &NPointEngine) -> Result<Est> {
    if v.len() != basis.len() {
        return Err(Error::Precondition("coefficient vector length differs from basis".into()));
    }
    let ext: Vec<Word> = basis
        .iter()
        .map(|w| {
            let mut e = vec![slot.clone()];
            e.extend_from_slice(w);
            e
        })
        .collect();
    let g = gram(&ext, engine)?;
    let mut acc = Est::zero();
    for i in 0..v.len() {
        for j in 0..v.len() {
            let c = v[i].conj() * v[j];
            acc = acc.add(&Est { value: c * g.matrix[(i, j)], error: c.norm() * g.errors[(i, j)] });
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelParams;
    use crate::kernels::{KernelEngine, KernelKind};
    use crate::quadrature::{make_grid, GridSpec, QuadratureGrid};
    use crate::testfn::{make_bump, unit_vector, TestFunction};
    use crate::wightman::FieldTag;

    fn setup() -> (KernelEngine, QuadratureGrid) {
        let params = ModelParams::with_frak_m(6, 3.0).unwrap();
        let k = KernelEngine::new(&params, 2, 1e-6).unwrap();
        let spec = GridSpec { tau_panels: 16, tau_order: 10, sphere_points: 64, ..GridSpec::default() };
        let g = make_grid(&spec, &params).unwrap();
        (k, g)
    }

    fn bump(lo: f64, hi: f64, s: usize, k: usize) -> TestFunction {
        make_bump(lo, hi, s, &unit_vector(6, k, 1.0), C64::new(1.0, 0.0)).unwrap()
    }

    #[test]
    fn vacuum_gram_is_one() {
        let (k, g) = setup();
        let e = NPointEngine::new(&k, &g).unwrap();
        let gr = gram(&[vec![]], &e).unwrap();
        assert_eq!(gr.matrix[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(signature(&gr, default_tol(&gr)), Signature { positive: 1, zero: 0, negative: 0 });
        assert_eq!(null_quotient(&gr, default_tol(&gr)).removed, 0);
    }

    #[test]
    fn one_particle_gram_is_two_point_matrix() {
        let (k, g) = setup();
        let e = NPointEngine::new(&k, &g).unwrap();
        let fs = [bump(-0.4, 0.0, 0, 5), bump(-0.1, 0.3, 1, 4)];
        let basis: Vec<Word> = fs.iter().map(|f| vec![FieldSlot::new(FieldTag::In, f.clone())]).collect();
        let gr = gram(&basis, &e).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let d = k.full_fns(KernelKind::Dplus, &fs[i].conj(), &fs[j]).unwrap().value * k.params.two_point_factor();
                assert!((gr.matrix[(i, j)] - d).norm() <= 1e-12 * d.norm().max(1e-300));
            }
        }
        let sig = signature(&gr, default_tol(&gr));
        assert_eq!(sig.negative, 0);
    }

    #[test]
    fn current_has_zero_norm_and_block_is_indefinite() {
        let (k, g) = setup();
        let e = NPointEngine::new(&k, &g).unwrap();
        let j = vec![FieldSlot::new(FieldTag::Current, bump(-0.3, 0.3, 0, 5))];
        let pp = vec![FieldSlot::new(FieldTag::Loc, bump(-0.6, -0.1, 0, 5)), FieldSlot::new(FieldTag::Loc, bump(0.1, 0.6, 0, 5))];
        let gr = gram(&[j, pp], &e).unwrap();
        assert_eq!(gr.matrix[(0, 0)], C64::new(0.0, 0.0));
        assert!(gr.matrix[(0, 1)].norm() > 0.0);
        assert!(gr.hermiticity_relative() <= 1e-12, "{}", gr.hermiticity_relative());
        assert_eq!(signature(&gr, default_tol(&gr)), Signature { positive: 1, zero: 0, negative: 1 });
        assert_eq!(null_quotient(&gr, default_tol(&gr)).removed, 0);
    }

    #[test]
    fn duplicate_words_give_one_null_direction() {
        let (k, g) = setup();
        let e = NPointEngine::new(&k, &g).unwrap();
        let w = vec![FieldSlot::new(FieldTag::In, bump(-0.4, 0.0, 0, 5))];
        let basis = vec![vec![], w.clone(), w];
        let gr = gram(&basis, &e).unwrap();
        let nq = null_quotient(&gr, default_tol(&gr));
        assert_eq!(nq.removed, 1);
        assert_eq!(nq.reduced.nrows(), 2);
        let v: Vec<C64> = nq.null_vectors.column(0).iter().copied().collect();
        let slot = FieldSlot::new(FieldTag::In, bump(-0.2, 0.2, 0, 4));
        let ext = left_extended_norm(&basis, &v, &slot, &e).unwrap();
        assert!(ext.value.norm() <= 1e-8 * gr.norm + ext.error, "{ext:?}");
    }

    #[test]
    fn est_products_propagate_errors() {
        let a = Est { value: C64::new(2.0, 0.0), error: 0.1 };
        let b = Est { value: C64::new(0.0, 3.0), error: 0.2 };
        let p = a.mul(&b);
        assert_eq!(p.value, C64::new(0.0, 6.0));
        assert!((p.error - (2.0 * 0.2 + 0.1 * 3.0 + 0.02)).abs() < 1e-15);
    }
}
