use desitter_core::dispersion::{dominated_convergence_probe, envelope_fit, threshold};
use desitter_core::fixtures::frozen_tri_bump;
use desitter_core::geometry::ModelParams;
use desitter_core::gns::{default_tol, gram, null_quotient, signature, FormFactor, Signature, Word};
use desitter_core::kernels::{KernelEngine, KernelKind};
use desitter_core::quadrature::{make_grid, GridSpec};
use desitter_core::stationary::{contrast_report, EquivalenceStatus};
use desitter_core::testfn::{make_bump, unit_vector, TestFunction};
use desitter_core::wightman::{FieldSlot, FieldTag, NPointEngine};
use num_complex::Complex64;

type C64 = Complex64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn d6() -> (ModelParams, KernelEngine) {
    let p = ModelParams::with_frak_m(6, 3.0).unwrap();
    let k = KernelEngine::new(&p, 1, 1e-7).unwrap();
    (p, k)
}

fn bump(lo: f64, hi: f64, s: usize, axis: usize, coef: C64) -> TestFunction {
    make_bump(lo, hi, s, &unit_vector(6, axis, 1.0), coef).unwrap()
}

fn loc3() -> Vec<FieldSlot> {
    vec![
        FieldSlot::new(FieldTag::Loc, bump(-0.8, -0.2, 0, 5, c(1.0, 0.0))),
        FieldSlot::new(FieldTag::Loc, bump(-0.3, 0.3, 1, 5, c(0.4, 0.6))),
        FieldSlot::new(FieldTag::Loc, bump(0.1, 0.7, 1, 5, c(0.8, -0.2))),
    ]
}

#[test]
fn three_point_self_convergence() {
    let (p, k) = d6();
    let g1 = make_grid(&GridSpec::default(), &p).unwrap();
    let fine = GridSpec { tau_panels: 96, sphere_points: 1024, ..GridSpec::default() };
    let g2 = make_grid(&fine, &p).unwrap();
    let a = NPointEngine::new(&k, &g1).unwrap().truncated_npoint(&loc3()).unwrap();
    let b = NPointEngine::new(&k, &g2).unwrap().truncated_npoint(&loc3()).unwrap();
    assert!(a.value.norm() > 10.0 * a.error, "value {} error {}", a.value, a.error);
    assert!((a.value - b.value).norm() <= a.error + b.error);
}

#[test]
fn independent_sphere_seeds_agree() {
    let (p, k) = d6();
    let g1 = make_grid(&GridSpec::default(), &p).unwrap();
    let g2 = make_grid(&GridSpec { seed: 99, ..GridSpec::default() }, &p).unwrap();
    let a = NPointEngine::new(&k, &g1).unwrap().truncated_npoint(&loc3()).unwrap();
    let b = NPointEngine::new(&k, &g2).unwrap().truncated_npoint(&loc3()).unwrap();
    assert!((a.value - b.value).norm() <= 2.0 * (a.error + b.error));
}

#[test]
fn sign_relations_between_paths() {
    let (p, k) = d6();
    let g = make_grid(&GridSpec::default(), &p).unwrap();
    let e = NPointEngine::new(&k, &g).unwrap();
    let fns: Vec<TestFunction> = [(-0.7, -0.3), (-0.3, 0.1), (0.5, 0.9)].iter().map(|&(a, b)| bump(a, b, 0, 5, c(1.0, 0.0))).collect();
    let out = e.out_npoint(&fns).unwrap();
    let slots: Vec<FieldSlot> = fns.iter().map(|f| FieldSlot::new(FieldTag::Out, f.clone())).collect();
    let tr = e.truncated_npoint(&slots).unwrap();
    let scale: f64 = tr.terms.iter().map(|t| t.value.norm()).sum();
    assert!((tr.value + out.value).norm() <= 1e-12 * scale);
    assert_eq!(e.smatrix_element(&[], &fns).unwrap().value, out.value);
    assert_eq!(e.smatrix_element(&fns, &[]).unwrap().value, c(0.0, 0.0));
}

#[test]
fn in_fields_have_only_pair_clusters() {
    let (p, k) = d6();
    let g = make_grid(&GridSpec::default(), &p).unwrap();
    let e = NPointEngine::new(&k, &g).unwrap();
    let ff = FormFactor::new(&e);
    let f: Vec<FieldSlot> = [(-0.9, -0.4, 0), (-0.5, 0.0, 1), (-0.1, 0.4, 0), (0.3, 0.8, 1)]
        .iter()
        .enumerate()
        .map(|(i, &(a, b, s))| FieldSlot::new(FieldTag::In, bump(a, b, s, 5 - i % 2, c(1.0, 0.2 * i as f64))))
        .collect();
    let w2 = |i: usize, j: usize| ff.full(&[f[i].clone(), f[j].clone()]).unwrap().value;
    let expected = w2(0, 1) * w2(2, 3) + w2(0, 2) * w2(1, 3) + w2(0, 3) * w2(1, 2);
    let full = ff.full(&f).unwrap();
    assert!((full.value - expected).norm() <= 1e-14 * expected.norm());
}

#[test]
fn in_sector_gram_is_positive() {
    let (p, k) = d6();
    let g = make_grid(&GridSpec::default(), &p).unwrap();
    let e = NPointEngine::new(&k, &g).unwrap();
    let basis: Vec<Word> = [(-0.9, -0.3, 0, 5), (-0.2, 0.4, 1, 4), (0.3, 0.9, 1, 5)]
        .iter()
        .map(|&(a, b, s, ax)| vec![FieldSlot::new(FieldTag::In, bump(a, b, s, ax, c(1.0, 0.0)))])
        .collect();
    let gm = gram(&basis, &e).unwrap();
    let sig = signature(&gm, default_tol(&gm));
    assert_eq!(sig.negative, 0);
    assert_eq!(sig.positive + sig.zero, 3);
    assert!(gm.eigenvalues()[0] >= -1e-8 * gm.norm);
}

#[test]
fn indefinite_block_survives_quotient() {
    let (p, k) = d6();
    let g = make_grid(&GridSpec::default(), &p).unwrap();
    let e = NPointEngine::new(&k, &g).unwrap();
    let basis: Vec<Word> = vec![
        vec![FieldSlot::new(FieldTag::Current, bump(-0.3, 0.3, 0, 5, c(1.0, 0.0)))],
        vec![
            FieldSlot::new(FieldTag::Loc, bump(-0.6, -0.1, 0, 5, c(1.0, 0.0))),
            FieldSlot::new(FieldTag::Loc, bump(0.1, 0.6, 0, 5, c(1.0, 0.0))),
        ],
    ];
    let gm = gram(&basis, &e).unwrap();
    assert_eq!(gm.matrix[(0, 0)], c(0.0, 0.0));
    assert!(gm.matrix[(0, 1)].norm() > 0.0);
    assert_eq!(signature(&gm, default_tol(&gm)), Signature { positive: 1, zero: 0, negative: 1 });
    let q = null_quotient(&gm, default_tol(&gm));
    assert_eq!(q.removed, 0);
    assert_eq!(q.reduced, gm.matrix);
}

#[test]
fn threshold_examples() {
    let t = threshold(4, 4).unwrap();
    assert_eq!(t.exponent, 0.0);
    assert!(t.passes);
    assert!(!threshold(4, 3).unwrap().passes);
    assert!(threshold(6, 3).unwrap().passes);
}

#[test]
fn principal_series_envelope() {
    let (p, _) = d6();
    let k = KernelEngine::new(&p, 0, 1e-8).unwrap();
    let f = make_bump(-0.3, 0.3, 0, &unit_vector(6, 5, 1.0), c(1.0, 0.0)).unwrap();
    let e = envelope_fit(&f, &k, 1e-6, 1e-2, 21).unwrap();
    assert!(e.slope >= 2.0 - 0.05, "slope {}", e.slope);
    assert_eq!(e.envelope_exponent, 2.0);
    assert_eq!(e.indicial_exponent, 2.5);
}

#[test]
fn dominated_sequence_is_bounded_and_vanishes() {
    let (p, k) = d6();
    let g = make_grid(&GridSpec { tau_panels: 16, tau_order: 10, sphere_points: 64, ..GridSpec::default() }, &p).unwrap();
    let e = NPointEngine::new(&k, &g).unwrap();
    let coefs: Vec<f64> = (0..12).map(|l| 0.5f64.powi(l)).collect();
    let r = dominated_convergence_probe(&e, &loc3(), 1, &coefs).unwrap();
    assert!(r.bound_holds, "violation {}", r.max_bound_violation);
    assert!(r.linearity_defect < 1e-12);
    assert!(r.converges_to_zero);
}

#[test]
fn retarded_pairing_matches_advanced_transpose() {
    let (_, k) = d6();
    let f = bump(-0.5, 0.2, 1, 5, c(1.0, 0.5));
    let h = bump(-0.1, 0.6, 1, 4, c(0.2, -0.7));
    let r = k.full_fns(KernelKind::Gret, &f, &h).unwrap();
    let a = k.full_fns(KernelKind::Gadv, &h, &f).unwrap();
    assert!((r.value - a.value).norm() <= r.error + a.error);
}

#[test]
fn contrast_with_frozen_fixture() {
    let fx = frozen_tri_bump().unwrap();
    let r = contrast_report(Some(&fx), 0.1).unwrap();
    assert_eq!(r.stationary.status, EquivalenceStatus::ExactZero);
    assert!(r.stationary.bound <= -0.3 + 1e-15);
    assert_eq!(r.desitter_out, fx.out);
    assert!(r.smatrix_k1_ratio > 5.0);
}
