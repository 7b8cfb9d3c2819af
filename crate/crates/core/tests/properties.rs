use std::collections::BTreeMap;
use std::sync::OnceLock;

use desitter_core::cluster::{cumulants_from_moments, moments_from_cumulants};
use desitter_core::geometry::{causal_classify, embed, minkowski_square, DeSitterPoint, ModelParams};
use desitter_core::kernels::{KernelEngine, KernelKind};
use desitter_core::quadrature::{make_grid, GridSpec, QuadratureGrid};
use desitter_core::specfun::{gamma_complex, hyp2f1};
use desitter_core::stationary::{verify_spectral_support, TermPattern};
use desitter_core::testfn::{make_bump, random_rotation, TestFunction};
use desitter_core::wightman::{FieldSlot, FieldTag, NPointEngine};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type C64 = Complex64;

fn small() -> &'static (KernelEngine, QuadratureGrid) {
    static S: OnceLock<(KernelEngine, QuadratureGrid)> = OnceLock::new();
    S.get_or_init(|| {
        let p = ModelParams::with_frak_m(6, 3.0).unwrap();
        let spec = GridSpec { tau_panels: 16, tau_order: 10, sphere_points: 64, ..GridSpec::default() };
        (KernelEngine::new(&p, 2, 1e-7).unwrap(), make_grid(&spec, &p).unwrap())
    })
}

fn d4() -> &'static KernelEngine {
    static K: OnceLock<KernelEngine> = OnceLock::new();
    K.get_or_init(|| KernelEngine::new(&ModelParams::with_frak_m(4, 2f64.sqrt()).unwrap(), 4, 1e-6).unwrap())
}

fn unit(v: Vec<f64>) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 0.1).then(|| v.iter().map(|x| x / n).collect())
}

fn direction(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, d).prop_filter_map("degenerate direction", unit)
}

fn coef() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_filter_map("zero coefficient", |(a, b)| (a.hypot(b) > 0.05).then(|| C64::new(a, b)))
}

fn bump_in(d: usize, s_max: usize) -> impl Strategy<Value = TestFunction> {
    (-1.2..0.8f64, 0.15..0.6f64, 0..=s_max, direction(d), coef())
        .prop_map(|(lo, w, s, pole, c)| make_bump(lo, (lo + w).min(1.3), s, &pole, c).unwrap())
}

fn tag() -> impl Strategy<Value = FieldTag> {
    prop_oneof![Just(FieldTag::In), Just(FieldTag::Loc), Just(FieldTag::Out), Just(FieldTag::Current)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cluster_round_trip(n in 1usize..=5, vals in prop::collection::vec(-1000i64..1000, 31)) {
        let t: BTreeMap<u64, i64> = (1..(1u64 << n)).map(|m| (m, vals[(m as usize - 1) % vals.len()])).collect();
        let mom = moments_from_cumulants(&t, n).unwrap();
        prop_assert_eq!(cumulants_from_moments(&mom, n).unwrap(), t);
    }

    #[test]
    fn embedding_lies_on_hyperboloid(tau in -1.5..1.5f64, a in direction(5), r in 0.2..5.0f64) {
        let p = ModelParams::new(5, r, 1.0, 1.0).unwrap();
        let x = embed(&DeSitterPoint::new(tau, a).unwrap(), &p).unwrap();
        let scale = x.iter().map(|v| v * v).sum::<f64>();
        prop_assert!((minkowski_square(&x) + r * r).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn causal_relation_reverses_with_time(t1 in -1.4..1.4f64, t2 in -1.4..1.4f64, a in direction(4), b in direction(4)) {
        let p = ModelParams::new(4, 1.0, 1.0, 1.0).unwrap();
        let x = DeSitterPoint::new(t1, a).unwrap();
        let y = DeSitterPoint::new(t2, b).unwrap();
        prop_assert_eq!(causal_classify(&x, &y, &p).unwrap(), causal_classify(&y, &x, &p).unwrap().time_reversed());
    }

    #[test]
    fn gamma_reflection(x in -3.7..3.7f64, y in 0.1..3.0f64) {
        let z = C64::new(x, y);
        let lhs = gamma_complex(z).unwrap() * gamma_complex(1.0 - z).unwrap();
        let rhs = std::f64::consts::PI / (std::f64::consts::PI * z).sin();
        prop_assert!((lhs - rhs).norm() <= 1e-11 * rhs.norm());
    }

    #[test]
    fn hyp2f1_logarithm(x in -0.9..0.9f64, y in -0.9..0.9f64) {
        let z = C64::new(x, y);
        prop_assume!(z.norm() < 0.9 && z.norm() > 1e-3);
        let one = C64::new(1.0, 0.0);
        let v = hyp2f1(one, one, C64::new(2.0, 0.0), z).unwrap();
        let exact = -(one - z).ln() / z;
        prop_assert!((v - exact).norm() <= 1e-12 * exact.norm());
    }

    #[test]
    fn closed_form_modes(s in 0usize..=4, tau in -1.3..1.3f64) {
        let k = d4();
        let p = s as f64 + 1.0;
        let exact = tau.cos() * C64::from_polar(1.0, p * tau) / p.sqrt();
        prop_assert!((k.t_plus(s, tau).unwrap() - exact).norm() < 1e-8);
    }

    #[test]
    fn kernel_swap_conjugates(t1 in -1.0..1.0f64, t2 in -1.0..1.0f64, a in direction(4), b in direction(4)) {
        let k = d4();
        let x = DeSitterPoint::new(t1, a).unwrap();
        let y = DeSitterPoint::new(t2, b).unwrap();
        let v = k.kernel_point(&x, &y, 0.3, 4).unwrap();
        let w = k.kernel_point(&y, &x, 0.3, 4).unwrap();
        prop_assert!((v.value - w.value.conj()).norm() <= 1e-13 * v.value.norm().max(1.0));
    }

    #[test]
    fn dplus_is_positive(f in bump_in(4, 4), g in bump_in(4, 4)) {
        let k = d4();
        let h = f.add(&g).unwrap();
        let v = k.full_fns(KernelKind::Dplus, &h.conj(), &h).unwrap();
        prop_assert!(v.value.re >= -v.error);
        prop_assert!(v.value.im.abs() <= 1e-12 * v.value.norm() + v.error);
    }

    #[test]
    fn replacement_patterns_hold(n in 2usize..=10, k in 1usize..=10, eps in 1e-3..10.0f64) {
        prop_assume!(k <= n);
        let pat = TermPattern::replacement(n, k).unwrap();
        let c = verify_spectral_support(&pat, eps).unwrap();
        prop_assert!(c.holds);
        let m = verify_spectral_support(&pat.mirrored(), eps).unwrap();
        prop_assert!(m.holds);
        for (a, b) in c.steps.iter().zip(m.steps.iter().rev()) {
            prop_assert_eq!(a.feasible, b.feasible);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn npoint_hermiticity(fs in prop::collection::vec((tag(), bump_in(6, 2)), 3..=4)) {
        let (k, g) = small();
        let e = NPointEngine::new(k, g).unwrap();
        let slots: Vec<FieldSlot> = fs.into_iter().map(|(t, f)| FieldSlot::new(t, f)).collect();
        let r = e.verify_hermiticity(&slots).unwrap();
        prop_assert!(r.passed, "relative defect {}", r.relative);
    }

    #[test]
    fn npoint_rotation_equivariance(fs in prop::collection::vec((tag(), bump_in(6, 2)), 3), seed in any::<u64>()) {
        let (k, g) = small();
        let e = NPointEngine::new(k, g).unwrap();
        let slots: Vec<FieldSlot> = fs.into_iter().map(|(t, f)| FieldSlot::new(t, f)).collect();
        let rot = random_rotation(6, &mut ChaCha8Rng::seed_from_u64(seed));
        let (a, b) = e.verify_rotation_invariance(&slots, &rot).unwrap();
        prop_assert!((a.value - b.value).norm() <= 1e-12 * a.value.norm().max(1e-300) + 1e-300);
    }

    #[test]
    fn out_npoint_is_zero_within_error(fs in prop::collection::vec((-1.2..0.8f64, 0.2..0.5f64), 3)) {
        let (k, g) = small();
        let e = NPointEngine::new(k, g).unwrap();
        let pole = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        let fns: Vec<TestFunction> =
            fs.iter().map(|&(lo, w)| make_bump(lo, lo + w, 0, &pole, C64::new(1.0, 0.0)).unwrap()).collect();
        let r = e.out_npoint(&fns).unwrap();
        prop_assert!(r.value.norm() <= r.error.max(1e-14), "{} vs {}", r.value.norm(), r.error);
        let s = e.smatrix_element(&fns, &[]).unwrap();
        prop_assert_eq!(s.value, C64::new(0.0, 0.0));
    }
}
