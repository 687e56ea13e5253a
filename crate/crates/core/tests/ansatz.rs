use jacobi_jost::ansatz::{branch_sqrt, build_profile, zeta, Side, SpectralPoint, C};
use jacobi_jost::CoefficientModel;
use proptest::prelude::*;
use std::f64::consts::PI;

fn off(z: C) -> SpectralPoint {
    SpectralPoint::off_axis(z).unwrap()
}

fn power_law() -> CoefficientModel {
    CoefficientModel::power_law(0.1, 0.7, 0.05, 0.7).unwrap()
}

#[test]
fn branch_values() {
    assert_eq!(branch_sqrt(&off(C::new(1.25, 0.0))), C::new(0.75, 0.0));
    assert_eq!(branch_sqrt(&off(C::new(-1.25, 0.0))), C::new(-0.75, 0.0));
    assert_eq!(branch_sqrt(&SpectralPoint::upper(0.0).unwrap()), C::new(0.0, 1.0));
    assert_eq!(branch_sqrt(&SpectralPoint::lower(0.0).unwrap()), C::new(0.0, -1.0));
    assert_eq!(zeta(&off(C::new(1.25, 0.0))), C::new(0.5, 0.0));
    assert_eq!(zeta(&off(C::new(-1.25, 0.0))), C::new(-0.5, 0.0));
    assert!((zeta(&SpectralPoint::upper(0.0).unwrap()) - C::new(0.0, -1.0)).norm() < 1e-16);
}

#[test]
fn boundary_zeta_is_unimodular() {
    for lam in [-0.9, -0.3, 0.2, 0.75] {
        let th = f64::acos(lam);
        let up = zeta(&SpectralPoint::upper(lam).unwrap());
        let lo = zeta(&SpectralPoint::lower(lam).unwrap());
        assert!((up - C::from_polar(1.0, -th)).norm() < 1e-15);
        assert!((lo - C::from_polar(1.0, th)).norm() < 1e-15);
    }
}

#[test]
fn point_validation() {
    assert!(SpectralPoint::upper(1.0).is_err());
    assert!(SpectralPoint::off_axis(C::new(-1.0, 0.0)).is_err());
    assert!(SpectralPoint::off_axis(C::new(0.5, 0.0)).is_err());
    assert!(SpectralPoint::new(C::new(0.5, 0.1), Side::Plus).is_err());
    assert!(SpectralPoint::off_axis(C::new(f64::NAN, 0.0)).is_err());
    assert!(SpectralPoint::upper(1.5).is_ok());
}

#[test]
fn free_profile() {
    let free = CoefficientModel::free();
    let p = off(C::new(1.0, 1.0));
    let prof = build_profile(&free, &p, 50).unwrap();
    let z = zeta(&p);
    for n in 1..=51 {
        assert_eq!(prof.r[n], C::new(0.0, 0.0));
        assert!((prof.q(n) - z.powi(n as i32)).norm() < 1e-14);
    }
    let prof = build_profile(&free, &SpectralPoint::upper(0.0).unwrap(), 20).unwrap();
    assert_eq!(prof.k_lambda, Some(1.0));
    for n in 0..=21 {
        assert_eq!(prof.theta[n], PI / 2.0);
        assert!((prof.phi[n] - n as f64 * PI / 2.0).abs() < 1e-13);
        assert!(prof.big_phi[n].abs() < 1e-13);
    }
}

#[test]
fn remainder_bound_on_the_cut() {
    let model = CoefficientModel::power_law(0.1, 1.0, 0.0, 1.0).unwrap();
    let prof = build_profile(&model, &SpectralPoint::upper(0.5).unwrap(), 10_000).unwrap();
    let mut ratio: f64 = 0.0;
    for n in 2..=10_000 {
        let (a0, a1) = (prof.a[n - 1], prof.a[n]);
        let (b0, b1) = (prof.b[n - 1], prof.b[n]);
        let (l0, l1) = (prof.z[n - 1].re, prof.z[n].re);
        let bound = ((a1 - a0).abs() + (b1 - b0).abs()) / ((1.0 - l0 * l0).sqrt() + (1.0 - l1 * l1).sqrt());
        ratio = ratio.max(prof.r[n].norm() / bound);
    }
    assert!(ratio.is_finite() && ratio < 10.0, "{ratio}");
}

#[test]
fn remainder_is_summable() {
    let model = power_law();
    for p in [off(C::new(2.0, 0.0)), off(C::new(0.3, 0.4)), SpectralPoint::upper(0.6).unwrap(), SpectralPoint::lower(-0.95).unwrap()] {
        let prof = build_profile(&model, &p, 1 << 16).unwrap();
        let partial = |n: usize| prof.r[1..=n].iter().map(|r| r.norm()).sum::<f64>();
        let (s1, s2, s3) = (partial(1 << 14), partial(1 << 15), partial(1 << 16));
        assert!(s3 - s2 < s2 - s1 && s3 - s2 < 1e-3, "{p:?}: {s1} {s2} {s3}");
    }
}

#[test]
fn log_modulus_growth_rate() {
    let model = power_law();
    for z in [C::new(1.5, 0.0), C::new(0.2, 0.7), C::new(-3.0, -1.0)] {
        let p = off(z);
        let prof = build_profile(&model, &p, 10_000).unwrap();
        let target = zeta(&p).norm().ln();
        let res: Vec<f64> = [100usize, 1000, 10_000].iter().map(|&n| (prof.log_q[n].re / n as f64 - target).abs()).collect();
        assert!(res[0] > res[1] && res[1] > res[2], "{z}: {res:?}");
    }
}

#[test]
fn phase_decomposition_is_exact() {
    let prof = build_profile(&power_law(), &SpectralPoint::upper(-0.4).unwrap(), 3000).unwrap();
    let th = f64::acos(-0.4);
    for n in 0..=3001 {
        assert_eq!(prof.big_phi[n], prof.phi[n] - n as f64 * th);
        assert!((0.0..=PI).contains(&prof.theta[n]));
    }
}

#[test]
fn normalization_counts_outside_indices() {
    let model = CoefficientModel::explicit(vec![], vec![1.5, 0.0, -1.8]).unwrap();
    let prof = build_profile(&model, &SpectralPoint::upper(0.1).unwrap(), 10).unwrap();
    let z0 = zeta(&SpectralPoint::upper(-1.4).unwrap()).norm();
    let z2 = zeta(&SpectralPoint::upper(1.9).unwrap()).norm();
    assert!((prof.k_lambda.unwrap() - z0 * z2).abs() < 1e-15);
    assert_eq!(prof.theta[0], PI);
    assert_eq!(prof.theta[2], 0.0);
}

#[test]
fn rejects_bad_sizes() {
    assert!(build_profile(&power_law(), &off(C::new(2.0, 0.0)), 0).is_err());
    assert!(build_profile(&power_law(), &off(C::new(2.0, 0.0)), 20_000_000).is_err());
}

fn arb_point() -> impl Strategy<Value = SpectralPoint> {
    prop_oneof![
        (-3.0..3.0f64, 0.01..3.0f64, any::<bool>())
            .prop_map(|(x, y, up)| off(C::new(x, if up { y } else { -y }))),
        (-0.99..0.99f64, any::<bool>()).prop_map(|(l, up)| if up {
            SpectralPoint::upper(l).unwrap()
        } else {
            SpectralPoint::lower(l).unwrap()
        }),
    ]
}

fn arb_model() -> impl Strategy<Value = CoefficientModel> {
    (-0.3..0.3f64, 0.3..=1.0f64, -0.3..0.3f64, 0.3..=1.0f64)
        .prop_map(|(a, r1, b, r2)| CoefficientModel::power_law(a, r1, b, r2).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn telescoping_product(model in arb_model(), p in arb_point()) {
        let prof = build_profile(&model, &p, 1000).unwrap();
        prop_assert_eq!(prof.log_q[0], C::new(0.0, 0.0));
        let mut prod = C::new(1.0, 0.0);
        for n in 0..=1000 {
            let q = prof.q(n);
            // the running product carries n roundings of its own
            let rel = (q - prod).norm() / prod.norm().max(1e-300);
            let tol = 1e-12 + n as f64 * f64::EPSILON * prof.log_q[n].norm();
            prop_assert!(rel <= tol, "n = {}: rel {:e}, log q = {}", n, rel, prof.log_q[n]);
            prop_assert!(q.norm() <= 1.0 + 1e-12);
            prod *= prof.zeta[n];
        }
    }

    #[test]
    fn conjugation_symmetry(model in arb_model(), p in arb_point()) {
        let a = build_profile(&model, &p, 300).unwrap();
        let b = build_profile(&model, &p.conj(), 300).unwrap();
        for n in 0..=301 {
            prop_assert_eq!(a.zeta[n].conj(), b.zeta[n]);
            prop_assert_eq!(a.log_q[n].conj(), b.log_q[n]);
            prop_assert_eq!(a.r[n].conj(), b.r[n]);
        }
    }
}
