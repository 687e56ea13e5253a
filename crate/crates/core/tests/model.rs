use jacobi_jost::model::{variation_tail, ModelKind, PowerLaw};
use jacobi_jost::{CoefficientModel, Error};
use proptest::prelude::*;

#[test]
fn evaluation_examples() {
    assert_eq!(CoefficientModel::free().eval_coeffs(7).unwrap(), (0.5, 0.0));
    let pl = CoefficientModel::power_law(0.1, 1.0, 0.0, 1.0).unwrap();
    assert_eq!(pl.eval_coeffs(1).unwrap(), (0.6, 0.0));
    let ex = CoefficientModel::explicit(vec![0.5], vec![1.0]).unwrap();
    assert_eq!(ex.eval_coeffs(5).unwrap(), (0.5, 0.0));
    assert_eq!(ex.eval_coeffs(0).unwrap(), (0.5, 1.0));
    assert_eq!(pl.eval_coeffs(-1).unwrap().0, 0.5);
    assert!(pl.eval_coeffs(-2).is_err());
}

#[test]
fn power_law_vanishes_at_zero() {
    let pl = CoefficientModel::power_law(0.3, 0.5, -0.2, 0.8).unwrap();
    assert_eq!(pl.coeffs(0), (0.5, 0.0));
    let (a, b) = pl.coeffs(4);
    assert!((a - (0.5 + 0.3 * 0.5)).abs() < 1e-15);
    assert!((b + 0.2 * 4f64.powf(-0.8)).abs() < 1e-15);
}

#[test]
fn rejects_bad_parameters() {
    for (r1, r2) in [(0.0, 1.0), (1.5, 1.0), (0.5, -0.1), (0.5, 1.01)] {
        assert!(matches!(CoefficientModel::power_law(0.1, r1, 0.1, r2), Err(Error::InvalidModel(_))));
    }
    assert!(CoefficientModel::power_law(-0.5, 1.0, 0.0, 1.0).is_err());
    assert!(CoefficientModel::power_law(f64::NAN, 1.0, 0.0, 1.0).is_err());
    assert!(matches!(
        CoefficientModel::explicit(vec![0.5, 0.0], vec![]),
        Err(Error::NonPositiveCoefficient { index: 1, .. })
    ));
    assert!(CoefficientModel::explicit(vec![-1.0], vec![]).is_err());
    let p = PowerLaw { alpha: 0.1, r1: 1.0, b: 0.0, r2: 1.0 };
    assert!(CoefficientModel::composite(p, vec![0.0, -0.7], vec![]).is_err());
}

#[test]
fn json_round_trip_and_rejections() {
    let m = CoefficientModel::from_json(r#"{"kind":"power_law","alpha":0.1,"r1":0.7,"b":0.05,"r2":0.7}"#).unwrap();
    assert_eq!(m, CoefficientModel::power_law(0.1, 0.7, 0.05, 0.7).unwrap());
    let back = CoefficientModel::from_spec(&m.to_spec()).unwrap();
    assert_eq!(back, m);
    let c = CoefficientModel::from_json(r#"{"kind":"composite","alpha":0.1,"r1":1,"a_list":[0.2],"b_list":[0.1,0.3]}"#).unwrap();
    assert!(matches!(c.kind(), ModelKind::Composite { .. }));
    assert!((c.coeffs(0).0 - 0.7).abs() < 1e-15);
    assert!((c.coeffs(1).1 - 0.3).abs() < 1e-15);
    for bad in [
        r#"{"kind":"free","alpha":0.1}"#,
        r#"{"kind":"power_law","alpha":0.1}"#,
        r#"{"kind":"explicit","a_list":[0.5],"r1":1}"#,
        r#"{"kind":"free","extra":1}"#,
        r#"{"kind":"pollaczek"}"#,
        r#"not json"#,
    ] {
        let err = CoefficientModel::from_json(bad).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{bad}");
    }
}

#[test]
fn variation_tail_examples() {
    let free = variation_tail(&CoefficientModel::free(), 1e-10, 100).unwrap();
    assert!(free.eps.iter().all(|&e| e == 0.0));
    assert_eq!(free.n_star, Some(0));

    let pl = CoefficientModel::power_law(0.1, 1.0, 0.0, 1.0).unwrap();
    let tail = variation_tail(&pl, 2e-3, 100).unwrap();
    assert!((tail.eps[100] - 1e-3).abs() < 1e-18);
    assert!((tail.eps[7] - 0.1 / 7.0).abs() < 1e-17);
    assert_eq!(tail.n_star, Some(51));
    assert!(matches!(variation_tail(&pl, 1e-3, 100), Err(Error::TailNotReached { n: 100, .. })));

    // ε_0 = |a_1 − a_0| + |b_1 − b_0| summed over the list and its step to the free tail
    let ex = CoefficientModel::explicit(vec![0.6, 0.5], vec![0.0, 0.0]).unwrap();
    let t = variation_tail(&ex, 1e-12, 4).unwrap();
    assert!((t.eps[0] - 0.1).abs() < 1e-15);
    assert_eq!(t.eps[2], 0.0);
}

#[test]
fn support_end_and_bounds() {
    let ex = CoefficientModel::explicit(vec![0.7, 0.5, 0.5], vec![0.0, 0.2, 0.0, 0.0]).unwrap();
    assert_eq!(ex.support_end(), Some(2));
    assert_eq!(CoefficientModel::free().support_end(), Some(0));
    assert_eq!(CoefficientModel::power_law(0.1, 0.7, 0.0, 1.0).unwrap().support_end(), None);
    let pl = CoefficientModel::power_law(0.1, 0.7, 0.05, 0.7).unwrap();
    assert!((pl.sup_perturbation() - 0.15).abs() < 1e-15);
    assert!(pl.is_hilbert_schmidt());
    assert!(!CoefficientModel::power_law(0.1, 0.5, 0.0, 1.0).unwrap().is_hilbert_schmidt());
}

fn arb_power() -> impl Strategy<Value = PowerLaw> {
    (-0.45..0.5f64, 0.05..=1.0f64, -0.5..0.5f64, 0.05..=1.0f64).prop_map(|(alpha, r1, b, r2)| PowerLaw { alpha, r1, b, r2 })
}

fn arb_model() -> impl Strategy<Value = CoefficientModel> {
    prop_oneof![
        arb_power().prop_map(|p| CoefficientModel::power_law(p.alpha, p.r1, p.b, p.r2).unwrap()),
        (prop::collection::vec(0.05..2.0f64, 0..12), prop::collection::vec(-2.0..2.0f64, 0..12))
            .prop_map(|(a, b)| CoefficientModel::explicit(a, b).unwrap()),
        (arb_power(), prop::collection::vec(-0.04..0.4f64, 0..8), prop::collection::vec(-1.0..1.0f64, 0..8))
            .prop_map(|(p, a, b)| CoefficientModel::composite(p, a, b).unwrap()),
    ]
}

fn direct_variation(model: &CoefficientModel, n: usize, m_max: usize) -> f64 {
    (n..=m_max)
        .map(|m| {
            let (a0, b0) = model.coeffs(m);
            let (a1, b1) = model.coeffs(m + 1);
            (a1 - a0).abs() + (b1 - b0).abs()
        })
        .sum()
}

proptest! {
    #[test]
    fn eps_is_non_increasing(model in arb_model()) {
        let mut prev = model.eps(0);
        for n in 1..200 {
            let e = model.eps(n);
            prop_assert!(e >= 0.0 && e <= prev * (1.0 + 1e-12) + 1e-15, "n = {}: {} > {}", n, e, prev);
            prev = e;
        }
    }

    #[test]
    fn eps_matches_direct_sum_plus_tail(model in arb_model(), n in 1usize..60) {
        let m_max = 10 * n;
        let direct = direct_variation(&model, n, m_max);
        let rest = model.eps(m_max + 1);
        let e = model.eps(n);
        prop_assert!((e - direct - rest).abs() <= 1e-12 * e.max(1e-3));
        prop_assert!(e >= direct - 1e-14);
    }

    #[test]
    fn accepted_models_have_positive_a(model in arb_model(), n in 0i64..100_000) {
        let (a, _) = model.eval_coeffs(n).unwrap();
        prop_assert!(a > 0.0);
        prop_assert_eq!(model.eval_coeffs(n).unwrap(), model.eval_coeffs(n).unwrap());
    }

    #[test]
    fn json_round_trip(model in arb_model()) {
        let text = serde_json::to_string(&model.to_spec()).unwrap();
        prop_assert_eq!(CoefficientModel::from_json(&text).unwrap(), model);
    }
}
