use jacobi_jost::ansatz::{zeta, SpectralPoint, C};
use jacobi_jost::jost::{
    iterate_neumann, iterate_neumann_with, jost_function, kernel, normalize_on_cut, solve_jost,
    solve_jost_at, JostOptions, NeumannStart,
};
use jacobi_jost::CoefficientModel;

fn power_law() -> CoefficientModel {
    CoefficientModel::power_law(0.1, 0.7, 0.05, 0.7).unwrap()
}

fn test_points() -> Vec<SpectralPoint> {
    let mut pts: Vec<SpectralPoint> = [
        C::new(2.0, 0.0),
        C::new(-1.5, 0.0),
        C::new(1.0, 1.0),
        C::new(0.0, 0.5),
        C::new(-0.5, -0.3),
        C::new(1.5, 0.5),
    ]
    .iter()
    .map(|&z| SpectralPoint::off_axis(z).unwrap())
    .collect();
    for lam in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        pts.push(SpectralPoint::upper(lam).unwrap());
    }
    pts.push(SpectralPoint::lower(0.3).unwrap());
    pts
}

#[test]
fn free_model_at_two() {
    let p = SpectralPoint::off_axis(C::new(2.0, 0.0)).unwrap();
    let sol = solve_jost(&CoefficientModel::free(), &p, 1e-12).unwrap();
    let z = 2.0 - 3f64.sqrt();
    assert!(sol.u.iter().all(|&u| u == C::new(1.0, 0.0)));
    assert!((sol.f(5) - C::new(z.powi(5), 0.0)).norm() < 1e-14);
    assert!((sol.omega - C::new(-(2.0 + 3f64.sqrt()) / 2.0, 0.0)).norm() < 1e-13);
}

#[test]
fn free_model_at_zero_plus() {
    let p = SpectralPoint::upper(0.0).unwrap();
    let sol = normalize_on_cut(solve_jost(&CoefficientModel::free(), &p, 1e-12).unwrap()).unwrap();
    assert_eq!(sol.k_lambda, Some(1.0));
    assert!((sol.omega - C::new(0.0, -0.5)).norm() < 1e-15);
    assert!((sol.f(3) - C::new(0.0, 1.0)).norm() < 1e-14);
}

#[test]
fn single_site_sweep_matches_neumann() {
    let model = CoefficientModel::explicit(vec![], vec![1.0]).unwrap();
    let p = SpectralPoint::off_axis(C::new(2.0, 0.0)).unwrap();
    let sol = solve_jost(&model, &p, 1e-12).unwrap();
    let neu = iterate_neumann(&model, &p, sol.tail_index, 30).unwrap();
    for n in 0..=sol.tail_index {
        assert!((sol.u[n] - neu.u[n]).norm() < 1e-12, "n = {n}");
    }
    // beyond the perturbation the Jost solution is a multiple of ζ^n with u ≡ 1
    let z = zeta(&p);
    assert!((sol.f(4) / sol.f(3) - z).norm() < 1e-14);
}

#[test]
fn sweep_agrees_with_neumann_on_long_range_model() {
    let model = power_law();
    for p in test_points() {
        let sol = solve_jost_at(&model, &p, 800).unwrap();
        let neu = iterate_neumann(&model, &p, 800, 30).unwrap();
        let err = (0..=800).map(|n| (sol.u[n] - neu.u[n]).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{p:?}: {err:e}");
    }
}

#[test]
fn neumann_is_trivial_for_free_model() {
    let p = SpectralPoint::off_axis(C::new(1.0, 1.0)).unwrap();
    let neu = iterate_neumann_with(&CoefficientModel::free(), &p, 50, 5, NeumannStart::Unit).unwrap();
    assert!(neu.u.iter().all(|&u| u == C::new(1.0, 0.0)));
    assert!(neu.term_norms[1..].iter().all(|&t| t == 0.0));
}

#[test]
fn second_neumann_term_obeys_factorial_bound() {
    let model = power_law();
    let p = SpectralPoint::upper(0.5).unwrap();
    let n_tail = 300;
    let one = iterate_neumann_with(&model, &p, n_tail, 1, NeumannStart::Unit).unwrap();
    let two = iterate_neumann_with(&model, &p, n_tail, 2, NeumannStart::Unit).unwrap();
    let prof = jacobi_jost::ansatz::build_profile(&model, &p, n_tail).unwrap();
    let c = (0..n_tail)
        .flat_map(|n| (n + 1..=n_tail).step_by(7).map(move |m| (n, m)))
        .filter(|(n, _)| n % 11 == 0)
        .map(|(n, m)| kernel(&prof, n, m).norm())
        .fold(0.0, f64::max);
    for n in (0..n_tail).step_by(10) {
        let rn: f64 = prof.r[n + 1..=n_tail].iter().map(|r| r.norm()).sum();
        let diff = (one.u[n] - two.u[n]).norm();
        // the sampled sup of G may miss the true maximum slightly
        assert!(diff <= 1.1 * (c * rn).powi(2) / 2.0, "n = {n}: {diff:e}");
    }
}

#[test]
fn equation_residual_and_wronskian_forms() {
    let model = power_law();
    for p in test_points() {
        let sol = solve_jost(&model, &p, 1e-9).unwrap();
        let (res, _) = sol.equation_residual();
        assert!(res < 1e-10, "{p:?}: {res:e}");
        // Ω = {P, f}(0) = a_0 (P_0 f_1 − P_1 f_0) with P_1 = (z − b_0)/a_0
        let (a0, b0) = model.eval_coeffs(0).unwrap();
        let p1 = (p.z() - b0) / a0;
        let omega0 = a0 * (sol.f(1) - p1 * sol.f(0));
        assert!((omega0 - sol.omega).norm() < 1e-12 * sol.omega.norm().max(1.0));
    }
}

#[test]
fn lower_side_is_conjugate_of_upper_side() {
    let model = power_law();
    for lam in [-0.7, 0.2, 0.9] {
        let up = solve_jost_at(&model, &SpectralPoint::upper(lam).unwrap(), 2000).unwrap();
        let lo = solve_jost_at(&model, &SpectralPoint::lower(lam).unwrap(), 2000).unwrap();
        for n in 0..2000 {
            assert!((up.u[n].conj() - lo.u[n]).norm() < 1e-14);
        }
        assert!((up.omega.conj() - lo.omega).norm() < 1e-14);
    }
}

#[test]
fn tail_start_converges_fast() {
    let model = power_law();
    for p in [SpectralPoint::off_axis(C::new(2.0, 0.0)).unwrap(), SpectralPoint::upper(0.9).unwrap()] {
        let fine = solve_jost_at(&model, &p, 1 << 20).unwrap().omega;
        let v = jost_function(&model, &p, &JostOptions::with_tol(1e-9)).unwrap();
        assert!((v.omega - fine).norm() < 1e-8 * fine.norm(), "{:e}", (v.omega - fine).norm());
    }
}

#[test]
fn envelope_and_derivative_summability() {
    let model = power_law();
    for p in test_points() {
        let sol = solve_jost_at(&model, &p, 1 << 14).unwrap();
        assert!(sol.envelope() < 1e3, "{p:?}: {}", sol.envelope());
        let partial = |n: usize| -> f64 { (0..n).map(|k| (sol.u[k + 1] - sol.u[k]).norm()).sum() };
        let (s1, s2, s3) = (partial(1 << 12), partial(1 << 13), partial(1 << 14));
        assert!(s3 - s2 < s2 - s1 && s3 - s2 < 1e-2, "{p:?}");
    }
}

#[test]
fn normalization_for_single_strong_site() {
    let model = CoefficientModel::explicit(vec![], vec![1.5]).unwrap();
    let p = SpectralPoint::upper(0.0).unwrap();
    let sol = solve_jost(&model, &p, 1e-12).unwrap();
    // λ_0 = −1.5 is the only index outside (−1, 1)
    let k = (-1.5f64 + 1.25f64.sqrt()).abs();
    assert!((sol.k_lambda.unwrap() - k).abs() < 1e-15);
    let raw = sol.omega;
    let normed = normalize_on_cut(sol).unwrap();
    assert!((normed.omega - raw / k).norm() < 1e-15);
    assert!((normed.f(60).norm() - 1.0).abs() < 1e-12);
    assert!(normalize_on_cut(solve_jost(&model, &SpectralPoint::off_axis(C::new(2.0, 0.0)).unwrap(), 1e-12).unwrap()).is_err());
}

#[test]
fn free_normalization_is_identity() {
    let sol = solve_jost(&CoefficientModel::free(), &SpectralPoint::upper(0.4).unwrap(), 1e-12).unwrap();
    let omega = sol.omega;
    let normed = normalize_on_cut(sol).unwrap();
    assert_eq!(normed.omega, omega);
}

#[test]
fn normalized_solution_has_unit_modulus_at_large_n() {
    let model = power_law();
    let sol = normalize_on_cut(solve_jost_at(&model, &SpectralPoint::upper(-0.5).unwrap(), 1 << 16).unwrap()).unwrap();
    let d1 = (sol.f(1 << 10).norm() - 1.0).abs();
    let d2 = (sol.f(1 << 15).norm() - 1.0).abs();
    assert!(d2 < d1 && d2 < 1e-3, "{d1:e} {d2:e}");
}

#[test]
fn kernel_is_bounded_uniformly() {
    let model = power_law();
    for p in test_points() {
        let prof = jacobi_jost::ansatz::build_profile(&model, &p, 400).unwrap();
        let sup = (0..400)
            .step_by(13)
            .flat_map(|n| (n + 1..=400).step_by(17).map(move |m| (n, m)))
            .map(|(n, m)| kernel(&prof, n, m).norm())
            .fold(0.0, f64::max);
        assert!(sup.is_finite() && sup < 50.0, "{p:?}: {sup}");
    }
}

#[test]
fn doubling_reports_failure_at_cap() {
    let model = power_law();
    let opts = JostOptions { tol: 1e-15, max_index: 4096, ..Default::default() };
    let err = jost_function(&model, &SpectralPoint::upper(0.5).unwrap(), &opts).unwrap_err();
    assert!(matches!(err, jacobi_jost::Error::TailNotConverged { .. }));
}
