mod common;

use hermite_frac::functions::{Gaussian, HermiteFunction, TestFunction};
use hermite_frac::heat_semigroup::{
    heat_apply, heat_kernel, heat_kernel_s, heat_of_one, heat_of_one_s, hermite_integrals, mehler,
    mehler_partial, mehler_shell_sums, one_shell_sums, MedaParam,
};
use hermite_frac::hermite_basis::{
    eval_multi, expand, hermite_all, hermite_eval_1d, quadrature_rule, synthesize,
    synthesize_tensor, MultiIndex, SpectralCoeffs,
};
use hermite_frac::quadrature::integrate_real_line;
use proptest::prelude::*;

#[test]
fn recurrence_matches_closed_form() {
    for k in 0..=20 {
        for x in [-4.0, -1.3, 0.0, 0.4, 2.5, 5.0] {
            let want = common::hermite_closed(k, x);
            assert!(
                (hermite_eval_1d(k, x) - want).abs() <= 1e-12 * (1.0 + want.abs()),
                "k={k} x={x}"
            );
        }
    }
}

#[test]
fn recurrence_is_stable_for_high_degree() {
    // Far past where H_k e^{-x²/2} overflows term by term.
    let mut v = vec![0.0; 401];
    hermite_all(400, 30.0, &mut v);
    assert!(v.iter().all(|h| h.is_finite()));
    // |h_k| ≤ π^{-1/4} for every k.
    hermite_all(400, 0.3, &mut v);
    assert!(v.iter().all(|h| h.abs() < 1.0));
}

#[test]
fn gauss_hermite_rule_is_orthonormal() {
    let rule = quadrature_rule(60).unwrap();
    for j in 0..30 {
        for k in j..30 {
            let s: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&x, &w)| w * hermite_eval_1d(j, x) * hermite_eval_1d(k, x))
                .sum();
            let want = if j == k { 1.0 } else { 0.0 };
            assert!((s - want).abs() < 1e-12, "({j},{k}): {s}");
        }
    }
}

#[test]
fn expansion_of_a_basis_function_is_a_unit_vector() {
    let rule = quadrature_rule(40).unwrap();
    let u = HermiteFunction::new(vec![3, 1]);
    let c = expand(&|x: &[f64]| u.value(x), 2, 8, &rule);
    let want = SpectralCoeffs::basis(MultiIndex::new(vec![3, 1]));
    assert!(c.max_abs_diff(&want) < 1e-13);
}

#[test]
fn gaussian_expansion_converges() {
    let rule = quadrature_rule(120).unwrap();
    let u = Gaussian::new(vec![0.4], 0.8);
    let c = expand(&|x: &[f64]| u.value(x), 1, 60, &rule);
    for x in [-2.0, -0.3, 0.0, 1.1, 3.0] {
        assert!((synthesize(&c, &[x]).unwrap() - u.value(&[x])).abs() < 1e-12);
    }
    let axis = [-1.0, 0.5, 2.0];
    let tensor = synthesize_tensor(&c, &[&axis]).unwrap();
    for (x, v) in axis.iter().zip(&tensor) {
        assert!((v - synthesize(&c, &[*x]).unwrap()).abs() < 1e-14);
    }
}

#[test]
fn multi_index_ordering_and_counts() {
    // C(N + n, n) indices with |ν| ≤ N.
    assert_eq!(MultiIndex::all_up_to(1, 10).len(), 11);
    assert_eq!(MultiIndex::all_up_to(2, 10).len(), 66);
    assert_eq!(MultiIndex::all_up_to(3, 10).len(), 286);
    let nu = MultiIndex::new(vec![2, 0, 1]);
    assert_eq!(nu.order(), 3);
    assert_eq!(nu.eigenvalue(), 9.0);
    assert_eq!(nu.shifted(1, -1), None);
    assert_eq!(nu.shifted(0, -1), Some(MultiIndex::new(vec![1, 0, 1])));
    assert!(eval_multi(&nu, &[0.1, 0.2]).is_err());
}

#[test]
fn mehler_kernel_is_the_generating_function() {
    let x = [0.3, -0.8];
    let z = [1.1, 0.2];
    let p = mehler_shell_sums(&x, &z, 200).unwrap();
    for (j, pj) in p.iter().enumerate().take(6) {
        assert!((pj - common::shell_sum(j, &x, &z)).abs() < 1e-13);
    }
    for r in [0.1f64, 0.5, 0.8] {
        let series: f64 = p
            .iter()
            .enumerate()
            .map(|(j, pj)| r.powi(j as i32) * pj)
            .sum();
        assert!((series - mehler(r, &x, &z).unwrap()).abs() < 1e-12, "r={r}");
    }
}

#[test]
fn partial_mehler_sum_truncates_the_heat_kernel() {
    let x = [0.5];
    let z = [-0.2];
    // With many terms, φ_{2k} reaches G at s > 1/2, where r < 1/3.
    for s in [0.6f64, 0.8, 0.95] {
        let t = MedaParam::from_s(s).unwrap().t;
        let full = mehler_partial(s, &x, &z, 80).unwrap();
        assert!((full - heat_kernel(t, &x, &z).unwrap()).abs() < 1e-14);
    }
    assert_eq!(mehler_partial(0.4, &x, &z, 3).unwrap(), 0.0);
    assert!(mehler_partial(0.7, &x, &z, 0).is_err());
}

#[test]
fn integrals_of_hermite_functions() {
    let ints = hermite_integrals(12);
    for (k, want) in ints.iter().enumerate() {
        let v = integrate_real_line(|y| hermite_eval_1d(k, y), 0.0, common::opts(1e-14))
            .unwrap()
            .value;
        assert!((v - want).abs() < 1e-11, "k={k}: {v} vs {want}");
    }
    // Σ_j Q_j(x) r^j is e^{-t H}1 up to e^{nt}, with r = e^{-2t}.
    let x = [0.4, -0.6];
    let q = one_shell_sums(&x, 120);
    let t = 0.7f64;
    let r = (-2.0 * t).exp();
    let series: f64 = q
        .iter()
        .enumerate()
        .map(|(j, v)| r.powi(j as i32) * v)
        .sum();
    assert!((series * (-2.0 * t).exp() - heat_of_one(t, &x).unwrap()).abs() < 1e-13);
}

#[test]
fn heat_parametrization_errors() {
    assert!(heat_kernel(0.0, &[0.0], &[0.0]).is_err());
    assert!(heat_kernel(1.0, &[0.0], &[0.0, 1.0]).is_err());
    assert!(heat_kernel_s(1.0, &[0.0], &[0.0]).is_err());
    assert!(MedaParam::from_s(0.0).is_err());
}

proptest! {
    #[test]
    fn s_and_t_forms_agree(t in 0.01f64..5.0, x in prop::collection::vec(-3.0f64..3.0, 2), z in prop::collection::vec(-3.0f64..3.0, 2)) {
        let s = t.tanh();
        let a = heat_kernel(t, &x, &z).unwrap();
        let b = heat_kernel_s(s, &x, &z).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300) + 1e-300);
        let c = heat_of_one(t, &x).unwrap();
        prop_assert!((c - heat_of_one_s(s, &x).unwrap()).abs() <= 1e-13);
        prop_assert!((MedaParam::from_t(t).unwrap().s - s).abs() == 0.0);
    }

    #[test]
    fn kernel_is_symmetric_and_positive(t in 0.01f64..8.0, x in prop::collection::vec(-4.0f64..4.0, 3), z in prop::collection::vec(-4.0f64..4.0, 3)) {
        let a = heat_kernel(t, &x, &z).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!((a - heat_kernel(t, &z, &x).unwrap()).abs() <= 1e-15 * a);
    }

    #[test]
    fn spectral_semigroup_law(t in 0.0f64..2.0, s in 0.0f64..2.0, v in prop::collection::vec(-1.0f64..1.0, 21)) {
        prop_assume!(t > 0.0 && s > 0.0);
        let mut c = SpectralCoeffs::zeros(2, 5);
        for (nu, x) in MultiIndex::all_up_to(2, 5).into_iter().zip(v) {
            c.set(nu, x).unwrap();
        }
        let ab = heat_apply(t, &heat_apply(s, &c).unwrap()).unwrap();
        prop_assert!(ab.max_abs_diff(&heat_apply(t + s, &c).unwrap()) <= 1e-15);
    }
}
