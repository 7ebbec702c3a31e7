use hermite_frac::functions::HermiteFunction;
use hermite_frac::grid::GridFunction;
use hermite_frac::hermite_basis::hermite_eval_1d;
use hermite_frac::holder_spaces::{
    holder_quotient_max, norm_ck_alpha, sample_with_derivatives, seminorm_holder, seminorm_weight,
    PairSampling,
};
use proptest::prelude::*;

fn grid(l: f64, h: f64, f: impl Fn(f64) -> f64) -> GridFunction {
    GridFunction::from_fn(1, l, h, &|x: &[f64]| f(x[0])).unwrap()
}

#[test]
fn holder_seminorm_examples() {
    assert_eq!(
        seminorm_holder(&grid(6.0, 0.01, |_| 5.0), 0.5)
            .unwrap()
            .value,
        0.0
    );
    let id = seminorm_holder(&grid(3.0, 0.01, |x| x), 1.0).unwrap();
    assert!((id.value - 1.0).abs() < 1e-12, "{}", id.value);
    let single = GridFunction {
        dimension: 1,
        half_width: 1.0,
        step: 2.0,
        values: vec![1.0],
        derivatives: Default::default(),
    };
    assert!(seminorm_holder(&single, 0.5).is_err());
    assert!(seminorm_holder(&grid(3.0, 0.5, |x| x), 1.5).is_err());
}

#[test]
fn holder_seminorm_of_ground_state_matches_exhaustive_search() {
    let h0 = |x: f64| hermite_eval_1d(0, x);
    let est = seminorm_holder(&grid(6.0, 0.02, h0), 0.5).unwrap().value;
    let fine = grid(6.0, 0.01, h0);
    let pts = fine.axis();
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.max((fine.values[i] - fine.values[j]).abs() / (pts[j] - pts[i]).sqrt());
        }
    }
    assert!((est - best).abs() <= 0.02 * best, "{est} vs {best}");
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-12 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b))
}

#[test]
fn weight_seminorm_examples() {
    assert_eq!(
        seminorm_weight(&grid(6.0, 0.01, |_| 0.0), 0.5)
            .unwrap()
            .value,
        0.0
    );
    let w = |x: f64| (1.0 + x.abs()).sqrt() * hermite_eval_1d(0, x);
    let oracle = golden_max(w, 0.0, 3.0);
    let est = seminorm_weight(&grid(6.0, 0.01, |x| hermite_eval_1d(0, x)), 0.5).unwrap();
    assert!(
        (est.value - oracle).abs() <= 1e-4 * oracle,
        "{} vs {oracle}",
        est.value
    );
    assert!(!est.on_boundary);
    let one = seminorm_weight(&grid(4.0, 0.1, |_| 1.0), 0.5).unwrap();
    assert!(one.on_boundary);
    let one2 = GridFunction::from_fn(2, 3.0, 0.5, &|_: &[f64]| 1.0).unwrap();
    assert!(seminorm_weight(&one2, 0.3).unwrap().on_boundary);
}

#[test]
fn ck_norm_examples() {
    let u = sample_with_derivatives(&HermiteFunction::new(vec![0]), 6.0, 0.01, 1).unwrap();
    let a1 = u.derivative(&[1]).unwrap();
    assert!(a1.iter().all(|v| v.abs() < 1e-8));
    let am = u.derivative(&[-1]).unwrap();
    for (i, v) in am.iter().enumerate().step_by(37) {
        let x = u.point(i)[0];
        assert!((v - 2f64.sqrt() * hermite_eval_1d(1, x)).abs() < 1e-8);
    }
    let r1 = norm_ck_alpha(&u, 1, 0.5).unwrap();
    let r0 = norm_ck_alpha(&u, 0, 0.5).unwrap();
    assert_eq!(r0.ck_norm, r0.seminorm_m + r0.seminorm_c);
    assert!(r1.ck_norm >= r1.seminorm_m);
    let doubled = {
        let mut g = u.scaled(2.0);
        g.derivatives = u
            .derivatives
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(|a| 2.0 * a).collect()))
            .collect();
        g
    };
    assert_eq!(
        norm_ck_alpha(&doubled, 1, 0.5).unwrap().ck_norm,
        2.0 * r1.ck_norm
    );
    let bare = grid(6.0, 0.01, |x| hermite_eval_1d(0, x));
    let err = norm_ck_alpha(&bare, 1, 0.5).unwrap_err().to_string();
    assert!(err.contains("[1]") && err.contains("[-1]"), "{err}");
}

#[test]
fn deterministic_reports() {
    let u = sample_with_derivatives(&HermiteFunction::new(vec![1, 0]), 3.0, 0.1, 1).unwrap();
    let a = norm_ck_alpha(&u, 1, 0.7).unwrap();
    let b = norm_ck_alpha(&u, 1, 0.7).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn seminorms_are_homogeneous_and_subadditive(
        a in prop::collection::vec(-1.0f64..1.0, 13),
        b in prop::collection::vec(-1.0f64..1.0, 13),
        alpha in 0.1f64..1.0,
    ) {
        let ga = GridFunction::new(1, 3.0, 0.5, a.clone()).unwrap();
        let gb = GridFunction::new(1, 3.0, 0.5, b.clone()).unwrap();
        let sum = ga.axpy(1.0, &gb).unwrap();
        let s = PairSampling { far_pairs: 50, ..PairSampling::default() };
        let c = |g: &GridFunction| holder_quotient_max(g, &g.values, alpha, &s).unwrap().value;
        let m = |g: &GridFunction| seminorm_weight(g, alpha).unwrap().value;
        prop_assert!(c(&sum) <= (c(&ga) + c(&gb)) * (1.0 + 1e-14));
        prop_assert!(m(&sum) <= (m(&ga) + m(&gb)) * (1.0 + 1e-14));
        let twice = ga.scaled(2.0);
        prop_assert_eq!(c(&twice), 2.0 * c(&ga));
        prop_assert_eq!(m(&twice), 2.0 * m(&ga));
        let k0 = |g: &GridFunction| hermite_frac::holder_spaces::norm_ck_alpha_with(g, 0, alpha, &s).unwrap().ck_norm;
        prop_assert!(k0(&sum) <= (k0(&ga) + k0(&gb)) * (1.0 + 1e-14));
    }

    #[test]
    fn more_pairs_never_lower_the_estimate(v in prop::collection::vec(-1.0f64..1.0, 41), alpha in 0.1f64..1.0) {
        let g = GridFunction::new(1, 2.0, 0.1, v).unwrap();
        let mut s = PairSampling { near_radius: 0.3, far_pairs: 100, ..PairSampling::default() };
        let small = holder_quotient_max(&g, &g.values, alpha, &s).unwrap().value;
        s.far_pairs = 200;
        let large = holder_quotient_max(&g, &g.values, alpha, &s).unwrap().value;
        s.near_radius = 0.6;
        let larger = holder_quotient_max(&g, &g.values, alpha, &s).unwrap().value;
        prop_assert!(small <= large && large <= larger);
    }

    #[test]
    fn lower_exponent_bounded_on_unit_box(v in prop::collection::vec(-1.0f64..1.0, 11), a in 0.2f64..1.0, da in 0.0f64..0.19) {
        // box [-1/2, 1/2]: diameter 1
        let g = GridFunction::new(1, 0.5, 0.1, v).unwrap();
        let s = PairSampling::default();
        let hi = holder_quotient_max(&g, &g.values, a, &s).unwrap().value;
        let lo = holder_quotient_max(&g, &g.values, a - da, &s).unwrap().value;
        prop_assert!(lo <= hi * (1.0 + 1e-14));
    }
}
