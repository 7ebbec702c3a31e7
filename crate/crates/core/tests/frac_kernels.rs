mod common;

use hermite_frac::frac_ops::{
    boundary_term_eval, kernel_eval, KernelKind, KernelSpec, QuadratureSpec,
};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn pairs() -> Vec<(Vec<f64>, Vec<f64>)> {
    vec![
        (vec![0.5], vec![-0.5]),
        (vec![0.1], vec![0.1001]),
        (vec![3.0], vec![2.5]),
        (vec![0.0], vec![5.0]),
        (vec![-2.0], vec![1.0]),
        (vec![0.3, -0.2], vec![0.1, 0.4]),
        (vec![0.3, -0.2, 1.0], vec![0.1, 0.4, 0.9]),
    ]
}

#[test]
fn kernels_match_time_domain_quadrature() {
    let mut worst = 0.0f64;
    for sigma in [0.1, 0.3, 0.5, 0.75, 0.95] {
        for (x, z) in pairs() {
            let n = x.len();
            let checks = [
                (
                    KernelKind::FracPower,
                    common::frac_power_kernel(sigma, 0.0, &x, &z),
                ),
                (
                    KernelKind::FracPowerShiftUp(2),
                    common::frac_power_kernel(sigma, 2.0, &x, &z),
                ),
                (
                    KernelKind::FracIntegral,
                    common::frac_integral_kernel(sigma, 0.0, &x, &z),
                ),
                (
                    KernelKind::FracIntegralShiftUp(1),
                    common::frac_integral_kernel(sigma, 1.0, &x, &z),
                ),
            ];
            for (kind, oracle) in checks {
                let v = kernel_eval(&KernelSpec::new(kind, sigma, n), &x, &z).unwrap();
                let e = rel(v, oracle);
                assert!(
                    e < 1e-8,
                    "{kind:?} sigma={sigma} x={x:?} z={z:?}: {v:e} vs {oracle:e}"
                );
                worst = worst.max(e);
            }
        }
    }
    println!("worst relative kernel error {worst:e}");
}

#[test]
fn boundary_functions_match_time_domain_quadrature() {
    let q = QuadratureSpec::default();
    for sigma in [0.1, 0.3, 0.5, 0.75, 0.95] {
        for x in [
            vec![0.0],
            vec![1.3],
            vec![4.0],
            vec![0.5, -1.0],
            vec![0.2, 0.0, -0.7],
        ] {
            let checks = [
                (
                    KernelKind::FracPower,
                    common::frac_power_boundary(sigma, 0.0, &x),
                ),
                (
                    KernelKind::FracPowerShiftUp(1),
                    common::frac_power_boundary(sigma, 1.0, &x),
                ),
                (
                    KernelKind::FracIntegral,
                    common::frac_integral_of_one(sigma, 0.0, &x),
                ),
            ];
            for (kind, oracle) in checks {
                let b = boundary_term_eval(kind, sigma, &x, &q).unwrap();
                assert!(
                    (b - oracle).abs() <= 1e-8 * (1.0 + oracle.abs()),
                    "{kind:?} sigma={sigma} x={x:?}: {b:e} vs {oracle:e}"
                );
            }
        }
    }
}

#[test]
fn integral_of_one_at_origin_for_sigma_one() {
    // H^{-1}1(0) = ∫_0^∞ (cosh 2t)^{-1/2} dt for n = 1.
    let oracle = common::t_integral(
        |t| {
            if t > 0.0 {
                (2.0 * t).cosh().powf(-0.5)
            } else {
                0.0
            }
        },
        1.0,
        1e-12,
    );
    let b = boundary_term_eval(
        KernelKind::FracIntegral,
        1.0,
        &[0.0],
        &QuadratureSpec::default(),
    )
    .unwrap();
    assert!((b - oracle).abs() < 1e-8, "{b} vs {oracle}");
}

#[test]
fn down_shift_kernel_matches_subtracted_time_integral() {
    let sigma = 0.4;
    for k in [1u32, 2] {
        for (x, z) in [
            (vec![0.5], vec![-0.5]),
            (vec![1.2], vec![0.3]),
            (vec![0.2, 0.1], vec![-0.4, 0.6]),
        ] {
            let v = kernel_eval(
                &KernelSpec::new(KernelKind::FracPowerShiftDown(k), sigma, x.len()),
                &x,
                &z,
            )
            .unwrap();
            let o = common::frac_power_shift_down_kernel(sigma, k as usize, &x, &z);
            assert!(rel(v, o) < 1e-7, "k={k} x={x:?} z={z:?}: {v:e} vs {o:e}");
        }
    }
}

#[test]
fn diagonal_is_rejected_for_singular_kernels() {
    let ks = KernelSpec::new(KernelKind::FracPower, 0.3, 1);
    assert!(kernel_eval(&ks, &[0.2], &[0.2]).is_err());
    let ks = KernelSpec::new(KernelKind::FracPower, 0.3, 2);
    assert!(kernel_eval(&ks, &[0.2], &[0.2, 0.1]).is_err());
}

#[test]
fn kernel_parameter_validation() {
    assert!(kernel_eval(
        &KernelSpec::new(KernelKind::FracPower, 1.0, 1),
        &[0.0],
        &[1.0]
    )
    .is_err());
    assert!(kernel_eval(
        &KernelSpec::new(KernelKind::FracPowerShiftUp(0), 0.5, 1),
        &[0.0],
        &[1.0]
    )
    .is_err());
    assert!(kernel_eval(
        &KernelSpec::new(KernelKind::FracIntegral, 1.0, 1),
        &[0.0],
        &[1.0]
    )
    .is_ok());
    let mut ks = KernelSpec::new(KernelKind::FracPower, 0.5, 1);
    ks.quad.pv_delta = 0.0;
    assert!(kernel_eval(&ks, &[0.0], &[1.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn kernel_symmetry_and_ordering(
        sigma in 0.05f64..0.95,
        x in prop::collection::vec(-4.0f64..4.0, 2),
        z in prop::collection::vec(-4.0f64..4.0, 2),
    ) {
        prop_assume!(x.iter().zip(&z).map(|(a, b)| (a - b).abs()).sum::<f64>() > 1e-3);
        let f = KernelSpec::new(KernelKind::FracPower, sigma, 2);
        let fxz = kernel_eval(&f, &x, &z).unwrap();
        let fzx = kernel_eval(&f, &z, &x).unwrap();
        prop_assert!((fxz - fzx).abs() <= 1e-12 * fxz.abs());
        for k in [1u32, 2] {
            let fk = kernel_eval(&KernelSpec::new(KernelKind::FracPowerShiftUp(k), sigma, 2), &x, &z).unwrap();
            prop_assert!(fk >= 0.0 && fk <= fxz, "0 <= F_2k <= F violated: {} {}", fk, fxz);
        }
        let fi = kernel_eval(&KernelSpec::new(KernelKind::FracIntegral, sigma, 2), &x, &z).unwrap();
        prop_assert!(fi >= -1e-14);
    }

    #[test]
    fn integral_kernel_nonnegative_n1_n3(
        sigma in 0.05f64..1.0,
        x in prop::collection::vec(-5.0f64..5.0, 3),
        z in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        let f3 = kernel_eval(&KernelSpec::new(KernelKind::FracIntegral, sigma, 3), &x, &z).unwrap();
        prop_assert!(f3 >= -1e-14);
        prop_assume!((x[0] - z[0]).abs() > 1e-6);
        let f1 = kernel_eval(&KernelSpec::new(KernelKind::FracIntegral, sigma, 1), &x[..1], &z[..1]).unwrap();
        prop_assert!(f1 >= -1e-14);
    }
}
