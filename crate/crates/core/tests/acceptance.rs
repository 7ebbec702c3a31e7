//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints its own pass/fail line; exits non-zero if any fails.

mod common;

use std::sync::Arc;
use std::time::Instant;

use hermite_frac::derivatives_riesz::{ladder_apply, LadderIndex};
use hermite_frac::estimate_lab::{
    factored_power, lemma_campaign, schauder_sweep, CampaignConfig, FamilySpec, SchauderCase,
    SchauderOptions, LEMMA_IDS,
};
use hermite_frac::frac_ops::{
    frac_pointwise, fracint_pointwise, multiplier_apply, project_Sk, pv_shell_contribution,
    KernelKind, KernelSpec, MultiplierSpec, QuadratureSpec,
};
use hermite_frac::functions::{
    Bump, Combination, Gaussian, HermiteFunction, ModulatedGaussian, PowerCusp, SpectralFunction,
    TestFunction, TouchingWeight,
};
use hermite_frac::heat_semigroup::{heat_apply, heat_kernel, heat_kernel_s, heat_of_one, mehler};
use hermite_frac::hermite_basis::{
    expand, hermite_eval_1d, quadrature_rule, synthesize, MultiIndex, SpectralCoeffs,
};
use hermite_frac::quadrature::{integrate, uniform_breaks};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn grid_1d(l: f64, h: f64) -> Vec<f64> {
    let m = (2.0 * l / h).round() as usize;
    (0..=m).map(|i| -l + i as f64 * h).collect()
}

fn grid_points(n: usize, l: f64, h: f64) -> Vec<Vec<f64>> {
    let axis = grid_1d(l, h);
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out
}

/// Hermite functions, Gaussians and modulated Gaussians.
fn schwartz_suite(n: usize) -> Vec<Box<dyn TestFunction>> {
    let at = |v: f64| vec![v; n];
    let mut k1 = vec![0; n];
    k1[0] = 1;
    let mut k4 = vec![0; n];
    k4[n - 1] = if n == 1 { 4 } else { 2 };
    let mut f1 = vec![0.0; n];
    f1[0] = 1.3;
    vec![
        Box::new(HermiteFunction::new(k1)),
        Box::new(HermiteFunction::new(k4)),
        Box::new(Gaussian::new(at(0.3), 0.7)),
        Box::new(Gaussian::new(at(-0.5), 1.2)),
        Box::new(ModulatedGaussian {
            center: at(-0.2),
            width: 1.0,
            frequency: f1,
        }),
        Box::new(ModulatedGaussian {
            center: at(0.4),
            width: 0.8,
            frequency: vec![2.0 / (n as f64).sqrt(); n],
        }),
    ]
}

fn coefficients(u: &dyn TestFunction, degree: u32, nodes: usize) -> SpectralCoeffs {
    let rule = quadrature_rule(nodes).unwrap();
    expand(&|x: &[f64]| u.value(x), u.dim(), degree, &rule)
}

fn eigenfunction_exactness() -> Outcome {
    let q = QuadratureSpec::default();
    let xs = grid_1d(3.0, 0.25);
    let mut worst = 0.0f64;
    for sigma in [0.25, 0.5, 0.75] {
        for nu in 0..=6u32 {
            let u = HermiteFunction::new(vec![nu]);
            let lam = (2.0 * nu as f64 + 1.0).powf(sigma);
            for &x in &xs {
                let v = frac_pointwise(&u, sigma, &[x], &q).unwrap();
                worst = worst.max((v - lam * hermite_eval_1d(nu as usize, x)).abs());
            }
        }
    }
    outcome(
        worst <= 1e-5,
        format!("max abs error {worst:.3e} (tol 1e-5)"),
    )
}

fn pathway_agreement() -> Outcome {
    let q = QuadratureSpec::default();
    let mut worst = [0.0f64; 2];
    for (slot, (n, h, degree, nodes)) in [(1, 0.25, 96, 200), (2, 1.0, 60, 120)]
        .into_iter()
        .enumerate()
    {
        let points = grid_points(n, 3.0, h);
        for u in schwartz_suite(n) {
            let c = coefficients(u.as_ref(), degree, nodes);
            for sigma in [0.25, 0.5, 0.75] {
                let s = multiplier_apply(MultiplierSpec::power(sigma), &c).unwrap();
                for x in &points {
                    let p = frac_pointwise(u.as_ref(), sigma, x, &q).unwrap();
                    worst[slot] = worst[slot].max((p - synthesize(&s, x).unwrap()).abs());
                }
            }
        }
    }
    outcome(
        worst[0] <= 1e-5 && worst[1] <= 1e-4,
        format!(
            "n=1 max diff {:.3e} (tol 1e-5), n=2 max diff {:.3e} (tol 1e-4)",
            worst[0], worst[1]
        ),
    )
}

/// H^σ u is sampled pointwise at Gauss–Hermite nodes, expanded, and the
/// expansion handed to the pointwise fractional integral.
fn inverse_law() -> Outcome {
    let q = QuadratureSpec::default();
    let rule = quadrature_rule(80).unwrap();
    let xs = grid_1d(3.0, 0.5);
    let mut worst = 0.0f64;
    let mut worst_spec = 0.0f64;
    for u in schwartz_suite(1) {
        let c = coefficients(u.as_ref(), 96, 200);
        for sigma in [0.3, 0.5] {
            let up = multiplier_apply(MultiplierSpec::power(sigma), &c).unwrap();
            let back = multiplier_apply(MultiplierSpec::power(-sigma), &up).unwrap();
            worst_spec = worst_spec.max(back.max_abs_diff(&c));

            let forward = |x: &[f64]| frac_pointwise(u.as_ref(), sigma, x, &q).unwrap();
            let v = SpectralFunction {
                coeffs: expand(&forward, 1, 70, &rule),
            };
            for &x in &xs {
                let w = fracint_pointwise(&v, sigma, &[x], &q).unwrap();
                worst = worst.max((w - u.value(&[x])).abs());
            }
        }
    }
    outcome(
        worst <= 1e-5 && worst_spec <= 1e-12,
        format!(
            "pointwise round trip {worst:.3e} (tol 1e-5), multipliers {worst_spec:.3e} (tol 1e-12)"
        ),
    )
}

fn line_integral(f: impl Fn(f64) -> f64) -> f64 {
    let breaks = uniform_breaks(-14.0, 14.0, 0.25);
    integrate(f, -14.0, 14.0, &breaks, common::opts(1e-13))
        .unwrap()
        .value
}

fn semigroup_battery() -> Outcome {
    let mut ck = 0.0f64;
    let mut eig = 0.0f64;
    let mut cross = 0.0f64;
    let pairs = [(-0.7, 0.4), (0.0, 1.1), (1.5, -0.3)];
    for (t, s) in [(0.1, 0.3), (0.5, 0.25), (1.0, 2.0)] {
        for &(x, z) in &pairs {
            let lhs = line_integral(|y| {
                heat_kernel(t, &[x], &[y]).unwrap() * heat_kernel(s, &[y], &[z]).unwrap()
            });
            ck = ck.max((lhs - heat_kernel(t + s, &[x], &[z]).unwrap()).abs());
        }
    }
    for t in [0.05, 0.3, 1.2] {
        for nu in 0..=5usize {
            for x in [-1.7, 0.2, 2.4] {
                let lhs =
                    line_integral(|y| heat_kernel(t, &[x], &[y]).unwrap() * hermite_eval_1d(nu, y));
                let want = (-t * (2 * nu + 1) as f64).exp() * hermite_eval_1d(nu, x);
                eig = eig.max((lhs - want).abs());
            }
        }
    }
    // Normalization of the kernel: its mass, the s-form and the Mehler form.
    for t in [0.02, 0.4, 3.0] {
        for x in [-2.0, 0.0, 0.9] {
            let mass = line_integral(|y| heat_kernel(t, &[x], &[y]).unwrap());
            cross = cross.max((mass - heat_of_one(t, &[x]).unwrap()).abs());
            let z = [0.35];
            let g = heat_kernel(t, &[x], &z).unwrap();
            cross = cross.max((g - heat_kernel_s(t.tanh(), &[x], &z).unwrap()).abs());
            cross = cross.max((g - (-t).exp() * mehler((-2.0 * t).exp(), &[x], &z).unwrap()).abs());
        }
    }
    let u = Gaussian::new(vec![0.2], 0.8);
    let c = coefficients(&u, 80, 160);
    let g =
        hermite_frac::grid::GridFunction::from_fn(1, 8.0, 0.02, &|x: &[f64]| u.value(x)).unwrap();
    let gt = heat_apply(0.3, &g).unwrap();
    let ct = heat_apply(0.3, &c).unwrap();
    for i in (0..gt.len()).step_by(7) {
        let x = gt.point(i);
        if x[0].abs() <= 3.0 {
            cross = cross.max((gt.values[i] - synthesize(&ct, &x).unwrap()).abs());
        }
    }
    let mut small_t = 0.0f64;
    for x in grid_points(2, 3.0, 0.5) {
        small_t = small_t.max((heat_of_one(1e-6, &x).unwrap() - 1.0).abs());
    }
    let ok = ck <= 1e-8 && eig <= 1e-8 && small_t <= 1e-4 && cross <= 1e-8;
    outcome(
        ok,
        format!(
            "Chapman-Kolmogorov {ck:.2e}, eigen-relation {eig:.2e}, e^(-tH)1 at t=1e-6 {small_t:.2e}, cross-checks {cross:.2e}"
        ),
    )
}

fn meda_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_241_016);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let n = 1 + i % 3;
        let sigma = rng.gen_range(0.05..0.95);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let k = KernelSpec::new(KernelKind::FracPower, sigma, n)
            .integrator()
            .unwrap();
        let graded = k.value(&x, &z).unwrap();
        let direct = common::frac_power_kernel(sigma, 0.0, &x, &z);
        worst = worst.max(((graded - direct) / direct).abs());
    }
    outcome(
        worst <= 1e-7,
        format!("max relative difference {worst:.3e} over 50 points (tol 1e-7)"),
    )
}

fn pv_scaling() -> Outcome {
    let q = QuadratureSpec::default();
    let deltas: Vec<f64> = (0..6).map(|j| 0.04 * 0.5f64.powi(j)).collect();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (alpha, sigma) in [
        (1.0, 0.25),
        (1.0, 0.75),
        (0.5, 0.3),
        (0.5, 0.6),
        (0.8, 0.45),
        (0.3, 0.4),
    ] {
        let u = PowerCusp {
            center: vec![0.1],
            alpha,
            width: 1.0,
        };
        let pts: Vec<(f64, f64)> = deltas
            .iter()
            .map(|&d| {
                (
                    d.ln(),
                    pv_shell_contribution(&u, sigma, &[0.1], d, &q)
                        .unwrap()
                        .abs()
                        .ln(),
                )
            })
            .collect();
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / m, sy / m);
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        let want = alpha - 2.0 * sigma + 1.0;
        worst = worst.max((slope - want).abs());
        parts.push(format!("({alpha},{sigma}): {slope:.3} vs {want:.3}"));
    }
    outcome(
        worst <= 0.1,
        format!(
            "max slope deviation {worst:.3} (tol 0.1); {}",
            parts.join(", ")
        ),
    )
}

fn lemma_campaigns() -> Outcome {
    let cfg = CampaignConfig {
        samples: 10_000,
        ..CampaignConfig::default()
    };
    let mut total = 0;
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for id in LEMMA_IDS {
        for r in lemma_campaign(id, &cfg).unwrap() {
            total += 1;
            if let Some(s) = r.stability_ratio {
                worst = worst.max(s);
            }
            if !(r.c_star.is_finite() && r.stability_ratio.is_some_and(|s| s <= 1.10)) {
                bad.push(format!("{} {}", r.lemma, r.name));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{total} bound forms, worst stability ratio {worst:.4} (tol 1.10); failing: {bad:?}"
        ),
    )
}

fn schauder_sweeps() -> Outcome {
    let family = FamilySpec::default();
    let opts = SchauderOptions::default();
    let mut total = 0;
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for case in SchauderCase::ALL {
        for r in schauder_sweep(case, &family, &opts).unwrap() {
            total += 1;
            worst = worst.max(r.growth);
            if !(r.ratio.is_finite() && r.growth <= 1.15) {
                bad.push(format!("{} ({}, {})", r.case, r.alpha, r.sigma));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{total} points, worst family-doubling growth {worst:.4} (tol 1.15); failing: {bad:?}"
        ),
    )
}

fn random_coeffs(rng: &mut ChaCha8Rng, n: usize, degree: u32) -> SpectralCoeffs {
    let mut c = SpectralCoeffs::zeros(n, degree);
    for nu in MultiIndex::all_up_to(n, degree) {
        c.set(nu, rng.gen_range(-1.0..1.0)).unwrap();
    }
    c
}

fn algebraic_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let a = |i: i32, v: &SpectralCoeffs| ladder_apply(LadderIndex(i), v).unwrap();
    let pow = |s: f64, shift: i32, v: &SpectralCoeffs| {
        multiplier_apply(MultiplierSpec { sigma: s, shift }, v).unwrap()
    };
    for n in 1..=3usize {
        for _ in 0..10 {
            let c = random_coeffs(&mut rng, n, 6);
            let d = random_coeffs(&mut rng, n, 7);
            let h = pow(1.0, 0, &c);
            let mut acc = SpectralCoeffs::zeros(n, 7);
            for i in 1..=n as i32 {
                acc = acc.axpy(0.5, &a(i, &a(-i, &c))).unwrap();
                acc = acc.axpy(0.5, &a(-i, &a(i, &c))).unwrap();
                // [A_i, A_{-i}] = 2
                let comm = a(i, &a(-i, &c)).axpy(-1.0, &a(-i, &a(i, &c))).unwrap();
                worst = worst.max(comm.max_abs_diff(&c.scaled(2.0)));
                // ⟨A_i c, d⟩ = ⟨c, A_{-i} d⟩
                worst = worst.max((a(i, &c).dot(&d).unwrap() - c.dot(&a(-i, &d)).unwrap()).abs());
                let c1 = project_Sk(&c, 1);
                for b in [-1.0, -0.5, 0.3, 0.5, 1.0] {
                    worst = worst.max(a(i, &pow(b, 0, &c)).max_abs_diff(&pow(b, 2, &a(i, &c))));
                    worst = worst.max(a(-i, &pow(b, 0, &c)).max_abs_diff(&pow(b, -2, &a(-i, &c))));
                    worst = worst.max(pow(b, 0, &a(i, &c)).max_abs_diff(&a(i, &pow(b, -2, &c1))));
                    worst = worst.max(pow(b, 0, &a(-i, &c)).max_abs_diff(&a(-i, &pow(b, 2, &c))));
                }
            }
            worst = worst.max(acc.max_abs_diff(&h));
            for k in 0..=4 {
                let p = project_Sk(&c, k);
                worst = worst.max(project_Sk(&p, k).max_abs_diff(&p));
            }
            for sigma in [0.25, 0.5, 0.75, 1.0] {
                let f = factored_power(sigma, &c).unwrap();
                worst = worst.max(f.max_abs_diff(&pow(sigma, 0, &c)));
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max coefficient discrepancy {worst:.3e} (tol 1e-12)"),
    )
}

fn comparison_principle() -> Outcome {
    let q = QuadratureSpec::default();
    let mut suite: Vec<Arc<dyn TestFunction>> =
        schwartz_suite(1).into_iter().map(Arc::from).collect();
    suite.truncate(4);
    suite.push(Arc::new(Bump {
        center: vec![0.1],
        width: 1.5,
    }));
    let anchors = [-0.8, 0.0, 0.5, 1.3];
    let sigmas = [0.25, 0.5, 0.75, 0.4];
    let mut worst = f64::NEG_INFINITY;
    let mut pairs = 0;
    for u in &suite {
        for (j, &x0) in anchors.iter().enumerate() {
            let sigma = sigmas[j];
            let v = Combination {
                terms: vec![
                    (1.0, u.clone()),
                    (
                        -0.3,
                        Arc::new(TouchingWeight {
                            anchor: vec![x0],
                            width: 1.0,
                        }),
                    ),
                ],
            };
            let hu = frac_pointwise(u.as_ref(), sigma, &[x0], &q).unwrap();
            let hv = frac_pointwise(&v, sigma, &[x0], &q).unwrap();
            worst = worst.max(hu - hv);
            pairs += 1;
        }
    }
    outcome(
        worst <= 1e-8,
        format!("{pairs} pairs, max of H^s u(x0) - H^s v(x0) = {worst:.3e} (must be <= 1e-8)"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("eigenfunction exactness", eigenfunction_exactness),
        ("pathway agreement", pathway_agreement),
        ("inverse law", inverse_law),
        ("semigroup battery", semigroup_battery),
        ("t/s parametrization consistency", meda_consistency),
        ("principal-value shell scaling", pv_scaling),
        ("lemma bound campaigns", lemma_campaigns),
        ("Schauder sweep", schauder_sweeps),
        ("algebraic exactness", algebraic_exactness),
        ("comparison principle", comparison_principle),
    ];
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let o = run();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {verdict} {name}: {} [{:.1} s]",
            o.detail,
            t0.elapsed().as_secs_f64()
        );
        if !o.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
