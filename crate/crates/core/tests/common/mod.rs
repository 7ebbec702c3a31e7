//! Independent oracles shared by the integration tests: direct t-domain
//! quadrature of the subordination integrals, brute-force Hermite sums.
#![allow(dead_code)]

use hermite_frac::heat_semigroup::{heat_kernel, heat_of_one};
use hermite_frac::quadrature::{integrate, integrate_to_infinity, AdaptiveOptions};
use statrs::function::gamma::gamma;

pub fn opts(tol: f64) -> AdaptiveOptions {
    AdaptiveOptions {
        abs_tol: tol,
        rel_tol: tol,
        max_intervals: 20_000,
    }
}

/// ∫_0^∞ f(t) dt with break points spread over the scales that matter.
pub fn t_integral(f: impl Fn(f64) -> f64, scale: f64, tol: f64) -> f64 {
    let scale = scale.max(1e-12);
    let mut breaks = Vec::new();
    let mut b = scale * 1e-3;
    while b < 1.0 {
        breaks.push(b);
        b *= 4.0;
    }
    breaks.push(1.0);
    let head = integrate(&f, 0.0, 1.0, &breaks, opts(tol)).expect("head converges");
    let tail = integrate_to_infinity(&f, 1.0, opts(tol)).expect("tail converges");
    head.value + tail.value
}

/// F_σ(x, z) = (1/(-Γ(-σ))) ∫ G_t t^{-1-σ} dt, optionally with the factor e^{-2kt}.
pub fn frac_power_kernel(sigma: f64, k: f64, x: &[f64], z: &[f64]) -> f64 {
    let b: f64 = x.iter().zip(z).map(|(a, c)| (a - c) * (a - c)).sum();
    let norm = sigma / gamma(1.0 - sigma);
    norm * t_integral(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            (-2.0 * k * t).exp() * heat_kernel(t, x, z).unwrap() * t.powf(-1.0 - sigma)
        },
        b / 4.0,
        1e-12,
    )
}

/// F_{-σ}(x, z) = (1/Γ(σ)) ∫ G_t t^{σ-1} dt, optionally with e^{-2kt}.
pub fn frac_integral_kernel(sigma: f64, k: f64, x: &[f64], z: &[f64]) -> f64 {
    let b: f64 = x.iter().zip(z).map(|(a, c)| (a - c) * (a - c)).sum();
    t_integral(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            (-2.0 * k * t).exp() * heat_kernel(t, x, z).unwrap() * t.powf(sigma - 1.0)
        },
        b / 4.0,
        1e-12,
    ) / gamma(sigma)
}

/// B_σ(x) with shift factor e^{-2kt}: (1/Γ(-σ)) ∫ [e^{-2kt} e^{-tH}1 - 1] t^{-1-σ} dt.
pub fn frac_power_boundary(sigma: f64, k: f64, x: &[f64]) -> f64 {
    let norm = -sigma / gamma(1.0 - sigma);
    let f = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        // e^{-2kt}(cosh 2t)^{-n/2} e^{-tanh(2t)|x|²/2} - 1 without cancellation at small t.
        let n = x.len() as f64;
        let x2: f64 = x.iter().map(|a| a * a).sum();
        let sh = t.sinh();
        let log_v = -2.0 * k * t - 0.5 * n * (2.0 * sh * sh).ln_1p() - 0.5 * (2.0 * t).tanh() * x2;
        log_v.exp_m1() * t.powf(-1.0 - sigma)
    };
    // The integrand behaves like t^{-σ} at 0 (integrable singularity): split and substitute t = u^{1/(1-σ)}.
    let p = 1.0 / (1.0 - sigma);
    let head = integrate(
        |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let t = u.powf(p);
            f(t) * p * u.powf(p - 1.0)
        },
        0.0,
        1.0,
        &[0.01, 0.1, 0.5],
        opts(1e-11),
    )
    .unwrap()
    .value;
    // ∫_1^∞ (v - 1) t^{-1-σ} = ∫_1^∞ v t^{-1-σ} - 1/σ
    let tail = integrate_to_infinity(
        |t| (-2.0 * k * t).exp() * heat_of_one(t, x).unwrap() * t.powf(-1.0 - sigma),
        1.0,
        opts(1e-11),
    )
    .unwrap()
    .value;
    norm * (head + tail - 1.0 / sigma)
}

/// (H + 2k)^{-σ}1(x) = (1/Γ(σ)) ∫ e^{-2kt} e^{-tH}1(x) t^{σ-1} dt.
pub fn frac_integral_of_one(sigma: f64, k: f64, x: &[f64]) -> f64 {
    let p = 1.0 / sigma;
    let head = integrate(
        |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let t = u.powf(p);
            (-2.0 * k * t).exp() * heat_of_one(t, x).unwrap() * p
        },
        0.0,
        1.0,
        &[0.1, 0.5],
        opts(1e-11),
    )
    .unwrap()
    .value;
    let tail = integrate_to_infinity(
        |t| (-2.0 * k * t).exp() * heat_of_one(t, x).unwrap() * t.powf(sigma - 1.0),
        1.0,
        opts(1e-11),
    )
    .unwrap()
    .value;
    (head + tail) / gamma(sigma)
}

/// Physicists' Hermite polynomial H_k by the integer recurrence (exact for small k).
pub fn hermite_poly(k: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, 2.0 * x);
    if k == 0 {
        return a;
    }
    for j in 1..k {
        let c = 2.0 * x * b - 2.0 * j as f64 * a;
        a = b;
        b = c;
    }
    b
}

/// h_k(x) = H_k(x) e^{-x²/2} / sqrt(2^k k! √π), the textbook closed form.
pub fn hermite_closed(k: usize, x: f64) -> f64 {
    let mut norm = std::f64::consts::PI.sqrt();
    for j in 1..=k {
        norm *= 2.0 * j as f64;
    }
    hermite_poly(k, x) * (-0.5 * x * x).exp() / norm.sqrt()
}

/// Σ_{|ν| = j} h_ν(x) h_ν(z) by brute-force enumeration with the closed-form h_k.
pub fn shell_sum(j: usize, x: &[f64], z: &[f64]) -> f64 {
    fn rec(j: usize, x: &[f64], z: &[f64]) -> f64 {
        if x.len() == 1 {
            return hermite_closed(j, x[0]) * hermite_closed(j, z[0]);
        }
        (0..=j)
            .map(|a| {
                hermite_closed(a, x[0]) * hermite_closed(a, z[0]) * rec(j - a, &x[1..], &z[1..])
            })
            .sum()
    }
    rec(j, x, z)
}

/// F_{-2k,σ} as a t-integral of e^{2kt}[G_t - φ_{2k}]; the bracket is the
/// spectral tail Σ_{j ≥ k} e^{-2t(j + n/2)} (shell sums) once t > 3.
pub fn frac_power_shift_down_kernel(sigma: f64, k: usize, x: &[f64], z: &[f64]) -> f64 {
    let n = x.len() as f64;
    let t_half = 0.5 * 3f64.ln();
    let sums: Vec<f64> = (0..80).map(|j| shell_sum(j, x, z)).collect();
    let bracket = |t: f64| -> f64 {
        if t <= 3.0 {
            let mut g = heat_kernel(t, x, z).unwrap();
            if t > t_half {
                for (j, s) in sums.iter().enumerate().take(k) {
                    g -= (-2.0 * t * (j as f64 + n / 2.0)).exp() * s;
                }
            }
            g
        } else {
            sums.iter()
                .enumerate()
                .skip(k)
                .map(|(j, s)| (-2.0 * t * (j as f64 + n / 2.0)).exp() * s)
                .sum()
        }
    };
    let f = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        (2.0 * k as f64 * t).exp() * bracket(t) * t.powf(-1.0 - sigma)
    };
    let b: f64 = x.iter().zip(z).map(|(a, c)| (a - c) * (a - c)).sum();
    let mut breaks: Vec<f64> = Vec::new();
    let mut p = (b / 4.0).max(1e-12) * 1e-3;
    while p < t_half {
        breaks.push(p);
        p *= 4.0;
    }
    breaks.extend([t_half, 1.0, 2.0]);
    let head = integrate(f, 0.0, 3.0, &breaks, opts(1e-12)).unwrap().value;
    let tail = integrate_to_infinity(f, 3.0, opts(1e-12)).unwrap().value;
    sigma / gamma(1.0 - sigma) * (head + tail)
}

/// ∂_{x_a} log G_t(x, z) = -[(x_a - z_a) coth 2t + z_a tanh t].
fn log_grad(t: f64, x: &[f64], z: &[f64], a: usize) -> f64 {
    -((x[a] - z[a]) / (2.0 * t).tanh() + z[a] * t.tanh())
}

/// (G, ∂_a G, ∂_b G, ∂_a∂_b G) of the heat kernel in x.
fn heat_jet(t: f64, x: &[f64], z: &[f64], a: usize, b: usize) -> [f64; 4] {
    let g = heat_kernel(t, x, z).unwrap();
    let (ga, gb) = (log_grad(t, x, z, a), log_grad(t, x, z, b));
    let diag = if a == b { 1.0 / (2.0 * t).tanh() } else { 0.0 };
    [g, ga * g, gb * g, (ga * gb - diag) * g]
}

/// t-domain integral of the heat-kernel jet against e^{-2kt} t^{σ-1}/Γ(σ).
fn integral_jet(sigma: f64, k: f64, x: &[f64], z: &[f64], a: usize, b: usize) -> [f64; 4] {
    let d2: f64 = x.iter().zip(z).map(|(p, q)| (p - q) * (p - q)).sum();
    let mut out = [0.0; 4];
    for (c, o) in out.iter_mut().enumerate() {
        *o = t_integral(
            |t| {
                if t <= 0.0 {
                    return 0.0;
                }
                (-2.0 * k * t).exp() * heat_jet(t, x, z, a, b)[c] * t.powf(sigma - 1.0)
            },
            d2 / 4.0,
            1e-12,
        ) / gamma(sigma);
    }
    out
}

/// A_i (H + 2k)^{-σ} kernel: (ε ∂_a + x_a) F.
pub fn ladder_integral_kernel(i: i32, sigma: f64, k: f64, x: &[f64], z: &[f64]) -> f64 {
    let a = i.unsigned_abs() as usize - 1;
    let e = i.signum() as f64;
    let j = integral_jet(sigma, k, x, z, a, a);
    e * j[1] + x[a] * j[0]
}

/// A_i A_j F_{-1} via the expanded form ε_iε_j∂²F + ε_i x_b ∂_aF + ε_j x_a ∂_bF + x_a x_b F + ε_i δ_ab F.
pub fn second_order_kernel(i: i32, j: i32, x: &[f64], z: &[f64]) -> f64 {
    let (a, b) = (i.unsigned_abs() as usize - 1, j.unsigned_abs() as usize - 1);
    let (ei, ej) = (i.signum() as f64, j.signum() as f64);
    let [f, fa, fb, fab] = integral_jet(1.0, 0.0, x, z, a, b);
    let mut v = ei * ej * fab + ei * x[b] * fa + ej * x[a] * fb + x[a] * x[b] * f;
    if a == b {
        v += ei * f;
    }
    v
}
