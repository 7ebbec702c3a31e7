//! Evaluable test functions with the regularity data the pointwise operators need.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::hermite_basis::{
    eval_multi, hermite_all_with_derivative, synthesize_jet, MultiIndex, SpectralCoeffs,
};

/// Hölder class a test function is certified to belong to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Regularity {
    /// C^∞ (in particular C^{1,1}); second derivatives available.
    Smooth,
    /// C^{1,α} with the given α ∈ (0, 1].
    C1Alpha(f64),
    /// C^{0,α} with the given α ∈ (0, 1].
    C0Alpha(f64),
}

impl Regularity {
    /// Total smoothness order: 2 for smooth data, 1 + α or α otherwise.
    pub fn order(&self) -> f64 {
        match *self {
            Regularity::Smooth => 2.0,
            Regularity::C1Alpha(a) => 1.0 + a,
            Regularity::C0Alpha(a) => a,
        }
    }

    /// Regularity after one derivative.
    pub fn differentiated(&self) -> Regularity {
        match *self {
            Regularity::Smooth => Regularity::Smooth,
            Regularity::C1Alpha(a) => Regularity::C0Alpha(a),
            Regularity::C0Alpha(a) => Regularity::C0Alpha(a),
        }
    }
}

/// Step used by the finite-difference fallbacks.
pub const FD_STEP: f64 = 1e-4;

pub trait TestFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Analytic gradient, if known.
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Laplacian; central second differences unless overridden.
    fn laplacian(&self, x: &[f64]) -> f64 {
        let h = FD_STEP;
        let mut p = x.to_vec();
        let u0 = self.value(x);
        let mut acc = 0.0;
        for a in 0..x.len() {
            p[a] = x[a] + h;
            let up = self.value(&p);
            p[a] = x[a] - h;
            let um = self.value(&p);
            p[a] = x[a];
            acc += up - 2.0 * u0 + um;
        }
        acc / (h * h)
    }

    fn regularity(&self) -> Regularity {
        Regularity::Smooth
    }

    fn label(&self) -> String;
}

/// Central-difference partial derivative along `axis` with step `h`.
pub fn central_difference<F: TestFunction + ?Sized>(u: &F, x: &[f64], axis: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    p[axis] = x[axis] + h;
    let up = u.value(&p);
    p[axis] = x[axis] - h;
    let um = u.value(&p);
    (up - um) / (2.0 * h)
}

/// Hermite function h_ν.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteFunction {
    pub nu: MultiIndex,
}

impl HermiteFunction {
    pub fn new(components: Vec<u32>) -> Self {
        HermiteFunction {
            nu: MultiIndex::new(components),
        }
    }

    fn per_axis(&self, x: &[f64]) -> Vec<(f64, f64, f64)> {
        self.nu
            .components()
            .iter()
            .zip(x)
            .map(|(&k, &xi)| {
                let k = k as usize;
                let mut v = vec![0.0; k + 1];
                let mut d = vec![0.0; k + 1];
                hermite_all_with_derivative(k, xi, &mut v, &mut d);
                // h_k'' = (x² - 2k - 1) h_k
                (v[k], d[k], (xi * xi - 2.0 * k as f64 - 1.0) * v[k])
            })
            .collect()
    }
}

impl TestFunction for HermiteFunction {
    fn dim(&self) -> usize {
        self.nu.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        eval_multi(&self.nu, x).expect("dimension checked by caller")
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let t = self.per_axis(x);
        Some(
            (0..x.len())
                .map(|a| {
                    t.iter()
                        .enumerate()
                        .map(|(b, f)| if a == b { f.1 } else { f.0 })
                        .product()
                })
                .collect(),
        )
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let v = self.value(x);
        let x2: f64 = x.iter().map(|a| a * a).sum();
        // Δh_ν = (|x|² - (2|ν| + n)) h_ν
        (x2 - self.nu.eigenvalue()) * v
    }

    fn label(&self) -> String {
        format!("hermite{}", self.nu)
    }
}

/// A·exp(-|x - c|²/(2w²)).
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
}

impl Gaussian {
    pub fn new(center: Vec<f64>, width: f64) -> Self {
        Gaussian {
            center,
            width,
            amplitude: 1.0,
        }
    }
}

impl TestFunction for Gaussian {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        self.amplitude * (-0.5 * d2 / (self.width * self.width)).exp()
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let v = self.value(x);
        let w2 = self.width * self.width;
        Some(
            x.iter()
                .zip(&self.center)
                .map(|(a, c)| -(a - c) / w2 * v)
                .collect(),
        )
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let v = self.value(x);
        let w2 = self.width * self.width;
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        v * (d2 / (w2 * w2) - x.len() as f64 / w2)
    }

    fn label(&self) -> String {
        format!("gauss:{:?},{}", self.center, self.width)
    }
}

/// exp(-|x - c|²/(2w²))·cos(k·x).
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatedGaussian {
    pub center: Vec<f64>,
    pub width: f64,
    pub frequency: Vec<f64>,
}

impl TestFunction for ModulatedGaussian {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        let phase: f64 = x.iter().zip(&self.frequency).map(|(a, k)| a * k).sum();
        (-0.5 * d2 / (self.width * self.width)).exp() * phase.cos()
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        let phase: f64 = x.iter().zip(&self.frequency).map(|(a, k)| a * k).sum();
        let g = (-0.5 * d2 / (self.width * self.width)).exp();
        let w2 = self.width * self.width;
        Some(
            (0..x.len())
                .map(|a| {
                    g * (-(x[a] - self.center[a]) / w2 * phase.cos()
                        - self.frequency[a] * phase.sin())
                })
                .collect(),
        )
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        let phase: f64 = x.iter().zip(&self.frequency).map(|(a, k)| a * k).sum();
        let g = (-0.5 * d2 / (self.width * self.width)).exp();
        let w2 = self.width * self.width;
        let k2: f64 = self.frequency.iter().map(|k| k * k).sum();
        let dk: f64 = x
            .iter()
            .zip(&self.center)
            .zip(&self.frequency)
            .map(|((a, c), k)| (a - c) * k)
            .sum();
        let lap_g = g * (d2 / (w2 * w2) - x.len() as f64 / w2);
        // Δ(g cos) = Δg cos - 2 ∇g·k sin - g|k|² cos, with ∇g = -g (x-c)/w².
        lap_g * phase.cos() + 2.0 * g * dk / w2 * phase.sin() - g * k2 * phase.cos()
    }

    fn label(&self) -> String {
        format!(
            "cosgauss:{:?},{},{:?}",
            self.center, self.width, self.frequency
        )
    }
}

/// Smooth compactly supported bump exp(1 - 1/(1 - |x - c|²/w²)), equal to 1 at c.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub width: f64,
}

impl TestFunction for Bump {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        let q = d2 / (self.width * self.width);
        if q >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - q)).exp()
        }
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        let w2 = self.width * self.width;
        let q = d2 / w2;
        if q >= 1.0 {
            return Some(vec![0.0; x.len()]);
        }
        let v = (1.0 - 1.0 / (1.0 - q)).exp();
        let dq = -v / ((1.0 - q) * (1.0 - q));
        Some(
            x.iter()
                .zip(&self.center)
                .map(|(a, c)| dq * 2.0 * (a - c) / w2)
                .collect(),
        )
    }

    fn label(&self) -> String {
        format!("bump:{:?},{}", self.center, self.width)
    }
}

/// Constant function c (not decaying; used to probe boundary terms).
#[derive(Debug, Clone, PartialEq)]
pub struct Constant {
    pub n: usize,
    pub c: f64,
}

impl TestFunction for Constant {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, _x: &[f64]) -> f64 {
        self.c
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; x.len()])
    }

    fn laplacian(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn label(&self) -> String {
        format!("const:{}", self.c)
    }
}

/// |x - c|^{1+α}·exp(-|x - c|²/(2w²)): C^{1,α} exactly, with the
/// non-smooth point at c.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCusp {
    pub center: Vec<f64>,
    pub alpha: f64,
    pub width: f64,
}

impl TestFunction for PowerCusp {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        d2.powf(0.5 * (1.0 + self.alpha)) * (-0.5 * d2 / (self.width * self.width)).exp()
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        if d2 == 0.0 {
            return Some(vec![0.0; x.len()]);
        }
        let w2 = self.width * self.width;
        let p = 0.5 * (1.0 + self.alpha);
        let g = (-0.5 * d2 / w2).exp();
        // d/dx_a [d2^p g] = (2p d2^{p-1} - d2^p / w²) (x_a - c_a) g
        let f = (2.0 * p * d2.powf(p - 1.0) - d2.powf(p) / w2) * g;
        Some(
            x.iter()
                .zip(&self.center)
                .map(|(a, c)| f * (a - c))
                .collect(),
        )
    }

    fn regularity(&self) -> Regularity {
        if self.alpha >= 1.0 {
            Regularity::Smooth
        } else {
            Regularity::C1Alpha(self.alpha)
        }
    }

    fn label(&self) -> String {
        format!("cusp:{:?},{},{}", self.center, self.alpha, self.width)
    }
}

/// |x - x₀|²·exp(-|x - x₀|²/(2w²)): nonnegative, vanishing only at x₀.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchingWeight {
    pub anchor: Vec<f64>,
    pub width: f64,
}

impl TestFunction for TouchingWeight {
    fn dim(&self) -> usize {
        self.anchor.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d2: f64 = x
            .iter()
            .zip(&self.anchor)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        d2 * (-0.5 * d2 / (self.width * self.width)).exp()
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d2: f64 = x
            .iter()
            .zip(&self.anchor)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        let w2 = self.width * self.width;
        let g = (-0.5 * d2 / w2).exp();
        Some(
            x.iter()
                .zip(&self.anchor)
                .map(|(a, c)| (2.0 - d2 / w2) * (a - c) * g)
                .collect(),
        )
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let d2: f64 = x
            .iter()
            .zip(&self.anchor)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        let w2 = self.width * self.width;
        let n = x.len() as f64;
        let g = (-0.5 * d2 / w2).exp();
        // Δ(ρ g) with ρ = d2: Δρ = 2n, ∇ρ·∇g = -2 d2 g / w², Δg = g (d2/w⁴ - n/w²).
        g * (2.0 * n - 4.0 * d2 / w2 + d2 * (d2 / (w2 * w2) - n / w2))
    }

    fn label(&self) -> String {
        format!("touch:{:?},{}", self.anchor, self.width)
    }
}

/// Finite expansion Σ c_ν h_ν as an evaluable function.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    pub coeffs: SpectralCoeffs,
}

impl TestFunction for SpectralFunction {
    fn dim(&self) -> usize {
        self.coeffs.dimension
    }

    fn value(&self, x: &[f64]) -> f64 {
        crate::hermite_basis::synthesize(&self.coeffs, x).expect("dimension checked by caller")
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        synthesize_jet(&self.coeffs, x).ok().map(|j| j.1)
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        synthesize_jet(&self.coeffs, x)
            .map(|j| j.2)
            .unwrap_or(f64::NAN)
    }

    fn label(&self) -> String {
        format!("spectral[{} terms]", self.coeffs.coeffs.len())
    }
}

/// Σ a_k u_k.
#[derive(Clone)]
pub struct Combination {
    pub terms: Vec<(f64, Arc<dyn TestFunction>)>,
}

impl TestFunction for Combination {
    fn dim(&self) -> usize {
        self.terms.first().map(|t| t.1.dim()).unwrap_or(0)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(a, u)| a * u.value(x)).sum()
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut g = vec![0.0; x.len()];
        for (a, u) in &self.terms {
            let gu = u.gradient(x)?;
            for (gi, v) in g.iter_mut().zip(gu) {
                *gi += a * v;
            }
        }
        Some(g)
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(a, u)| a * u.laplacian(x)).sum()
    }

    fn regularity(&self) -> Regularity {
        let mut worst = Regularity::Smooth;
        for (_, u) in &self.terms {
            let r = u.regularity();
            if r.order() < worst.order() {
                worst = r;
            }
        }
        worst
    }

    fn label(&self) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(a, u)| format!("{a}*{}", u.label()))
            .collect();
        parts.join(" + ")
    }
}
