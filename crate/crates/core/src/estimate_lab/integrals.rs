//! Shell integrals, L¹ row integrals and the cutoff–heat mollifier.

use serde::{Deserialize, Serialize};

use crate::derivatives_riesz::{RieszKernel, RieszKernelEval};
use crate::error::{check_dim, Error, Result};
use crate::frac_ops::{directions, KernelIntegrator, KernelKind, QuadratureSpec};
use crate::functions::TestFunction;
use crate::quadrature::{gauss_legendre, geometric_breaks, uniform_breaks};

const RADIAL_NODES: usize = 10;

/// Kernels whose shell integrals ∫_{r₁<|x-z|≤r₂} K(x,z) dz are measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ShellKernel {
    /// A_i F_{-1/2}(x,z).
    LadderHalf(i32),
    /// A_i F_{2,-1/2}(x,z).
    LadderHalfShifted(i32),
    /// F_σ(x,z).
    Power { sigma: f64 },
}

enum KernelEval {
    Riesz(RieszKernelEval),
    Plain(KernelIntegrator),
}

impl KernelEval {
    fn value(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        match self {
            KernelEval::Riesz(k) => k.value(x, z),
            KernelEval::Plain(k) => k.value(x, z),
        }
    }
}

impl ShellKernel {
    fn evaluator(self, n: usize, q: &QuadratureSpec) -> Result<KernelEval> {
        Ok(match self {
            ShellKernel::LadderHalf(i) => {
                KernelEval::Riesz(RieszKernelEval::new(RieszKernel::First(i), n, q)?)
            }
            ShellKernel::LadderHalfShifted(i) => {
                KernelEval::Riesz(RieszKernelEval::new(RieszKernel::FirstShifted(i), n, q)?)
            }
            ShellKernel::Power { sigma } => {
                KernelKind::FracPower.validate(sigma, n)?;
                q.validate()?;
                KernelEval::Plain(KernelIntegrator::new(KernelKind::FracPower, sigma, n, q)?)
            }
        })
    }
}

/// Gauss–Legendre nodes (r, w·r^{n-1}) on log-graded panels over [lo, hi].
fn radial_rule(lo: f64, hi: f64, ratio: f64, n: usize, nodes: usize) -> Result<Vec<(f64, f64)>> {
    let rule = gauss_legendre(nodes)?;
    let mut out = Vec::new();
    let mut push = |a: f64, b: f64, log: bool| {
        let (ta, tb) = if log { (a.ln(), b.ln()) } else { (a, b) };
        let c = 0.5 * (ta + tb);
        let h = 0.5 * (tb - ta);
        for (y, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = c + h * y;
            let (r, jac) = if log { (t.exp(), t.exp()) } else { (t, 1.0) };
            out.push((r, w * h * jac * r.powi(n as i32 - 1)));
        }
    };
    let knee = hi.min(1.0);
    if lo < knee {
        for w in geometric_breaks(lo, knee, ratio).windows(2) {
            push(w[0], w[1], true);
        }
    }
    let start = lo.max(knee);
    if hi > start {
        for w in uniform_breaks(start, hi, 1.0).windows(2) {
            push(w[0], w[1], false);
        }
    }
    Ok(out)
}

/// ∫ over |x - z| ∈ (r₁, r₂] of K(x,z) with default quadrature.
pub fn cancellation_integral(kind: ShellKernel, x: &[f64], r1: f64, r2: f64) -> Result<f64> {
    cancellation_integral_with(kind, x, r1, r2, &QuadratureSpec::default())
}

/// Shell integral by polar quadrature; r₂ = ∞ is truncated at the outer radius.
pub fn cancellation_integral_with(
    kind: ShellKernel,
    x: &[f64],
    r1: f64,
    r2: f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    if !(r1 > 0.0 && r1 < r2) {
        return Err(Error::domain(format!(
            "shell needs 0 < r1 < r2, got r1 = {r1}, r2 = {r2}"
        )));
    }
    let k = kind.evaluator(x.len(), q)?;
    shell_sum(&k, x, r1, r2.min(q.outer_radius), RADIAL_NODES)
}

fn shell_sum(k: &KernelEval, x: &[f64], lo: f64, hi: f64, nodes: usize) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let n = x.len();
    let mut acc = 0.0;
    let mut z = vec![0.0; n];
    for (r, wr) in radial_rule(lo, hi, 4.0, n, nodes)? {
        let mut ring = 0.0;
        for (omega, wo) in directions(n, r)? {
            for sgn in [1.0, -1.0] {
                for a in 0..n {
                    z[a] = x[a] + sgn * r * omega[a];
                }
                ring += wo * k.value(x, &z)?;
            }
        }
        acc += wr * ring;
    }
    Ok(acc)
}

/// Kernels of the uniform L¹ row bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RowKernel {
    /// |x|^{2σ} F_{-σ}(x,z).
    WeightedX { sigma: f64 },
    /// |z|^{2σ} F_{-σ}(x,z).
    WeightedZ { sigma: f64 },
    /// x_i ∂_{x_j} F_{-1}(x,z), 1 ≤ i, j ≤ n.
    CoordinateDerivative { i: usize, j: usize },
}

/// ∫ |K(x,z)| dz by polar quadrature around x.
pub fn l1_row_integral(kind: RowKernel, x: &[f64], q: &QuadratureSpec) -> Result<f64> {
    let n = x.len();
    q.validate()?;
    let (sigma, order) = match kind {
        RowKernel::WeightedX { sigma } | RowKernel::WeightedZ { sigma } => (sigma, 0),
        RowKernel::CoordinateDerivative { i, j } => {
            if i == 0 || j == 0 || i > n || j > n {
                return Err(Error::precondition(format!(
                    "coordinates ({i}, {j}) outside 1..={n}"
                )));
            }
            (1.0, 1)
        }
    };
    KernelKind::FracIntegral.validate(sigma, n)?;
    let k = KernelIntegrator::new(KernelKind::FracIntegral, sigma, n, q)?;
    let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    // The integrand is O(r^{min(2σ,1)-1}) at the diagonal: cut where the rest is below 1e-12.
    let p = (2.0 * sigma).min(1.0);
    let r_min = 1e-12f64.powf(1.0 / p).max(1e-90);
    let mut acc = 0.0;
    let mut z = vec![0.0; n];
    for (r, wr) in radial_rule(r_min, q.outer_radius, 4.0, n, 8)? {
        let mut ring = 0.0;
        for (omega, wo) in directions(n, r)? {
            for sgn in [1.0, -1.0] {
                for a in 0..n {
                    z[a] = x[a] + sgn * r * omega[a];
                }
                let v = match kind {
                    RowKernel::WeightedX { sigma } => xn.powf(2.0 * sigma) * k.value(x, &z)?,
                    RowKernel::WeightedZ { sigma } => {
                        let zn = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                        zn.powf(2.0 * sigma) * k.value(x, &z)?
                    }
                    RowKernel::CoordinateDerivative { i, j } => {
                        x[i - 1] * k.jet(x, &z, order)?.grad[j - 1]
                    }
                };
                ring += wo * v.abs();
            }
        }
        acc += wr * ring;
    }
    Ok(acc)
}

/// max over `xs` of the row integral.
pub fn l1_row_bound(kind: RowKernel, xs: &[Vec<f64>], q: &QuadratureSpec) -> Result<f64> {
    use rayon::prelude::*;
    let rows: Result<Vec<f64>> = xs.par_iter().map(|x| l1_row_integral(kind, x, q)).collect();
    Ok(rows?.into_iter().fold(0.0, f64::max))
}

/// f_j = ζ(·/j)·(u ∗ W_{1/j}).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub j: u32,
    /// Convolution variable v = y/(2√t) is integrated over [-extent, extent]ⁿ.
    pub extent: f64,
    pub panels: usize,
    pub nodes: usize,
}

impl MollifierSpec {
    pub fn new(j: u32) -> Self {
        MollifierSpec {
            j,
            extent: 6.5,
            panels: 26,
            nodes: 8,
        }
    }

    /// Smooth cutoff of |y|: 1 on [0, 1], 0 on [2, ∞).
    pub fn cutoff(y: &[f64]) -> f64 {
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let g = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
        let (a, b) = (g(2.0 - r), g(r - 1.0));
        a / (a + b)
    }

    /// W_t(z) = (4πt)^{-n/2} e^{-|z|²/(4t)}.
    pub fn gauss_weierstrass(t: f64, z: &[f64]) -> f64 {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        (4.0 * std::f64::consts::PI * t).powf(-0.5 * z.len() as f64) * (-r2 / (4.0 * t)).exp()
    }

    fn nodes_1d(&self) -> Result<Vec<(f64, f64)>> {
        let rule = gauss_legendre(self.nodes)?;
        let mut out = Vec::with_capacity(self.panels * self.nodes);
        for w in uniform_breaks(
            -self.extent,
            self.extent,
            2.0 * self.extent / self.panels as f64,
        )
        .windows(2)
        {
            let c = 0.5 * (w[0] + w[1]);
            let h = 0.5 * (w[1] - w[0]);
            for (y, wy) in rule.nodes.iter().zip(&rule.weights) {
                out.push((c + h * y, wy * h));
            }
        }
        Ok(out)
    }
}

/// f_j(x) by tensor Gauss–Legendre quadrature of the heat convolution.
pub fn mollify<U: TestFunction + ?Sized>(u: &U, spec: &MollifierSpec, x: &[f64]) -> Result<f64> {
    check_dim(u.dim(), x.len())?;
    if spec.j == 0 {
        return Err(Error::precondition("mollifier scale j must be at least 1"));
    }
    if spec.panels == 0 || spec.extent <= 0.0 {
        return Err(Error::precondition(
            "mollifier quadrature needs panels and a positive extent",
        ));
    }
    let n = x.len();
    let j = spec.j as f64;
    let scaled: Vec<f64> = x.iter().map(|v| v / j).collect();
    let cut = MollifierSpec::cutoff(&scaled);
    if cut == 0.0 {
        return Ok(0.0);
    }
    let t = 1.0 / j;
    let nodes = spec.nodes_1d()?;
    let norm = std::f64::consts::PI.powf(-0.5 * n as f64);
    let scale = 2.0 * t.sqrt();
    let mut idx = vec![0usize; n];
    let mut y = vec![0.0; n];
    let mut acc = 0.0;
    'outer: loop {
        let mut w = norm;
        let mut v2 = 0.0;
        for a in 0..n {
            let (v, wv) = nodes[idx[a]];
            w *= wv;
            v2 += v * v;
            y[a] = x[a] - scale * v;
        }
        acc += w * (-v2).exp() * u.value(&y);
        for a in 0..n {
            idx[a] += 1;
            if idx[a] < nodes.len() {
                continue 'outer;
            }
            idx[a] = 0;
        }
        break;
    }
    Ok(cut * acc)
}
