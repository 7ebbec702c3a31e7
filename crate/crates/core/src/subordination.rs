//! Graded quadrature of s-integrals against dμ_ρ(s) on (0, 1), and the kernel
//! and boundary-function integrands built on top of it.
//!
//! The left half (0, 1/2] is covered by geometric panels in log s, the right
//! half [1/2, 1) by geometric panels in log(1 - s). Gauss–Legendre nodes are
//! placed in the logarithmic variable on each panel.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::frac_ops::{KernelKind, QuadratureSpec};
use crate::heat_semigroup::{mehler_shell_sums, one_shell_sums};
use crate::quadrature::gauss_legendre;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Deepest left-panel boundary of the canonical mesh.
pub(crate) const S_FLOOR: f64 = 1e-200;
/// Lower cutoff used for boundary-function integrals (integrand is O(s) there).
const S_BOUNDARY: f64 = 1e-14;
/// Terms kept in the tail series Σ_{j ≥ k} r^{j-k} P_j on s > 1/2 (r ≤ 1/3).
const TAIL_TERMS: usize = 40;

#[derive(Debug, Clone, Copy)]
pub(crate) struct SNode {
    pub s: f64,
    /// 1 - s, exact on the right half where s rounds to 1.
    pub v: f64,
    /// t(s), computed stably from whichever of s and 1 - s is small.
    pub t: f64,
    /// r = (1-s)/(1+s).
    pub r: f64,
    /// Quadrature weight for ds.
    pub w: f64,
}

/// Raw node layout, shared by every (n, ρ) combination with the same spec.
#[derive(Debug)]
pub(crate) struct SLayout {
    /// Left nodes, panel-major from s = 1/2 downwards.
    pub left: Vec<SNode>,
    /// Descending left panel boundaries: left_breaks[k] is the lower end of panel k.
    pub left_breaks: Vec<f64>,
    pub per_panel_left: usize,
    pub right: Vec<SNode>,
}

impl SLayout {
    fn build(q: &QuadratureSpec, t_max: f64) -> Result<Self> {
        let pl = q.nodes_per_panel;
        let rule = gauss_legendre(pl)?;
        let ratio_l = q.grading_zero;
        let mut left = Vec::new();
        let mut left_breaks = Vec::new();
        let mut hi = 0.5f64;
        while hi > S_FLOOR {
            let lo = hi / ratio_l;
            let (ylo, yhi) = (lo.ln(), hi.ln());
            let c = 0.5 * (ylo + yhi);
            let h = 0.5 * (yhi - ylo);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let s = (c + h * x).exp();
                left.push(SNode {
                    s,
                    v: 1.0 - s,
                    t: s.atanh(),
                    r: (1.0 - s) / (1.0 + s),
                    w: w * h * s,
                });
            }
            left_breaks.push(lo);
            hi = lo;
        }
        // Right: v = 1 - s from 1/2 down to v_min = 1 - tanh(t_max).
        let v_min = 2.0 / ((2.0 * t_max).exp() + 1.0);
        let pr = q.nodes_per_panel_one;
        let rule_r = gauss_legendre(pr)?;
        let ratio_r = q.grading_one;
        let mut right = Vec::new();
        let mut hi = 0.5f64;
        let mut right_panels = 0;
        // Ratios 2, 2, 2, 4, 8, ... up to `grading_one`: the Gaussian factor
        // e^{-|x-z|²/(4s)} still varies near s = 1/2, the integrand is a
        // plain power of 1 - s further out.
        let mut ratio = 2.0f64.min(ratio_r);
        while hi > v_min {
            let lo = (hi / ratio).max(v_min);
            if right_panels >= 2 {
                ratio = (2.0 * ratio).min(ratio_r);
            }
            let (ylo, yhi) = (lo.ln(), hi.ln());
            let c = 0.5 * (ylo + yhi);
            let h = 0.5 * (yhi - ylo);
            for (x, w) in rule_r.nodes.iter().zip(&rule_r.weights) {
                let v = (c + h * x).exp();
                let s = 1.0 - v;
                right.push(SNode {
                    s,
                    v,
                    t: 0.5 * ((2.0 - v).ln() - v.ln()),
                    r: v / (2.0 - v),
                    w: w * h * v,
                });
            }
            right_panels += 1;
            hi = lo;
        }
        if left_breaks.len() + right_panels > q.panels {
            return Err(Error::Capacity(format!(
                "graded s-mesh needs {} panels, spec allows {}",
                left_breaks.len() + right_panels,
                q.panels
            )));
        }
        Ok(SLayout {
            left,
            left_breaks,
            per_panel_left: pl,
            right,
        })
    }

    /// Number of left panels needed to reach down to `s_lo`.
    pub fn left_panels_for(&self, s_lo: f64) -> usize {
        match self.left_breaks.iter().position(|&b| b <= s_lo) {
            Some(k) => k + 1,
            None => self.left_breaks.len(),
        }
    }
}

/// Upper t-cutoff for dimension n. Every integrand decays at least like e^{-nt}.
pub(crate) fn t_max_for(n: usize) -> f64 {
    45.0 / n as f64
}

type LayoutKey = (usize, u64, u64, usize, usize, usize);

pub(crate) fn layout(q: &QuadratureSpec, n: usize) -> Result<Arc<SLayout>> {
    static CACHE: OnceLock<Mutex<HashMap<LayoutKey, Arc<SLayout>>>> = OnceLock::new();
    let key = (
        n,
        q.grading_zero.to_bits(),
        q.grading_one.to_bits(),
        q.nodes_per_panel,
        q.nodes_per_panel_one,
        q.panels,
    );
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(l) = cache.lock().expect("layout cache poisoned").get(&key) {
        return Ok(l.clone());
    }
    let l = Arc::new(SLayout::build(q, t_max_for(n))?);
    cache
        .lock()
        .expect("layout cache poisoned")
        .insert(key, l.clone());
    Ok(l)
}

fn mu_weight(node: &SNode, rho: f64) -> f64 {
    let one_minus_s2 = node.v * (2.0 - node.v);
    node.w / (one_minus_s2 * node.t.powf(1.0 + rho))
}

/// Exponent of the spectral multiplier folded into the s-integrand:
/// r^{shift} with r = (1-s)/(1+s).
fn shift_exponent(kind: KernelKind) -> i32 {
    match kind {
        KernelKind::FracPower | KernelKind::FracIntegral => 0,
        KernelKind::FracPowerShiftUp(k) | KernelKind::FracIntegralShiftUp(k) => k as i32,
        KernelKind::FracPowerShiftDown(k) => -(k as i32),
    }
}

/// Kernel integrand data: combined weights w·μ_ρ·r^shift·((1-s²)/(4πs))^{n/2}.
#[derive(Debug)]
pub(crate) struct KernelMesh {
    pub layout: Arc<SLayout>,
    pub s: Vec<f64>,
    pub inv_s: Vec<f64>,
    pub weight: Vec<f64>,
    /// Right-half weights w·μ_ρ and r, for the series route of lowered powers.
    pub right_mu: Vec<f64>,
    pub left_len: usize,
}

impl KernelMesh {
    fn build(layout: Arc<SLayout>, n: usize, rho: f64, shift: i32, series_right: bool) -> Self {
        let half_n = 0.5 * n as f64;
        let mut s = Vec::new();
        let mut inv_s = Vec::new();
        let mut weight = Vec::new();
        let mut right_mu = Vec::new();
        let all = layout.left.iter().chain(layout.right.iter());
        for (idx, node) in all.enumerate() {
            let mu = mu_weight(node, rho);
            let is_right = idx >= layout.left.len();
            if is_right {
                right_mu.push(mu);
            }
            let one_minus_s2 = node.v * (2.0 - node.v);
            let pref = (one_minus_s2 / (FOUR_PI * node.s)).powf(half_n);
            let w = if is_right && series_right {
                0.0
            } else {
                mu * pref * node.r.powi(shift)
            };
            s.push(node.s);
            inv_s.push(1.0 / node.s);
            weight.push(w);
        }
        let left_len = layout.left.len();
        KernelMesh {
            layout,
            s,
            inv_s,
            weight,
            right_mu,
            left_len,
        }
    }
}

/// Value, x-gradient and x-Hessian of a kernel (or boundary function).
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major n × n.
    pub hess: Vec<f64>,
}

impl Jet {
    pub(crate) fn zero(n: usize) -> Self {
        Jet {
            value: 0.0,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }

    pub fn hess_at(&self, a: usize, b: usize) -> f64 {
        self.hess[a * self.grad.len() + b]
    }

    pub(crate) fn scale(&mut self, c: f64) {
        self.value *= c;
        self.grad.iter_mut().for_each(|g| *g *= c);
        self.hess.iter_mut().for_each(|h| *h *= c);
    }
}

fn normalization(kind: KernelKind, sigma: f64) -> f64 {
    if kind.is_integral() {
        1.0 / statrs::function::gamma::gamma(sigma)
    } else {
        // 1/(-Γ(-σ)) with Γ(-σ) = -Γ(1-σ)/σ.
        sigma / statrs::function::gamma::gamma(1.0 - sigma)
    }
}

fn rho_of(kind: KernelKind, sigma: f64) -> f64 {
    if kind.is_integral() {
        -sigma
    } else {
        sigma
    }
}

type MeshKey = (LayoutKey, u64, i32, bool);

fn kernel_mesh(
    q: &QuadratureSpec,
    n: usize,
    kind: KernelKind,
    sigma: f64,
) -> Result<Arc<KernelMesh>> {
    static CACHE: OnceLock<Mutex<HashMap<MeshKey, Arc<KernelMesh>>>> = OnceLock::new();
    let rho = rho_of(kind, sigma);
    let shift = shift_exponent(kind);
    let series = matches!(kind, KernelKind::FracPowerShiftDown(_));
    let key = (
        (
            n,
            q.grading_zero.to_bits(),
            q.grading_one.to_bits(),
            q.nodes_per_panel,
            q.nodes_per_panel_one,
            q.panels,
        ),
        rho.to_bits(),
        shift,
        series,
    );
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(m) = cache.lock().expect("mesh cache poisoned").get(&key) {
        return Ok(m.clone());
    }
    let lay = layout(q, n)?;
    let m = Arc::new(KernelMesh::build(lay, n, rho, shift, series));
    cache
        .lock()
        .expect("mesh cache poisoned")
        .insert(key, m.clone());
    Ok(m)
}

/// Evaluates one kernel family F(x, z) and its x-derivatives by s-quadrature.
#[derive(Debug, Clone)]
pub struct KernelIntegrator {
    pub(crate) kind: KernelKind,
    pub(crate) sigma: f64,
    pub(crate) n: usize,
    norm: f64,
    mesh: Arc<KernelMesh>,
}

impl KernelIntegrator {
    pub(crate) fn new(kind: KernelKind, sigma: f64, n: usize, q: &QuadratureSpec) -> Result<Self> {
        Ok(KernelIntegrator {
            kind,
            sigma,
            n,
            norm: normalization(kind, sigma),
            mesh: kernel_mesh(q, n, kind, sigma)?,
        })
    }

    /// Whether the kernel blows up on the diagonal.
    pub(crate) fn singular_on_diagonal(&self) -> bool {
        !(self.kind.is_integral() && (self.n as f64) < 2.0 * self.sigma)
    }

    /// Left panel count and the neglected-tail flag for |x - z|² = `b`.
    fn left_extent(&self, b: f64) -> Result<(usize, bool)> {
        let lay = &self.mesh.layout;
        let s_lo = b / 400.0;
        if s_lo > S_FLOOR {
            return Ok((lay.left_panels_for(s_lo) * lay.per_panel_left, false));
        }
        if self.singular_on_diagonal() {
            return Err(Error::domain(format!(
                "kernel is singular on the diagonal and |x - z|² = {b:e} is below resolution"
            )));
        }
        Ok((lay.left.len(), true))
    }

    /// F(x, z).
    pub fn value(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        Ok(self.jet(x, z, 0)?.value)
    }

    /// F(x, z) with its x-derivatives up to `order` (0, 1 or 2).
    pub fn jet(&self, x: &[f64], z: &[f64], order: usize) -> Result<Jet> {
        crate::error::check_dim(self.n, x.len())?;
        crate::error::check_dim(self.n, z.len())?;
        let n = self.n;
        let mut plus = [0.0; 3];
        let mut minus = [0.0; 3];
        let (mut a2, mut b2) = (0.0, 0.0);
        for i in 0..n {
            plus[i] = x[i] + z[i];
            minus[i] = x[i] - z[i];
            a2 += plus[i] * plus[i];
            b2 += minus[i] * minus[i];
        }
        let (left_n, add_tail) = self.left_extent(b2)?;
        let m = &*self.mesh;
        let mut jet = Jet::zero(n);
        let right = m.left_len..m.s.len();
        let series = matches!(self.kind, KernelKind::FracPowerShiftDown(_));
        if series && order > 0 {
            return Err(Error::domain(
                "derivatives of the lowered-power kernel are not provided",
            ));
        }
        let ranges = [0..left_n, if series { 0..0 } else { right.clone() }];
        for range in ranges {
            for j in range {
                let s = m.s[j];
                let is = m.inv_s[j];
                let e = m.weight[j] * (-0.25 * (s * a2 + b2 * is)).exp();
                if e == 0.0 {
                    continue;
                }
                jet.value += e;
                if order >= 1 {
                    let mut g = [0.0; 3];
                    for a in 0..n {
                        g[a] = -0.5 * (s * plus[a] + minus[a] * is);
                        jet.grad[a] += e * g[a];
                    }
                    if order >= 2 {
                        let diag = 0.5 * (s + is);
                        for a in 0..n {
                            for b in 0..n {
                                let mut v = g[a] * g[b];
                                if a == b {
                                    v -= diag;
                                }
                                jet.hess[a * n + b] += e * v;
                            }
                        }
                    }
                }
            }
        }
        if series {
            let KernelKind::FracPowerShiftDown(k) = self.kind else {
                unreachable!()
            };
            let k = k as usize;
            let p = mehler_shell_sums(x, z, k + TAIL_TERMS)?;
            let half_n = 0.5 * n as f64;
            for (node, mu) in m.layout.right.iter().zip(&m.right_mu) {
                let r = node.r;
                // Σ_{i ≥ 0} r^{i + n/2} P_{k+i}, by Horner.
                let mut acc = 0.0;
                for i in (0..=TAIL_TERMS).rev() {
                    acc = acc * r + p[k + i];
                }
                jet.value += mu * r.powf(half_n) * acc;
            }
        }
        if add_tail {
            // ∫_0^{s_lo} ((1-s²)/(4πs))^{n/2} e^{-s|x+z|²/4} dμ_{-σ} ≈ (4π)^{-n/2} s_lo^{σ-n/2}/(σ-n/2).
            let s_lo = *m.layout.left_breaks.last().expect("non-empty mesh");
            let ex = self.sigma - 0.5 * n as f64;
            jet.value += FOUR_PI.powf(-0.5 * n as f64) * s_lo.powf(ex) / ex;
        }
        jet.scale(self.norm);
        Ok(jet)
    }
}

/// Boundary functions: B-type companions of the power kernels and
/// (H + 2k)^{-σ}1 for the integral kernels.
#[derive(Debug, Clone)]
pub struct BoundaryIntegrator {
    kind: KernelKind,
    sigma: f64,
    n: usize,
    layout: Arc<SLayout>,
    left_n: usize,
    s_lo: f64,
    /// w·μ_ρ per node (left then right).
    mu: Vec<f64>,
    /// ∫_{1/2}^{1} dμ_σ = t(1/2)^{-σ}/σ, used for the "-1" of B-type integrands.
    right_mass: f64,
}

impl BoundaryIntegrator {
    pub(crate) fn new(kind: KernelKind, sigma: f64, n: usize, q: &QuadratureSpec) -> Result<Self> {
        let layout = layout(q, n)?;
        let panels = layout.left_panels_for(S_BOUNDARY);
        let left_n = panels * layout.per_panel_left;
        let s_lo = layout.left_breaks[panels - 1];
        let rho = rho_of(kind, sigma);
        let mu = layout
            .left
            .iter()
            .take(left_n)
            .chain(layout.right.iter())
            .map(|node| mu_weight(node, rho))
            .collect();
        let t_half = 0.5f64.atanh();
        Ok(BoundaryIntegrator {
            kind,
            sigma,
            n,
            layout,
            left_n,
            s_lo,
            mu,
            right_mass: t_half.powf(-sigma) / sigma,
        })
    }

    fn shift(&self) -> i32 {
        shift_exponent(self.kind)
    }

    /// log of r^{shift}·((1-s²)/(1+s²))^{n/2}, accurate for small s.
    fn log_prefactor(&self, s: f64) -> f64 {
        let half_n = 0.5 * self.n as f64;
        let log_r = (-s).ln_1p() - s.ln_1p();
        self.shift() as f64 * log_r + half_n * ((-s * s).ln_1p() - (s * s).ln_1p())
    }

    /// Boundary function value and x-derivatives up to `order`.
    pub fn jet(&self, x: &[f64], order: usize) -> Result<Jet> {
        crate::error::check_dim(self.n, x.len())?;
        let n = self.n;
        let x2: f64 = x.iter().map(|v| v * v).sum();
        let integral = self.kind.is_integral();
        let series = matches!(self.kind, KernelKind::FracPowerShiftDown(_));
        if series && order > 0 {
            return Err(Error::domain(
                "derivatives of the lowered-power boundary term are not provided",
            ));
        }
        let mut jet = Jet::zero(n);
        let add = |jet: &mut Jet, w: f64, s: f64, phi: f64, bracket: f64| {
            jet.value += w * bracket;
            if order >= 1 {
                let q = s / (1.0 + s * s);
                for a in 0..n {
                    jet.grad[a] += w * (-2.0 * q * x[a]) * phi;
                    if order >= 2 {
                        for b in 0..n {
                            let mut h = 4.0 * q * q * x[a] * x[b];
                            if a == b {
                                h -= 2.0 * q;
                            }
                            jet.hess[a * n + b] += w * h * phi;
                        }
                    }
                }
            }
        };
        // Left half: bracket = r^{shift}Φ_s - 1 (B-type) or r^{shift}Φ_s (integral type).
        let lay = &self.layout;
        for (j, node) in lay.left.iter().take(self.left_n).enumerate() {
            let s = node.s;
            let q = s / (1.0 + s * s);
            let l = self.log_prefactor(s) - q * x2;
            let phi = l.exp();
            let bracket = if integral { phi } else { l.exp_m1() };
            add(&mut jet, self.mu[j], s, phi, bracket);
        }
        // Tail on (0, s_lo): integrand ≈ linear (B-type, derivatives) or constant.
        {
            let s = self.s_lo;
            let t = s.atanh();
            let q = s / (1.0 + s * s);
            let l = self.log_prefactor(s) - q * x2;
            let phi = l.exp();
            let sg = self.sigma;
            let mut tail = Jet::zero(n);
            // ∫_0^{s_lo} s dμ_ρ ≈ s_lo^{1-ρ}/(1-ρ) and ∫_0^{s_lo} dμ_{-σ} = t_lo^{σ}/σ.
            let lin_mass = if integral {
                t.powf(1.0 + sg) / (1.0 + sg)
            } else {
                t.powf(1.0 - sg) / (1.0 - sg)
            };
            let w_lin = lin_mass / s;
            if integral {
                tail.value = phi * t.powf(sg) / sg;
                add(&mut tail, w_lin, s, phi, 0.0);
            } else {
                add(&mut tail, w_lin, s, phi, l.exp_m1());
            }
            jet.value += tail.value;
            for a in 0..n {
                jet.grad[a] += tail.grad[a];
                for b in 0..n {
                    jet.hess[a * n + b] += tail.hess[a * n + b];
                }
            }
        }
        // Right half.
        let qsums = if series {
            let KernelKind::FracPowerShiftDown(k) = self.kind else {
                unreachable!()
            };
            Some((k as usize, one_shell_sums(x, k as usize + TAIL_TERMS)))
        } else {
            None
        };
        let half_n = 0.5 * n as f64;
        for (idx, node) in lay.right.iter().enumerate() {
            let w = self.mu[self.left_n + idx];
            let s = node.s;
            let v = node.v;
            let r = node.r;
            let val = match &qsums {
                Some((k, qs)) => {
                    let mut acc = 0.0;
                    for i in (0..=TAIL_TERMS).rev() {
                        acc = acc * r + qs[k + i];
                    }
                    r.powf(half_n) * acc
                }
                None => {
                    let q = s / (1.0 + s * s);
                    let one_minus_s2 = v * (2.0 - v);
                    r.powi(self.shift())
                        * (one_minus_s2 / (1.0 + s * s)).powf(half_n)
                        * (-q * x2).exp()
                }
            };
            add(&mut jet, w, s, val, val);
        }
        if !integral {
            jet.value -= self.right_mass;
        }
        let norm = if integral {
            1.0 / statrs::function::gamma::gamma(self.sigma)
        } else {
            // 1/Γ(-σ) = -σ/Γ(1-σ)
            -self.sigma / statrs::function::gamma::gamma(1.0 - self.sigma)
        };
        jet.scale(norm);
        Ok(jet)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.jet(x, 0)?.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_finite() {
        for n in 1..=3 {
            let l = layout(&QuadratureSpec::default(), n).unwrap();
            for node in l.left.iter().chain(l.right.iter()) {
                assert!(
                    node.s.is_finite()
                        && node.t.is_finite()
                        && node.w.is_finite()
                        && node.r.is_finite(),
                    "n={n} {node:?}"
                );
            }
        }
    }
}
