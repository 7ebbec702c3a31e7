//! Fractional powers (H ± 2k)^σ and fractional integrals H^{-σ}: spectral
//! multipliers, the subordinated kernels and boundary terms, and pointwise
//! evaluation by polar quadrature around the evaluation point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::functions::{Regularity, TestFunction};
use crate::hermite_basis::SpectralCoeffs;
use crate::quadrature::{gauss_legendre, geometric_breaks, uniform_breaks};
pub use crate::subordination::{BoundaryIntegrator, Jet, KernelIntegrator};

/// Discretization parameters for s-integrals and for pointwise quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    /// Upper bound on the number of s-panels (left and right halves together).
    pub panels: usize,
    /// Geometric ratio of the s-panels accumulating at s = 0.
    pub grading_zero: f64,
    /// Geometric ratio of the (1 - s)-panels accumulating at s = 1.
    pub grading_one: f64,
    /// Gauss–Legendre points per panel on (0, 1/2].
    pub nodes_per_panel: usize,
    /// Gauss–Legendre points per panel on [1/2, 1).
    pub nodes_per_panel_one: usize,
    /// Radius of the excluded shell |x - z| < δ for principal values.
    pub pv_delta: f64,
    /// Accepted change of a principal value under δ → δ/2.
    pub pv_tol: f64,
    /// Outer truncation radius of the z-integrals.
    pub outer_radius: f64,
    /// Half-width L of evaluation boxes.
    pub box_half_width: f64,
    /// Grid spacing h of evaluation boxes.
    pub grid_step: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            panels: 400,
            grading_zero: 4.0,
            grading_one: 32.0,
            nodes_per_panel: 12,
            nodes_per_panel_one: 10,
            pv_delta: 1e-3,
            pv_tol: 1e-7,
            outer_radius: 12.0,
            box_half_width: 6.0,
            grid_step: 0.01,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.pv_delta > 0.0) {
            return Err(Error::precondition("pv_delta must be positive"));
        }
        if self.panels < 16 {
            return Err(Error::precondition("at least 16 panels required"));
        }
        if !(self.box_half_width >= 3.0) {
            return Err(Error::precondition("box half-width L must be at least 3"));
        }
        if !(self.grading_zero > 1.0 && self.grading_one > 1.0) {
            return Err(Error::precondition("panel grading ratios must exceed 1"));
        }
        if self.nodes_per_panel == 0 || self.nodes_per_panel_one == 0 {
            return Err(Error::precondition("panels need at least one node"));
        }
        if !(self.grid_step > 0.0 && self.outer_radius > 1.0 && self.pv_tol > 0.0) {
            return Err(Error::precondition(
                "grid_step, pv_tol must be positive and outer_radius above 1",
            ));
        }
        Ok(())
    }
}

/// Kernel families of the pointwise formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    /// F_σ, companion B_σ.
    FracPower,
    /// F_{2k,σ}, companion B_{2k,σ}.
    FracPowerShiftUp(u32),
    /// F_{-2k,σ}, companion B_{-2k,σ}.
    FracPowerShiftDown(u32),
    /// F_{-σ}, companion H^{-σ}1.
    FracIntegral,
    /// F_{2k,-σ}, companion (H + 2k)^{-σ}1.
    FracIntegralShiftUp(u32),
}

impl KernelKind {
    pub fn is_integral(&self) -> bool {
        matches!(
            self,
            KernelKind::FracIntegral | KernelKind::FracIntegralShiftUp(_)
        )
    }

    /// The spectral shift ±2k the kernel belongs to.
    pub fn shift(&self) -> i32 {
        match *self {
            KernelKind::FracPower | KernelKind::FracIntegral => 0,
            KernelKind::FracPowerShiftUp(k) | KernelKind::FracIntegralShiftUp(k) => 2 * k as i32,
            KernelKind::FracPowerShiftDown(k) => -2 * k as i32,
        }
    }

    /// Power kind for the signed shift `shift` = ±2k.
    pub fn power_for_shift(shift: i32) -> Result<Self> {
        if shift % 2 != 0 {
            return Err(Error::precondition(format!("shift {shift} is not even")));
        }
        Ok(match shift.cmp(&0) {
            std::cmp::Ordering::Equal => KernelKind::FracPower,
            std::cmp::Ordering::Greater => KernelKind::FracPowerShiftUp((shift / 2) as u32),
            std::cmp::Ordering::Less => KernelKind::FracPowerShiftDown((-shift / 2) as u32),
        })
    }

    fn k(&self) -> u32 {
        match *self {
            KernelKind::FracPower | KernelKind::FracIntegral => 0,
            KernelKind::FracPowerShiftUp(k)
            | KernelKind::FracPowerShiftDown(k)
            | KernelKind::FracIntegralShiftUp(k) => k,
        }
    }

    /// Checks σ, k and n against the kind.
    pub fn validate(&self, sigma: f64, n: usize) -> Result<()> {
        if !(1..=3).contains(&n) {
            return Err(Error::precondition(format!("dimension {n} outside 1..=3")));
        }
        let shifted = !matches!(self, KernelKind::FracPower | KernelKind::FracIntegral);
        if shifted && self.k() == 0 {
            return Err(Error::precondition("shifted kernels need k >= 1"));
        }
        if self.is_integral() {
            if !(sigma > 0.0 && sigma <= 1.0) {
                return Err(Error::precondition(format!(
                    "fractional integral needs 0 < sigma <= 1, got {sigma}"
                )));
            }
        } else if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::precondition(format!(
                "fractional power kernel needs 0 < sigma < 1, got {sigma}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub sigma: f64,
    pub dimension: usize,
    pub quad: QuadratureSpec,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, sigma: f64, dimension: usize) -> Self {
        KernelSpec {
            kind,
            sigma,
            dimension,
            quad: QuadratureSpec::default(),
        }
    }

    pub fn integrator(&self) -> Result<KernelIntegrator> {
        self.kind.validate(self.sigma, self.dimension)?;
        self.quad.validate()?;
        KernelIntegrator::new(self.kind, self.sigma, self.dimension, &self.quad)
    }

    pub fn boundary(&self) -> Result<BoundaryIntegrator> {
        self.kind.validate(self.sigma, self.dimension)?;
        self.quad.validate()?;
        BoundaryIntegrator::new(self.kind, self.sigma, self.dimension, &self.quad)
    }
}

/// Evaluates the kernel F(x, z) of `ks`.
pub fn kernel_eval(ks: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64> {
    check_dim(ks.dimension, x.len())?;
    check_dim(ks.dimension, z.len())?;
    let k = ks.integrator()?;
    if x == z && k.singular_on_diagonal() {
        return Err(Error::domain("kernel is singular on the diagonal x = z"));
    }
    k.value(x, z)
}

/// Evaluates the boundary function paired with `kind`: B_σ, B_{±2k,σ},
/// H^{-σ}1 or (H + 2k)^{-σ}1.
pub fn boundary_term_eval(
    kind: KernelKind,
    sigma: f64,
    x: &[f64],
    quad: &QuadratureSpec,
) -> Result<f64> {
    let ks = KernelSpec {
        kind,
        sigma,
        dimension: x.len(),
        quad: quad.clone(),
    };
    ks.boundary()?.value(x)
}

/// Spectral multiplier (2|ν| + n + shift)^σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSpec {
    pub sigma: f64,
    /// Signed even shift 2k, -2k or 0.
    pub shift: i32,
}

impl MultiplierSpec {
    pub fn power(sigma: f64) -> Self {
        MultiplierSpec { sigma, shift: 0 }
    }
}

/// Multiplies each coefficient by (2|ν| + n + shift)^σ.
pub fn multiplier_apply(spec: MultiplierSpec, c: &SpectralCoeffs) -> Result<SpectralCoeffs> {
    if spec.shift % 2 != 0 {
        return Err(Error::precondition(format!(
            "shift {} is not even",
            spec.shift
        )));
    }
    if spec.shift < 0 {
        let k = (-spec.shift / 2) as u32;
        if let Some((nu, _)) = c.coeffs.iter().find(|(nu, v)| nu.order() < k && **v != 0.0) {
            return Err(Error::precondition(format!(
                "coefficients not in S_{k}: nonzero entry at nu = {nu} (|nu| = {} < {k})",
                nu.order()
            )));
        }
    }
    let mut out = c.clone();
    if spec.sigma == 0.0 {
        return Ok(out);
    }
    for (nu, v) in out.coeffs.iter_mut() {
        let lam = nu.eigenvalue() + spec.shift as f64;
        if lam > 0.0 {
            *v *= lam.powf(spec.sigma);
        } else if *v != 0.0 {
            return Err(Error::precondition(format!(
                "eigenvalue 2|nu|+n+shift = {lam} is not positive at nu = {nu}"
            )));
        }
    }
    Ok(out)
}

/// Zeroes every coefficient with |ν| < k.
#[allow(non_snake_case)]
pub fn project_Sk(c: &SpectralCoeffs, k: u32) -> SpectralCoeffs {
    let mut out = c.clone();
    for (nu, v) in out.coeffs.iter_mut() {
        if nu.order() < k {
            *v = 0.0;
        }
    }
    out
}

/// Pointwise-evaluable operators of the form
/// ∫ (u(z) - u(x)) K(x,z) dz + u(x) b(x), or the sign-flipped power form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PointwiseOperator {
    /// (H + shift)^σ with 0 < σ < 1.
    Power { sigma: f64, shift: i32 },
    /// (H + 2k)^{-σ} with 0 < σ ≤ 1.
    Integral { sigma: f64, k: u32 },
    /// A_i (H + 2k)^{-σ}: signed ladder index i.
    LadderIntegral { i: i32, sigma: f64, k: u32 },
    /// A_i A_j H^{-1}.
    SecondOrder { i: i32, j: i32 },
}

/// |S^{n-1}|
pub fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => {
            let h = n as f64 / 2.0;
            2.0 * std::f64::consts::PI.powf(h) / statrs::function::gamma::gamma(h)
        }
    }
}

/// c_{n,σ} in F_σ(x,z) ≈ c_{n,σ}|x - z|^{-n-2σ} near the diagonal.
pub fn diagonal_constant(n: usize, sigma: f64) -> f64 {
    use statrs::function::gamma::gamma;
    let h = n as f64 / 2.0;
    // |Γ(-σ)| = Γ(1-σ)/σ
    4f64.powf(sigma) * gamma(h + sigma)
        / (std::f64::consts::PI.powf(h) * gamma(1.0 - sigma) / sigma)
}

/// Relative size below which the neglected innermost shell is considered exhausted.
const SHELL_TOL: f64 = 1e-12;
const RADIAL_POINTS: usize = 10;
/// Smallest admissible inner radius (the s-mesh resolves |x - z|² / 400 ≥ 1e-200).
const MIN_RADIUS: f64 = 1e-90;

/// Smallest radius at which x + r·ω is still distinguishable from x.
fn min_radius_at(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (1e-12 * scale).max(MIN_RADIUS)
}

fn ladder_axis(i: i32, n: usize) -> Result<(usize, f64)> {
    if i == 0 || i.unsigned_abs() as usize > n {
        return Err(Error::precondition(format!(
            "ladder index {i} outside 1 <= |i| <= {n}"
        )));
    }
    Ok((i.unsigned_abs() as usize - 1, i.signum() as f64))
}

impl PointwiseOperator {
    fn kernel_kind(&self) -> Result<KernelKind> {
        Ok(match *self {
            PointwiseOperator::Power { shift, .. } => KernelKind::power_for_shift(shift)?,
            PointwiseOperator::Integral { k, .. } | PointwiseOperator::LadderIntegral { k, .. } => {
                if k == 0 {
                    KernelKind::FracIntegral
                } else {
                    KernelKind::FracIntegralShiftUp(k)
                }
            }
            PointwiseOperator::SecondOrder { .. } => KernelKind::FracIntegral,
        })
    }

    fn sigma(&self) -> f64 {
        match *self {
            PointwiseOperator::Power { sigma, .. }
            | PointwiseOperator::Integral { sigma, .. }
            | PointwiseOperator::LadderIntegral { sigma, .. } => sigma,
            PointwiseOperator::SecondOrder { .. } => 1.0,
        }
    }

    fn derivative_order(&self) -> usize {
        match self {
            PointwiseOperator::Power { .. } | PointwiseOperator::Integral { .. } => 0,
            PointwiseOperator::LadderIntegral { .. } => 1,
            PointwiseOperator::SecondOrder { .. } => 2,
        }
    }

    /// Combines a jet into the operator's kernel (or boundary) value at x.
    pub(crate) fn combine(&self, jet: &Jet, x: &[f64]) -> Result<f64> {
        let n = x.len();
        Ok(match *self {
            PointwiseOperator::Power { .. } | PointwiseOperator::Integral { .. } => jet.value,
            PointwiseOperator::LadderIntegral { i, .. } => {
                let (a, e) = ladder_axis(i, n)?;
                e * jet.grad[a] + x[a] * jet.value
            }
            PointwiseOperator::SecondOrder { i, j } => {
                let (a, ei) = ladder_axis(i, n)?;
                let (b, ej) = ladder_axis(j, n)?;
                let mut v = ei * ej * jet.hess_at(a, b)
                    + ei * x[b] * jet.grad[a]
                    + ej * x[a] * jet.grad[b]
                    + x[a] * x[b] * jet.value;
                if a == b {
                    v += ei * jet.value;
                }
                v
            }
        })
    }

    /// Power of r governing the neglected innermost shell for data of regularity `reg`.
    fn shell_exponent(&self, reg: Regularity) -> Result<f64> {
        let sigma = self.sigma();
        let order = reg.order();
        let p = match self {
            PointwiseOperator::Power { .. } => {
                let p = order - 2.0 * sigma;
                if p <= 0.0 {
                    let msg = match reg {
                        Regularity::C0Alpha(a) => format!(
                            "2sigma < alpha violated (sigma = {sigma}, alpha = {a}); gradient (C^{{1,alpha}}) data required"
                        ),
                        Regularity::C1Alpha(a) => format!(
                            "2sigma < 1 + alpha violated (sigma = {sigma}, alpha = {a}); C^{{1,1}} data required"
                        ),
                        Regularity::Smooth => unreachable!("2 - 2sigma > 0"),
                    };
                    return Err(Error::precondition(msg));
                }
                p
            }
            PointwiseOperator::Integral { .. } => order + 2.0 * sigma,
            PointwiseOperator::LadderIntegral { .. } => {
                let p = order.min(1.0) + 2.0 * sigma - 1.0;
                if p <= 0.0 {
                    return Err(Error::precondition(format!(
                        "alpha + 2sigma > 1 violated for A_i H^(-sigma) (sigma = {sigma}, order {order})"
                    )));
                }
                p
            }
            PointwiseOperator::SecondOrder { .. } => order,
        };
        Ok(p)
    }

    /// Precomputes the quadrature stencil at `x` for data of regularity `reg`.
    pub fn stencil(&self, x: &[f64], quad: &QuadratureSpec, reg: Regularity) -> Result<Stencil> {
        quad.validate()?;
        let n = x.len();
        let kind = self.kernel_kind()?;
        let sigma = self.sigma();
        kind.validate(sigma, n)?;
        if let PointwiseOperator::LadderIntegral { i, .. }
        | PointwiseOperator::SecondOrder { i, .. } = *self
        {
            ladder_axis(i, n)?;
        }
        if let PointwiseOperator::SecondOrder { j, .. } = *self {
            ladder_axis(j, n)?;
        }
        let p = self.shell_exponent(reg)?;
        let is_power = matches!(self, PointwiseOperator::Power { .. });
        let smooth_power = is_power && reg == Regularity::Smooth;
        let r_in = if smooth_power {
            quad.pv_delta
        } else {
            SHELL_TOL
                .powf(1.0 / p)
                .clamp(min_radius_at(x).min(quad.pv_delta), quad.pv_delta)
        };
        let kernel = KernelIntegrator::new(kind, sigma, n, quad)?;
        let order = self.derivative_order();
        let bjet = BoundaryIntegrator::new(kind, sigma, n, quad)?.jet(x, order)?;
        let boundary = self.combine(&bjet, x)?;

        let (outer_r, inner_r) = radial_nodes(r_in, quad.outer_radius)?;
        let build = |nodes: &[(f64, f64)]| -> Result<(Vec<f64>, Vec<f64>)> {
            let chunks: Vec<Result<(Vec<f64>, Vec<f64>)>> = nodes
                .par_iter()
                .map(|&(r, wr)| {
                    let dirs = directions(n, r)?;
                    let mut pts = Vec::with_capacity(2 * n * dirs.len());
                    let mut wts = Vec::with_capacity(2 * dirs.len());
                    let radial = wr * r.powi(n as i32 - 1);
                    let mut z = vec![0.0; n];
                    for (omega, wo) in &dirs {
                        for sgn in [1.0, -1.0] {
                            for a in 0..n {
                                z[a] = x[a] + sgn * r * omega[a];
                            }
                            let jet = kernel.jet(x, &z, order)?;
                            let kv = self.combine(&jet, x)?;
                            pts.extend_from_slice(&z);
                            wts.push(radial * wo * kv);
                        }
                    }
                    Ok((pts, wts))
                })
                .collect();
            let mut pts = Vec::new();
            let mut wts = Vec::new();
            for c in chunks {
                let (p, w) = c?;
                pts.extend(p);
                wts.extend(w);
            }
            Ok((pts, wts))
        };
        let (points, weights) = build(&outer_r)?;
        let (inner_points, inner_weights) = build(&inner_r)?;
        let (lap_coarse, lap_fine) = if smooth_power {
            let c = diagonal_constant(n, sigma) * sphere_area(n)
                / (2.0 * n as f64 * (2.0 - 2.0 * sigma));
            let e = 2.0 - 2.0 * sigma;
            (-c * r_in.powf(e), -c * (0.5 * r_in).powf(e))
        } else {
            (0.0, 0.0)
        };
        Ok(Stencil {
            x: x.to_vec(),
            op: *self,
            regularity: reg,
            points,
            weights,
            inner_points,
            inner_weights,
            boundary,
            sign: if is_power { 1.0 } else { -1.0 },
            lap_coarse,
            lap_fine,
            pv_tol: quad.pv_tol,
            r_in,
        })
    }

    /// Evaluates the operator on `u` at `x`.
    pub fn eval<U: TestFunction + ?Sized>(
        &self,
        u: &U,
        x: &[f64],
        quad: &QuadratureSpec,
    ) -> Result<f64> {
        check_dim(u.dim(), x.len())?;
        self.stencil(x, quad, u.regularity())?.apply(u)
    }
}

/// Radial Gauss–Legendre nodes (r, w) for [r_in, R] and the check panel [r_in/2, r_in].
fn radial_nodes(r_in: f64, outer: f64) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    let rule = gauss_legendre(RADIAL_POINTS)?;
    let mut outer_nodes = Vec::new();
    let log_panel = |lo: f64, hi: f64, out: &mut Vec<(f64, f64)>| {
        let (a, b) = (lo.ln(), hi.ln());
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        for (y, w) in rule.nodes.iter().zip(&rule.weights) {
            let r = (c + h * y).exp();
            out.push((r, w * h * r));
        }
    };
    let knee = 1e-3f64;
    if r_in < knee {
        for w in geometric_breaks(r_in, knee, 8.0).windows(2) {
            log_panel(w[0], w[1], &mut outer_nodes);
        }
    }
    for w in geometric_breaks(r_in.max(knee).min(0.5), 1.0, 2.0).windows(2) {
        log_panel(w[0], w[1], &mut outer_nodes);
    }
    if r_in > knee && r_in > 0.5 {
        return Err(Error::precondition("inner radius must not exceed 1/2"));
    }
    let mid = outer.min(6.0);
    let mut lin_panel = |lo: f64, hi: f64| {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        for (y, w) in rule.nodes.iter().zip(&rule.weights) {
            outer_nodes.push((c + h * y, w * h));
        }
    };
    for w in uniform_breaks(1.0, mid, 0.25).windows(2) {
        lin_panel(w[0], w[1]);
    }
    if outer > mid {
        for w in uniform_breaks(mid, outer, 1.0).windows(2) {
            lin_panel(w[0], w[1]);
        }
    }
    let mut inner = Vec::new();
    let (a, b) = ((0.5 * r_in).ln(), r_in.ln());
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    for (y, w) in rule.nodes.iter().zip(&rule.weights) {
        let r = (c + h * y).exp();
        inner.push((r, w * h * r));
    }
    Ok((outer_nodes, inner))
}

/// Half set of unit directions with solid-angle weights; each is used with its antipode.
pub(crate) fn directions(n: usize, r: f64) -> Result<Vec<(Vec<f64>, f64)>> {
    use std::f64::consts::PI;
    Ok(match n {
        1 => vec![(vec![1.0], 1.0)],
        2 => {
            let m = 2 * (16.0 * (1.0 + r)).ceil() as usize;
            let half = m / 2;
            let w = 2.0 * PI / m as f64;
            (0..half)
                .map(|k| {
                    let th = (k as f64 + 0.5) * w;
                    (vec![th.cos(), th.sin()], w)
                })
                .collect()
        }
        3 => {
            let nm = (2 * (3.0 * (1.0 + r)).ceil() as usize).min(48);
            let mphi = (2 * nm).min(96);
            let rule = gauss_legendre(nm)?;
            let wphi = 2.0 * PI / mphi as f64;
            let mut out = Vec::new();
            for (mu, wm) in rule.nodes.iter().zip(&rule.weights) {
                if *mu <= 0.0 {
                    continue;
                }
                let st = (1.0 - mu * mu).sqrt();
                for j in 0..mphi {
                    let ph = (j as f64 + 0.5) * wphi;
                    out.push((vec![st * ph.cos(), st * ph.sin(), *mu], wm * wphi));
                }
            }
            out
        }
        _ => return Err(Error::precondition(format!("dimension {n} outside 1..=3"))),
    })
}

/// Precomputed weights of a pointwise operator at a fixed point, reusable
/// across input functions of the same regularity class.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub x: Vec<f64>,
    pub op: PointwiseOperator,
    pub regularity: Regularity,
    points: Vec<f64>,
    weights: Vec<f64>,
    inner_points: Vec<f64>,
    inner_weights: Vec<f64>,
    /// Boundary function at x.
    pub boundary: f64,
    sign: f64,
    lap_coarse: f64,
    lap_fine: f64,
    pv_tol: f64,
    /// Inner radius of the quadrature (the shell |x - z| < r_in is handled analytically or neglected).
    pub r_in: f64,
}

/// Both shell resolutions of a stencil application.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilValue {
    pub coarse: f64,
    pub fine: f64,
}

impl Stencil {
    fn weighted_sum<U: TestFunction + ?Sized>(
        &self,
        u: &U,
        ux: f64,
        pts: &[f64],
        wts: &[f64],
    ) -> f64 {
        let n = self.x.len();
        let mut acc = 0.0;
        for (z, w) in pts.chunks_exact(n).zip(wts) {
            if *w != 0.0 {
                acc += w * (ux - u.value(z));
            }
        }
        acc
    }

    /// Values with the inner shell at r_in and at r_in/2.
    pub fn apply_both<U: TestFunction + ?Sized>(&self, u: &U) -> Result<StencilValue> {
        check_dim(self.x.len(), u.dim())?;
        let ux = u.value(&self.x);
        let outer = self.weighted_sum(u, ux, &self.points, &self.weights);
        let inner = self.weighted_sum(u, ux, &self.inner_points, &self.inner_weights);
        let lap = if self.lap_coarse != 0.0 {
            u.laplacian(&self.x)
        } else {
            0.0
        };
        let base = self.boundary * ux;
        Ok(StencilValue {
            coarse: self.sign * outer + base + self.lap_coarse * lap,
            fine: self.sign * (outer + inner) + base + self.lap_fine * lap,
        })
    }

    /// Value of the operator on `u`, checked against the halved shell.
    pub fn apply<U: TestFunction + ?Sized>(&self, u: &U) -> Result<f64> {
        if u.regularity().order() < self.regularity.order() {
            return Err(Error::precondition(format!(
                "stencil built for {:?} data, function is {:?}",
                self.regularity,
                u.regularity()
            )));
        }
        let v = self.apply_both(u)?;
        let diff = (v.fine - v.coarse).abs();
        if !(diff <= self.pv_tol) {
            return Err(Error::numerical(
                "principal value not converged under shell halving",
                format!(
                    "x = {:?}, r_in = {:e}: {:.12e} vs {:.12e} (change {:e}, tolerance {:e})",
                    self.x, self.r_in, v.coarse, v.fine, diff, self.pv_tol
                ),
            ));
        }
        Ok(v.fine)
    }

    pub fn len(&self) -> usize {
        self.weights.len() + self.inner_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// H^σ u(x) by the pointwise kernel formula.
pub fn frac_pointwise<U: TestFunction + ?Sized>(
    u: &U,
    sigma: f64,
    x: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    PointwiseOperator::Power { sigma, shift: 0 }.eval(u, x, spec)
}

/// (H + shift)^σ u(x) with shift = ±2k.
pub fn frac_pointwise_shifted<U: TestFunction + ?Sized>(
    u: &U,
    sigma: f64,
    shift: i32,
    x: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    PointwiseOperator::Power { sigma, shift }.eval(u, x, spec)
}

/// H^{-σ} u(x) by the pointwise kernel formula.
pub fn fracint_pointwise<U: TestFunction + ?Sized>(
    u: &U,
    sigma: f64,
    x: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    PointwiseOperator::Integral { sigma, k: 0 }.eval(u, x, spec)
}

/// ∫_{|x - z| < δ} (u(x) - u(z)) F_σ(x, z) dz, the part of the principal value
/// carried by the δ-shell, integrated directly down to where the paired
/// integrand is negligible.
pub fn pv_shell_contribution<U: TestFunction + ?Sized>(
    u: &U,
    sigma: f64,
    x: &[f64],
    delta: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let n = x.len();
    check_dim(u.dim(), n)?;
    KernelKind::FracPower.validate(sigma, n)?;
    let p = u.regularity().order() - 2.0 * sigma;
    if p <= 0.0 {
        return Err(Error::precondition(format!(
            "shell integral diverges: smoothness order {} <= 2sigma = {}",
            u.regularity().order(),
            2.0 * sigma
        )));
    }
    let r_min = (SHELL_TOL * delta.powf(p))
        .powf(1.0 / p)
        .max(min_radius_at(x));
    let kernel = KernelIntegrator::new(KernelKind::FracPower, sigma, n, spec)?;
    let rule = gauss_legendre(RADIAL_POINTS)?;
    let ux = u.value(x);
    let mut acc = 0.0;
    let mut z = vec![0.0; n];
    for w in geometric_breaks(r_min, delta, 2.0).windows(2) {
        let (a, b) = (w[0].ln(), w[1].ln());
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        for (y, wy) in rule.nodes.iter().zip(&rule.weights) {
            let r = (c + h * y).exp();
            let wr = wy * h * r * r.powi(n as i32 - 1);
            for (omega, wo) in directions(n, r)? {
                let mut pair = 0.0;
                for sgn in [1.0, -1.0] {
                    for i in 0..n {
                        z[i] = x[i] + sgn * r * omega[i];
                    }
                    pair += (ux - u.value(&z)) * kernel.value(x, &z)?;
                }
                acc += wr * wo * pair;
            }
        }
    }
    Ok(acc)
}
