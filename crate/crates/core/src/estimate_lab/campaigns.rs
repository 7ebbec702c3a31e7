//! The bound fits of the technical lemmas, grouped by lemma id.
//!
//! Ids follow the order of the lemmas: 5.1 exponential estimate, 5.2 layer
//! integral, 5.3 size and smoothness of F_σ and F_{±2k,σ}, 5.4 the boundary
//! functions, 5.5 the Gaussian bound of the heat kernel, 5.6 F_{-σ}, 5.7
//! H^{-σ}1, 5.8 second-order kernels, 5.9 row integrals, 5.10 shell
//! cancellation (together with the tail integrals of F_σ).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::integrals::{cancellation_integral_with, l1_row_integral, RowKernel, ShellKernel};
use super::{
    fit_bound_constant, norm, BoundFitReport, BoundForm, Comparator, Profile, Sample, SampleShape,
    SamplerSpec, DEFAULT_SAMPLES, DEFAULT_SEED,
};
use crate::derivatives_riesz::{RieszKernel, RieszKernelEval};
use crate::error::{Error, Result};
use crate::frac_ops::{BoundaryIntegrator, KernelIntegrator, KernelKind, QuadratureSpec};
use crate::heat_semigroup::{heat_kernel_s, mu_density};
use crate::quadrature::{integrate, uniform_breaks, AdaptiveOptions};

pub const LEMMA_IDS: [&str; 10] = [
    "5.1", "5.2", "5.3", "5.4", "5.5", "5.6", "5.7", "5.8", "5.9", "5.10",
];

/// Parameters shared by the lemma campaigns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub dimension: usize,
    pub samples: usize,
    pub seed: u64,
    /// σ of the fractional power kernels (lemmas 5.3 and 5.4 and the tail integrals).
    pub sigma: f64,
    pub quad: QuadratureSpec,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            dimension: 1,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            sigma: 0.4,
            quad: QuadratureSpec::default(),
        }
    }
}

/// Runs every fit of lemma `id`.
pub fn lemma_campaign(id: &str, cfg: &CampaignConfig) -> Result<Vec<BoundFitReport>> {
    lemma_forms(id, cfg)?
        .iter()
        .map(|(form, sampler)| {
            let r = fit_bound_constant(form, sampler)?;
            log::info!(
                "{} {}: C* = {:e}, stability {:?}",
                r.lemma,
                r.name,
                r.c_star,
                r.stability_ratio
            );
            Ok(r)
        })
        .collect()
}

type Forms = Vec<(BoundForm, SamplerSpec)>;

/// The forms and samplers of lemma `id`.
pub fn lemma_forms(id: &str, cfg: &CampaignConfig) -> Result<Forms> {
    if !(1..=3).contains(&cfg.dimension) {
        return Err(Error::precondition(format!(
            "dimension {} outside 1..=3",
            cfg.dimension
        )));
    }
    let c = Ctx { cfg };
    match id {
        "5.1" => Ok(c.exponential()),
        "5.2" => c.layer_integral(),
        "5.3" => c.power_kernels(),
        "5.4" => c.boundary_functions(),
        "5.5" => Ok(c.heat_gaussian()),
        "5.6" => c.integral_kernels(),
        "5.7" => c.integral_of_one(),
        "5.8" => c.second_order(),
        "5.9" => c.rows(),
        "5.10" => c.shells(),
        _ => Err(Error::precondition(format!(
            "unknown lemma id {id:?}; expected one of {}",
            LEMMA_IDS.join(", ")
        ))),
    }
}

struct Ctx<'a> {
    cfg: &'a CampaignConfig,
}

fn sq(a: &[f64], b: &[f64], sign: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p + sign * q) * (p + sign * q))
        .sum()
}

fn fd_gradient_norm(f: &dyn Fn(&[f64]) -> Result<f64>, x: &[f64]) -> Result<f64> {
    let mut g2 = 0.0;
    let mut y = x.to_vec();
    for a in 0..x.len() {
        let h = 1e-4 * (1.0 + x[a].abs());
        y[a] = x[a] + h;
        let fp = f(&y)?;
        y[a] = x[a] - h;
        let fm = f(&y)?;
        y[a] = x[a];
        let d = (fp - fm) / (2.0 * h);
        g2 += d * d;
    }
    Ok(g2.sqrt())
}

impl Ctx<'_> {
    fn n(&self) -> usize {
        self.cfg.dimension
    }

    fn sampler(&self, shape: SampleShape) -> SamplerSpec {
        SamplerSpec::new(shape, self.n(), self.cfg.samples, self.cfg.seed)
    }

    fn kernel(&self, kind: KernelKind, sigma: f64) -> Result<Arc<KernelIntegrator>> {
        kind.validate(sigma, self.n())?;
        self.cfg.quad.validate()?;
        Ok(Arc::new(KernelIntegrator::new(
            kind,
            sigma,
            self.n(),
            &self.cfg.quad,
        )?))
    }

    fn boundary(&self, kind: KernelKind, sigma: f64) -> Result<Arc<BoundaryIntegrator>> {
        kind.validate(sigma, self.n())?;
        self.cfg.quad.validate()?;
        Ok(Arc::new(BoundaryIntegrator::new(
            kind,
            sigma,
            self.n(),
            &self.cfg.quad,
        )?))
    }

    fn exponential(&self) -> Forms {
        [0.25, 1.0]
            .into_iter()
            .map(|a| {
                let form = BoundForm::new(
                    "5.1",
                    format!("psi est: a = {a}"),
                    Comparator::Psi { a },
                    move |s| {
                        Ok((-a * (s.s * sq(&s.x, &s.z, 1.0) + sq(&s.x, &s.z, -1.0) / s.s)).exp())
                    },
                );
                (form, self.sampler(SampleShape::PairWithS))
            })
            .collect()
    }

    fn layer_integral(&self) -> Result<Forms> {
        let n = self.n();
        let half = 0.5 * n as f64;
        let cases = [
            (0.0, self.cfg.sigma),
            (0.5, self.cfg.sigma),
            (0.0, -half),
            (0.0, -half - 0.4),
        ];
        Ok(cases
            .into_iter()
            .map(|(eta, rho)| {
                let form = BoundForm::new(
                    "5.2",
                    format!("layer integral: eta = {eta}, rho = {rho}"),
                    Comparator::LayerIntegral { n, eta, rho },
                    move |s| layer_integral_lhs(n, eta, rho, 0.25, &s.x, &s.z),
                );
                (form, self.sampler(SampleShape::Pair))
            })
            .collect())
    }

    fn power_kinds(&self) -> [(KernelKind, &'static str); 3] {
        [
            (KernelKind::FracPower, "F_sigma"),
            (KernelKind::FracPowerShiftUp(1), "F_{2,sigma}"),
            (KernelKind::FracPowerShiftDown(1), "F_{-2,sigma}"),
        ]
    }

    fn power_kernels(&self) -> Result<Forms> {
        let (n, sigma) = (self.n(), self.cfg.sigma);
        let mut out = Vec::new();
        for (kind, label) in self.power_kinds() {
            let k = self.kernel(kind, sigma)?;
            let k2 = k.clone();
            out.push((
                BoundForm::new(
                    "5.3",
                    format!("F sig est: {label}, sigma = {sigma}"),
                    Comparator::kernel_size(n, 2.0 * sigma),
                    move |s| k.value(&s.x, &s.z),
                ),
                self.sampler(SampleShape::Pair),
            ));
            out.push((
                BoundForm::new(
                    "5.3",
                    format!("F sig suave: {label}, sigma = {sigma}"),
                    Comparator::kernel_smoothness(n, 2.0 * sigma),
                    move |s| Ok(k2.value(&s.x, &s.z)? - k2.value(&s.x2, &s.z)?),
                ),
                self.sampler(SampleShape::Smoothness),
            ));
        }
        Ok(out)
    }

    fn boundary_functions(&self) -> Result<Forms> {
        let sigma = self.cfg.sigma;
        let mut out = Vec::new();
        for (kind, label) in self.power_kinds() {
            let label = label.replace('F', "B");
            let b = self.boundary(kind, sigma)?;
            let b2 = b.clone();
            let analytic = !matches!(kind, KernelKind::FracPowerShiftDown(_));
            out.push((
                BoundForm::new(
                    "5.4",
                    format!("B sig est: {label}, sigma = {sigma}"),
                    Comparator::Growth { gamma: 2.0 * sigma },
                    move |s| b.value(&s.x),
                ),
                self.sampler(SampleShape::Point).with_box(20.0),
            ));
            out.push((
                BoundForm::new(
                    "5.4",
                    format!("B sig suav: grad {label}, sigma = {sigma}"),
                    Comparator::GradientGrowth { gamma: 2.0 * sigma },
                    move |s| {
                        if analytic {
                            Ok(norm(&b2.jet(&s.x, 1)?.grad))
                        } else {
                            fd_gradient_norm(&|y| b2.value(y), &s.x)
                        }
                    },
                ),
                self.sampler(SampleShape::Point).with_box(20.0),
            ));
        }
        Ok(out)
    }

    fn heat_gaussian(&self) -> Forms {
        let n = self.n();
        vec![(
            BoundForm::new(
                "5.5",
                "heat kernel Gaussian bound",
                Comparator::HeatGaussian { n },
                |s| heat_kernel_s(s.s, &s.x, &s.z),
            ),
            self.sampler(SampleShape::PairWithS),
        )]
    }

    fn integral_kernels(&self) -> Result<Forms> {
        let n = self.n() as f64;
        let mut out = Vec::new();
        for sigma in [0.3, 0.5, 0.8, 1.0] {
            let k = self.kernel(KernelKind::FracIntegral, sigma)?;
            out.push((
                BoundForm::new(
                    "5.6",
                    format!("F-sig est: sigma = {sigma}"),
                    Comparator::Size {
                        profile: Profile::by_exponent(n - 2.0 * sigma),
                    },
                    move |s| k.value(&s.x, &s.z),
                ),
                self.sampler(SampleShape::Pair),
            ));
        }
        let k = self.kernel(KernelKind::FracIntegral, 0.5)?;
        out.push((
            BoundForm::new(
                "5.6",
                "F-sig est: negative part, sigma = 0.5",
                Comparator::Unit,
                move |s| Ok((-k.value(&s.x, &s.z)?).max(0.0)),
            ),
            self.sampler(SampleShape::Pair),
        ));
        for sigma in [0.5, 1.0] {
            let profile = Profile::by_exponent(n + 1.0 - 2.0 * sigma);
            let k = self.kernel(KernelKind::FracIntegral, sigma)?;
            let parts: [(
                &str,
                Box<dyn Fn(&KernelIntegrator, &Sample) -> Result<f64> + Send + Sync>,
            ); 3] = [
                (
                    "grad_x F_{-sigma}",
                    Box::new(|k, s| Ok(norm(&k.jet(&s.x, &s.z, 1)?.grad))),
                ),
                (
                    "x_1 F_{-sigma}",
                    Box::new(|k, s| Ok(s.x[0] * k.value(&s.x, &s.z)?)),
                ),
                (
                    "z_1 F_{-sigma}",
                    Box::new(|k, s| Ok(s.z[0] * k.value(&s.x, &s.z)?)),
                ),
            ];
            for (label, f) in parts {
                let k = k.clone();
                out.push((
                    BoundForm::new(
                        "5.6",
                        format!("Ai F-sig est: {label}, sigma = {sigma}"),
                        Comparator::Size { profile },
                        move |s| f(&k, s),
                    ),
                    self.sampler(SampleShape::Pair),
                ));
            }
            let k2 = k.clone();
            out.push((
                BoundForm::new(
                    "5.6",
                    format!("F-sig suave: sigma = {sigma}"),
                    Comparator::Smoothness { profile },
                    move |s| Ok(k2.value(&s.x, &s.z)? - k2.value(&s.x2, &s.z)?),
                ),
                self.sampler(SampleShape::Smoothness),
            ));
        }
        let sigma = 0.5;
        let profile = Profile::by_exponent(n + 2.0 - 2.0 * sigma);
        let k = self.kernel(KernelKind::FracIntegral, sigma)?;
        let parts: [(
            &str,
            Box<dyn Fn(&KernelIntegrator, &[f64], &[f64]) -> Result<f64> + Send + Sync>,
        ); 3] = [
            (
                "d_1 F_{-sigma}",
                Box::new(|k, x, z| Ok(k.jet(x, z, 1)?.grad[0])),
            ),
            (
                "x_1 F_{-sigma}",
                Box::new(|k, x, z| Ok(x[0] * k.value(x, z)?)),
            ),
            (
                "z_1 F_{-sigma}",
                Box::new(|k, x, z| Ok(z[0] * k.value(x, z)?)),
            ),
        ];
        for (label, f) in parts {
            let k = k.clone();
            out.push((
                BoundForm::new(
                    "5.6",
                    format!("nab F-sig suav: {label}, sigma = {sigma}"),
                    Comparator::Smoothness { profile },
                    move |s| Ok(f(&k, &s.x, &s.z)? - f(&k, &s.x2, &s.z)?),
                ),
                self.sampler(SampleShape::Smoothness),
            ));
        }
        Ok(out)
    }

    fn integral_of_one(&self) -> Result<Forms> {
        let mut out = Vec::new();
        for sigma in [0.3, 0.5, 1.0] {
            let b = self.boundary(KernelKind::FracIntegral, sigma)?;
            let b2 = b.clone();
            out.push((
                BoundForm::new(
                    "5.7",
                    format!("H-sig 1: size, sigma = {sigma}"),
                    Comparator::Decay { p: 2.0 * sigma },
                    move |s| b.value(&s.x),
                ),
                self.sampler(SampleShape::Point).with_box(20.0),
            ));
            out.push((
                BoundForm::new(
                    "5.7",
                    format!("H-sig 1: gradient, sigma = {sigma}"),
                    Comparator::Decay {
                        p: 1.0 + 2.0 * sigma,
                    },
                    move |s| Ok(norm(&b2.jet(&s.x, 1)?.grad)),
                ),
                self.sampler(SampleShape::Point).with_box(20.0),
            ));
        }
        Ok(out)
    }

    fn second_order(&self) -> Result<Forms> {
        let n = self.n();
        let k = self.kernel(KernelKind::FracIntegral, 1.0)?;
        type Part = Box<dyn Fn(&[f64], &[f64]) -> Result<f64> + Send + Sync>;
        let mut parts: Vec<(String, Part)> = Vec::new();
        let k1 = k.clone();
        parts.push((
            "d^2_11 F_{-1}".into(),
            Box::new(move |x, z| Ok(k1.jet(x, z, 2)?.hess_at(0, 0))),
        ));
        let k1 = k.clone();
        parts.push((
            "x_1 d_1 F_{-1}".into(),
            Box::new(move |x, z| Ok(x[0] * k1.jet(x, z, 1)?.grad[0])),
        ));
        let k1 = k.clone();
        parts.push((
            "x_1 x_1 F_{-1}".into(),
            Box::new(move |x, z| Ok(x[0] * x[0] * k1.value(x, z)?)),
        ));
        for (i, j) in [(1, 1), (1, -1), (-1, -1)] {
            let r = Arc::new(RieszKernelEval::new(
                RieszKernel::Second(i, j),
                n,
                &self.cfg.quad,
            )?);
            parts.push((format!("R_({i},{j})"), Box::new(move |x, z| r.value(x, z))));
        }
        let mut out = Vec::new();
        for (label, f) in parts {
            let f = Arc::new(f);
            let f2 = f.clone();
            out.push((
                BoundForm::new(
                    "5.8",
                    format!("R size: {label}"),
                    Comparator::kernel_size(n, 0.0),
                    move |s| f(&s.x, &s.z),
                ),
                self.sampler(SampleShape::Pair),
            ));
            out.push((
                BoundForm::new(
                    "5.8",
                    format!("Rij suave: {label}"),
                    Comparator::kernel_smoothness(n, 0.0),
                    move |s| Ok(f2(&s.x, &s.z)? - f2(&s.x2, &s.z)?),
                ),
                self.sampler(SampleShape::Smoothness),
            ));
        }
        Ok(out)
    }

    fn rows(&self) -> Result<Forms> {
        let kinds = [
            RowKernel::WeightedX { sigma: 0.5 },
            RowKernel::WeightedX { sigma: 1.0 },
            RowKernel::WeightedZ { sigma: 0.5 },
            RowKernel::WeightedZ { sigma: 1.0 },
            RowKernel::CoordinateDerivative { i: 1, j: 1 },
        ];
        Ok(kinds
            .into_iter()
            .map(|kind| {
                let q = self.cfg.quad.clone();
                (
                    BoundForm::new(
                        "5.9",
                        format!("row integral: {kind:?}"),
                        Comparator::Unit,
                        move |s| l1_row_integral(kind, &s.x, &q),
                    ),
                    self.sampler(SampleShape::Point).with_box(20.0),
                )
            })
            .collect())
    }

    fn shells(&self) -> Result<Forms> {
        let mut out = Vec::new();
        let mut kinds = Vec::new();
        for i in [1, -1] {
            kinds.push((ShellKernel::LadderHalf(i), format!("A_({i}) F_{{-1/2}}")));
            kinds.push((
                ShellKernel::LadderHalfShifted(i),
                format!("A_({i}) F_{{2,-1/2}}"),
            ));
        }
        for (kind, label) in kinds {
            let q = self.cfg.quad.clone();
            out.push((
                BoundForm::new(
                    "5.10",
                    format!("shell cancellation: {label}"),
                    Comparator::Unit,
                    move |s| cancellation_integral_with(kind, &s.x, s.r1, s.r2, &q),
                ),
                self.sampler(SampleShape::Shell)
                    .with_box(6.0)
                    .with_range(1e-4, 8.0),
            ));
        }
        let sigma = self.cfg.sigma;
        let q = self.cfg.quad.clone();
        let kind = ShellKernel::Power { sigma };
        out.push((
            BoundForm::new(
                "5.10",
                format!("tail integral: F_sigma, sigma = {sigma}"),
                Comparator::ShellDecay { gamma: 2.0 * sigma },
                move |s| cancellation_integral_with(kind, &s.x, s.r1, s.r2, &q),
            ),
            self.sampler(SampleShape::Tail)
                .with_box(6.0)
                .with_range(1e-3, 8.0),
        ));
        Ok(out)
    }
}

/// ∫_0^1 ((1-s)/s)^{n/2} s^{-η} e^{-a[s|x+z|² + |x-z|²/s]} dμ_ρ(s), integrated
/// in log s on (0, 1/2] and in -log(1-s) on [1/2, 1).
pub fn layer_integral_lhs(
    n: usize,
    eta: f64,
    rho: f64,
    a: f64,
    x: &[f64],
    z: &[f64],
) -> Result<f64> {
    let plus = sq(x, z, 1.0);
    let minus = sq(x, z, -1.0);
    let half = 0.5 * n as f64;
    let f = |s: f64| -> f64 {
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        let mu = mu_density(s, rho).unwrap_or(0.0);
        ((1.0 - s) / s).powf(half) * s.powf(-eta) * (-a * (s * plus + minus / s)).exp() * mu
    };
    let opts = AdaptiveOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-10,
        max_intervals: 4000,
    };
    let lo = -80.0;
    let hi = 0.5f64.ln();
    let left = integrate(
        |u| {
            let s = u.exp();
            f(s) * s
        },
        lo,
        hi,
        &uniform_breaks(lo, hi, 2.0),
        opts,
    )?;
    let right = integrate(
        |y| {
            let e = (-y).exp();
            f(1.0 - e) * e
        },
        2f64.ln(),
        60.0,
        &uniform_breaks(2f64.ln(), 60.0, 2.0),
        opts,
    )?;
    Ok(left.value + right.value)
}
