//! Numerical campaigns behind the qualitative estimates. Fits the constants
//! of the kernel bounds and checks the cancellation and integrability
//! hypotheses of the abstract regularity result. Also measures the Schauder
//! ratios of the fractional operators.
//!
//! A bound |q| ≤ C·comparator counts as verified when the fitted C* is finite
//! and does not grow by more than 10% when the sample is doubled.

mod campaigns;
mod integrals;
mod schauder;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::holder_spaces::DEFAULT_SEED;

pub use campaigns::{layer_integral_lhs, lemma_campaign, lemma_forms, CampaignConfig, LEMMA_IDS};
pub use integrals::{
    cancellation_integral, cancellation_integral_with, l1_row_bound, l1_row_integral, mollify,
    MollifierSpec, RowKernel, ShellKernel,
};
pub use schauder::{
    admissible_grid, factored_power, family_member, family_members, schauder_ratio, schauder_sweep,
    FamilyKind, FamilySpec, SchauderCase, SchauderOptions, SchauderReport,
};

/// Sample count of the campaigns.
pub const DEFAULT_SAMPLES: usize = 10_000;
/// Accepted growth of C* under sample doubling.
pub const KERNEL_STABILITY: f64 = 1.10;
/// Accepted growth of a Schauder ratio under family doubling.
pub const FAMILY_STABILITY: f64 = 1.15;

/// Candidate values of the constant C inside exponentials, tried in order.
const EXP_LADDER: [f64; 14] = [
    0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0, 2048.0,
];
const COARSE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// One sampled configuration. Unused fields stay empty or zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// x, or x₁ in smoothness quotients.
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    /// Base point x₂ of smoothness quotients.
    pub x2: Vec<f64>,
    /// Meda parameter.
    pub s: f64,
    pub r1: f64,
    pub r2: f64,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Singular profile of a comparator in d = |x - z|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// d^{-p}.
    Power(f64),
    /// 1 + log(C/d²) where C/d² > 1, else 1.
    Log,
    Flat,
}

impl Profile {
    /// The three-case profile d^{-e}, log, 1 by the sign of e.
    pub fn by_exponent(e: f64) -> Profile {
        if e.abs() < 1e-12 {
            Profile::Log
        } else if e > 0.0 {
            Profile::Power(e)
        } else {
            Profile::Flat
        }
    }

    fn eval(&self, d: f64, c: f64) -> f64 {
        match *self {
            Profile::Power(p) => d.powf(-p),
            Profile::Log => {
                let q = c / (d * d);
                if q > 1.0 {
                    1.0 + q.ln()
                } else {
                    1.0
                }
            }
            Profile::Flat => 1.0,
        }
    }
}

/// Right-hand sides of the bounds, up to the multiplicative constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Comparator {
    /// e^{-(a/4)|x||x-z|} e^{-(a/4)|x-z|²/s}.
    Psi {
        a: f64,
    },
    /// I_{η,ρ}(x,z) e^{-|x||x-z|/C} e^{-|x-z|²/C}.
    LayerIntegral {
        n: usize,
        eta: f64,
        rho: f64,
    },
    /// profile(|x-z|) e^{-|x||x-z|/C} e^{-|x-z|²/C}. A power n + γ is the kernel
    /// size hypothesis with exponent γ.
    Size {
        profile: Profile,
    },
    /// |x₁-x₂| profile(|x₂-z|) e^{-|z||x₂-z|/C} e^{-|x₂-z|²/C}.
    Smoothness {
        profile: Profile,
    },
    /// ((1-s)/s)^{n/2} e^{-|x||x-z|/C} e^{-|x-z|²/(Cs)}.
    HeatGaussian {
        n: usize,
    },
    /// 1 + |x|^γ.
    Growth {
        gamma: f64,
    },
    /// |x| for |x| ≤ 1, |x|^{γ-1} beyond.
    GradientGrowth {
        gamma: f64,
    },
    /// (1 + |x|)^{-p}.
    Decay {
        p: f64,
    },
    /// r₁^{-γ}.
    ShellDecay {
        gamma: f64,
    },
    Unit,
}

impl Comparator {
    /// Kernel size hypothesis |K| ≤ C|x-z|^{-(n+γ)}e^{…}e^{…}.
    pub fn kernel_size(n: usize, gamma: f64) -> Self {
        Comparator::Size {
            profile: Profile::Power(n as f64 + gamma),
        }
    }

    /// Kernel smoothness hypothesis with exponent n + 1 + γ.
    pub fn kernel_smoothness(n: usize, gamma: f64) -> Self {
        Comparator::Smoothness {
            profile: Profile::Power(n as f64 + 1.0 + gamma),
        }
    }

    pub fn uses_exp_constant(&self) -> bool {
        matches!(
            self,
            Comparator::LayerIntegral { .. }
                | Comparator::Size { .. }
                | Comparator::Smoothness { .. }
                | Comparator::HeatGaussian { .. }
        )
    }

    /// Argument E of the exponential factor e^{-E/C}.
    fn exp_argument(&self, s: &Sample) -> f64 {
        match self {
            Comparator::LayerIntegral { .. } | Comparator::Size { .. } => {
                let d = dist(&s.x, &s.z);
                norm(&s.x) * d + d * d
            }
            Comparator::Smoothness { .. } => {
                let d = dist(&s.x2, &s.z);
                norm(&s.z) * d + d * d
            }
            Comparator::HeatGaussian { .. } => {
                let d = dist(&s.x, &s.z);
                norm(&s.x) * d + d * d / s.s
            }
            _ => 0.0,
        }
    }

    /// Value at `s` with exponential constant `c`.
    pub fn eval(&self, s: &Sample, c: f64) -> f64 {
        match *self {
            Comparator::Psi { a } => {
                let d = dist(&s.x, &s.z);
                (-0.25 * a * (norm(&s.x) * d + d * d / s.s)).exp()
            }
            Comparator::LayerIntegral { n, eta, rho } => {
                let d = dist(&s.x, &s.z);
                let profile = Profile::by_exponent(n as f64 + 2.0 * eta + 2.0 * rho);
                profile.eval(d, c) * (-self.exp_argument(s) / c).exp()
            }
            Comparator::Size { profile } => {
                profile.eval(dist(&s.x, &s.z), c) * (-self.exp_argument(s) / c).exp()
            }
            Comparator::Smoothness { profile } => {
                dist(&s.x, &s.x2)
                    * profile.eval(dist(&s.x2, &s.z), c)
                    * (-self.exp_argument(s) / c).exp()
            }
            Comparator::HeatGaussian { n } => {
                ((1.0 - s.s) / s.s).powf(0.5 * n as f64) * (-self.exp_argument(s) / c).exp()
            }
            Comparator::Growth { gamma } => 1.0 + norm(&s.x).powf(gamma),
            Comparator::GradientGrowth { gamma } => {
                let r = norm(&s.x);
                if r <= 1.0 {
                    r
                } else {
                    r.powf(gamma - 1.0)
                }
            }
            Comparator::Decay { p } => (1.0 + norm(&s.x)).powf(-p),
            Comparator::ShellDecay { gamma } => s.r1.powf(-gamma),
            Comparator::Unit => 1.0,
        }
    }
}

/// Evaluable left-hand side of a bound.
pub type Quantity = Arc<dyn Fn(&Sample) -> Result<f64> + Send + Sync>;

/// A bound |quantity| ≤ C·comparator to be fitted.
#[derive(Clone)]
pub struct BoundForm {
    /// Which display, e.g. "F sig est: F_sigma".
    pub name: String,
    /// Lemma id, e.g. "5.3".
    pub lemma: String,
    pub comparator: Comparator,
    pub quantity: Quantity,
}

impl fmt::Debug for BoundForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundForm")
            .field("name", &self.name)
            .field("lemma", &self.lemma)
            .field("comparator", &self.comparator)
            .finish()
    }
}

impl BoundForm {
    pub fn new(
        lemma: &str,
        name: impl Into<String>,
        comparator: Comparator,
        quantity: impl Fn(&Sample) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        BoundForm {
            name: name.into(),
            lemma: lemma.into(),
            comparator,
            quantity: Arc::new(quantity),
        }
    }
}

/// Geometry of the sampled configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleShape {
    /// x uniform in the box.
    Point,
    /// x uniform in the box, z = x + dω with d log-uniform in [d_min, d_max].
    Pair,
    /// z uniform in the box, x₂ = z + dω, x₁ = x₂ + e ω' with e/d log-uniform in [1e-3, 0.3].
    Smoothness,
    /// A pair plus s ∈ (0, 1) uniform in log(s/(1-s)) ∈ [-9, 9].
    PairWithS,
    /// x uniform in the box, d_min ≤ r₁ < r₂ ≤ d_max log-uniform.
    Shell,
    /// x uniform in the box, r₁ log-uniform, r₂ = ∞.
    Tail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub shape: SampleShape,
    pub dimension: usize,
    pub samples: usize,
    pub seed: u64,
    pub half_width: f64,
    pub d_min: f64,
    pub d_max: f64,
    /// Explicit points; replaces random drawing and disables the stability check.
    pub fixed: Option<Vec<Sample>>,
}

impl SamplerSpec {
    pub fn new(shape: SampleShape, dimension: usize, samples: usize, seed: u64) -> Self {
        SamplerSpec {
            shape,
            dimension,
            samples,
            seed,
            half_width: 4.0,
            d_min: 1e-3,
            d_max: 4.0,
            fixed: None,
        }
    }

    pub fn with_box(mut self, half_width: f64) -> Self {
        self.half_width = half_width;
        self
    }

    pub fn with_range(mut self, d_min: f64, d_max: f64) -> Self {
        self.d_min = d_min;
        self.d_max = d_max;
        self
    }

    pub fn fixed(dimension: usize, points: Vec<Sample>) -> Self {
        SamplerSpec {
            samples: points.len(),
            fixed: Some(points),
            ..SamplerSpec::new(SampleShape::Point, dimension, 0, DEFAULT_SEED)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.fixed.is_none() {
            if self.samples == 0 {
                return Err(Error::precondition("sampler needs at least one sample"));
            }
            if !(self.half_width > 0.0 && self.d_min > 0.0 && self.d_min < self.d_max) {
                return Err(Error::precondition(format!(
                    "sampler needs L > 0 and 0 < d_min < d_max (L={}, d_min={}, d_max={})",
                    self.half_width, self.d_min, self.d_max
                )));
            }
        }
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::precondition(format!(
                "dimension {} outside 1..=3",
                self.dimension
            )));
        }
        Ok(())
    }

    /// The first `count` configurations of the stream seeded by `seed`.
    pub fn draw(&self, count: usize, seed: u64) -> Vec<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.draw_one(&mut rng)).collect()
    }

    fn draw_one(&self, rng: &mut ChaCha8Rng) -> Sample {
        let n = self.dimension;
        let l = self.half_width;
        let in_box =
            |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-l..=l)).collect() };
        let log_uniform =
            |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (rng.gen_range(lo.ln()..hi.ln())).exp();
        let step = |p: &[f64], d: f64, w: &[f64]| -> Vec<f64> {
            p.iter().zip(w).map(|(a, b)| a + d * b).collect()
        };
        match self.shape {
            SampleShape::Point => Sample {
                x: in_box(rng),
                ..Sample::default()
            },
            SampleShape::Pair | SampleShape::PairWithS => {
                let x = in_box(rng);
                let d = log_uniform(rng, self.d_min, self.d_max);
                let w = unit_vector(rng, n);
                let z = step(&x, d, &w);
                let s = if self.shape == SampleShape::PairWithS {
                    let y: f64 = rng.gen_range(-9.0..9.0);
                    1.0 / (1.0 + (-y).exp())
                } else {
                    0.0
                };
                Sample {
                    x,
                    z,
                    s,
                    ..Sample::default()
                }
            }
            SampleShape::Smoothness => {
                let z = in_box(rng);
                let d = log_uniform(rng, self.d_min, self.d_max);
                let w = unit_vector(rng, n);
                let x2 = step(&z, d, &w);
                let e = d * log_uniform(rng, 1e-3, 0.3);
                let w2 = unit_vector(rng, n);
                let x1 = step(&x2, e, &w2);
                Sample {
                    x: x1,
                    z,
                    x2,
                    ..Sample::default()
                }
            }
            SampleShape::Shell => {
                let x = in_box(rng);
                let a = log_uniform(rng, self.d_min, self.d_max);
                let b = log_uniform(rng, self.d_min, self.d_max);
                let (r1, r2) = if a < b { (a, b) } else { (b, a) };
                Sample {
                    x,
                    r1,
                    r2: if r1 == r2 { r1 * (1.0 + 1e-9) } else { r2 },
                    ..Sample::default()
                }
            }
            SampleShape::Tail => {
                let x = in_box(rng);
                let r1 = log_uniform(rng, self.d_min, self.d_max);
                Sample {
                    x,
                    r1,
                    r2: f64::INFINITY,
                    ..Sample::default()
                }
            }
        }
    }
}

/// Uniform direction on S^{n-1} (Box–Muller normals, normalized).
fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..n)
            .map(|_| {
                let u1: f64 = 1.0 - rng.gen::<f64>();
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let r = norm(&v);
        if r > 1e-12 {
            return v.into_iter().map(|a| a / r).collect();
        }
    }
}

/// Outcome of a bound fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundFitReport {
    pub name: String,
    pub lemma: String,
    pub comparator: Comparator,
    /// max |quantity| / comparator over the sample.
    pub c_star: f64,
    /// The same maximum over the doubled sample.
    pub c_star_doubled: Option<f64>,
    pub samples: usize,
    /// Points dropped because quantity and comparator both vanished there.
    pub rejected: usize,
    pub argmax: Sample,
    /// Frozen exponential constant C of the comparator, when it has one.
    pub exp_constant: Option<f64>,
    /// c_star_doubled / c_star.
    pub stability_ratio: Option<f64>,
    pub stable: Option<bool>,
    pub seed: u64,
}

impl BoundFitReport {
    pub fn passed(&self) -> bool {
        self.c_star.is_finite() && self.stable != Some(false)
    }
}

fn quantities(form: &BoundForm, samples: &[Sample]) -> Result<Vec<f64>> {
    samples
        .par_iter()
        .map(|s| (form.quantity)(s).map(f64::abs))
        .collect()
}

/// Chooses the exponential constant on a coarse sample: the smallest ladder
/// value whose ratio does not peak in the far half of the exponent range,
/// then doubled.
fn fit_exp_constant(form: &BoundForm, samples: &[Sample], q: &[f64]) -> f64 {
    // Only points where the quantity is visible can say anything about C.
    let live: Vec<(&Sample, f64, f64)> = samples
        .iter()
        .zip(q)
        .filter(|(_, &qi)| qi > 0.0)
        .map(|(s, &qi)| (s, qi, form.comparator.exp_argument(s)))
        .collect();
    let half = 0.5 * live.iter().map(|p| p.2).fold(0.0, f64::max);
    for &c in &EXP_LADDER {
        let mut head = 0.0f64;
        let mut tail = 0.0f64;
        for &(s, qi, ei) in &live {
            let cmp = form.comparator.eval(s, c);
            // An underflowed comparator under a visible quantity means C is too small.
            let r = if cmp > 0.0 && cmp.is_finite() {
                qi / cmp
            } else {
                f64::INFINITY
            };
            if ei < half {
                head = head.max(r);
            } else {
                tail = tail.max(r);
            }
        }
        if tail.is_finite() && tail <= head {
            return 2.0 * c;
        }
    }
    let c = 2.0 * EXP_LADDER[EXP_LADDER.len() - 1];
    log::warn!(
        "{}: no ladder constant tames the far field, using C = {c}",
        form.name
    );
    c
}

/// Fits C* = max |q| / comparator, with the exponential constant (if any)
/// frozen from a coarse first pass, and records stability under doubling.
pub fn fit_bound_constant(form: &BoundForm, sampler: &SamplerSpec) -> Result<BoundFitReport> {
    sampler.validate()?;
    let (points, first) = match &sampler.fixed {
        Some(p) => {
            if p.is_empty() {
                return Err(Error::precondition("fixed sampler is empty"));
            }
            (p.clone(), p.len())
        }
        None => (
            sampler.draw(2 * sampler.samples, sampler.seed),
            sampler.samples,
        ),
    };
    let q = quantities(form, &points)?;
    let exp_constant = if form.comparator.uses_exp_constant() {
        Some(match &sampler.fixed {
            Some(_) => fit_exp_constant(form, &points, &q),
            None => {
                let coarse_n = (sampler.samples / 4).max(64);
                let coarse = sampler.draw(coarse_n, sampler.seed ^ COARSE_SALT);
                let cq = quantities(form, &coarse)?;
                fit_exp_constant(form, &coarse, &cq)
            }
        })
    } else {
        None
    };
    let c = exp_constant.unwrap_or(1.0);
    let mut rejected = 0;
    let mut best: Option<(f64, usize)> = None;
    let mut c_first = None;
    for (i, (s, qi)) in points.iter().zip(&q).enumerate() {
        if i == first {
            c_first = best;
        }
        let cmp = form.comparator.eval(s, c);
        if !(cmp > 0.0 && cmp.is_finite()) && *qi == 0.0 {
            log::debug!(
                "{}: comparator vanishes at {s:?}, point rejected",
                form.name
            );
            if i < first {
                rejected += 1;
            }
            continue;
        }
        let r = qi / cmp;
        if !r.is_finite() {
            return Err(Error::numerical(
                format!("{}: non-finite ratio", form.name),
                format!("quantity {qi:e}, comparator {cmp:e} at {s:?}"),
            ));
        }
        if best.is_none_or(|(b, _)| r > b) {
            best = Some((r, i));
        }
    }
    if sampler.fixed.is_some() {
        c_first = best;
    }
    let Some((c_star, arg)) = c_first else {
        return Err(Error::precondition(format!(
            "{}: every sampled point was rejected",
            form.name
        )));
    };
    let (c_star_doubled, stability_ratio) = if sampler.fixed.is_none() {
        let c2 = best.map(|b| b.0).unwrap_or(c_star);
        let ratio = if c_star == 0.0 && c2 == 0.0 {
            1.0
        } else {
            c2 / c_star
        };
        (Some(c2), Some(ratio))
    } else {
        (None, None)
    };
    Ok(BoundFitReport {
        name: form.name.clone(),
        lemma: form.lemma.clone(),
        comparator: form.comparator,
        c_star,
        c_star_doubled,
        samples: first,
        rejected,
        argmax: points[arg].clone(),
        exp_constant,
        stability_ratio,
        stable: stability_ratio.map(|r| r <= KERNEL_STABILITY),
        seed: sampler.seed,
    })
}
