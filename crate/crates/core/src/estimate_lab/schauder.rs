//! Schauder ratios ‖T u‖_target / ‖u‖_source over families of test functions.
//!
//! T u is computed on the spectral side (expansion, multiplier, synthesis) and
//! both norms are measured on a grid with ladder derivatives.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FAMILY_STABILITY;
use crate::derivatives_riesz::{ladder_apply, riesz_spectral, LadderIndex, RieszKind};
use crate::error::{Error, Result};
use crate::frac_ops::{multiplier_apply, MultiplierSpec};
use crate::functions::{Bump, Gaussian, SpectralFunction, TestFunction};
use crate::hermite_basis::{expand, quadrature_rule, SpectralCoeffs};
use crate::holder_spaces::{norm_ck_alpha_with, sample_with_derivatives, PairSampling};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchauderCase {
    A1,
    A2,
    A3,
    B1,
    B2,
    B3,
    /// R_1 on C^{0,α}.
    RieszFirst,
    /// R_{11} on C^{0,α}.
    RieszSecond,
    /// R_1^* on C^{0,α}.
    RieszAdjoint,
}

impl fmt::Display for SchauderCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SchauderCase::A1 => "A1",
            SchauderCase::A2 => "A2",
            SchauderCase::A3 => "A3",
            SchauderCase::B1 => "B1",
            SchauderCase::B2 => "B2",
            SchauderCase::B3 => "B3",
            SchauderCase::RieszFirst => "R_i",
            SchauderCase::RieszSecond => "R_ij",
            SchauderCase::RieszAdjoint => "R_i^*",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for SchauderCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "A1" => SchauderCase::A1,
            "A2" => SchauderCase::A2,
            "A3" => SchauderCase::A3,
            "B1" => SchauderCase::B1,
            "B2" => SchauderCase::B2,
            "B3" => SchauderCase::B3,
            "R_i" | "Ri" => SchauderCase::RieszFirst,
            "R_ij" | "Rij" => SchauderCase::RieszSecond,
            "R_i^*" | "Ri*" | "R_i*" => SchauderCase::RieszAdjoint,
            _ => return Err(Error::precondition(format!("unknown Schauder case {s:?}"))),
        })
    }
}

/// Space C^{k,a}.
pub type Space = (usize, f64);

impl SchauderCase {
    pub const ALL: [SchauderCase; 9] = [
        SchauderCase::A1,
        SchauderCase::A2,
        SchauderCase::A3,
        SchauderCase::B1,
        SchauderCase::B2,
        SchauderCase::B3,
        SchauderCase::RieszFirst,
        SchauderCase::RieszSecond,
        SchauderCase::RieszAdjoint,
    ];

    fn is_riesz(self) -> bool {
        matches!(
            self,
            SchauderCase::RieszFirst | SchauderCase::RieszSecond | SchauderCase::RieszAdjoint
        )
    }

    /// Checks the hypotheses on (α, σ), quoting the first one violated.
    pub fn check(self, alpha: f64, sigma: f64) -> Result<()> {
        let fail = |what: &str| {
            Err(Error::precondition(format!(
                "{self}: {what} violated (alpha = {alpha}, sigma = {sigma})"
            )))
        };
        if self.is_riesz() {
            if !(alpha > 0.0 && alpha < 1.0) {
                return fail("0<α<1");
            }
            return Ok(());
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return fail("0<α≤1");
        }
        if !(sigma > 0.0) {
            return fail("σ>0");
        }
        let a = alpha + 2.0 * sigma;
        match self {
            SchauderCase::A1 | SchauderCase::A2 => {
                if !(2.0 * sigma < alpha) {
                    return fail("2σ<α");
                }
            }
            SchauderCase::A3 => {
                if !(2.0 * sigma >= alpha) {
                    return fail("2σ≥α");
                }
                // The target exponent α - 2σ + 1 must be a Hölder exponent.
                if !(2.0 * sigma < alpha + 1.0) {
                    return fail("α-2σ+1>0");
                }
            }
            _ => {
                if sigma > 1.0 {
                    return fail("σ≤1");
                }
                let ok = match self {
                    SchauderCase::B1 => a <= 1.0,
                    SchauderCase::B2 => a > 1.0 && a <= 2.0,
                    _ => a > 2.0 && a <= 3.0,
                };
                if !ok {
                    return fail(match self {
                        SchauderCase::B1 => "α+2σ≤1",
                        SchauderCase::B2 => "1<α+2σ≤2",
                        _ => "2<α+2σ≤3",
                    });
                }
            }
        }
        Ok(())
    }

    /// Source and target spaces.
    pub fn spaces(self, alpha: f64, sigma: f64) -> (Space, Space) {
        let t = 2.0 * sigma;
        match self {
            SchauderCase::A1 => ((0, alpha), (0, alpha - t)),
            SchauderCase::A2 => ((1, alpha), (1, alpha - t)),
            SchauderCase::A3 => ((1, alpha), (0, alpha - t + 1.0)),
            SchauderCase::B1 => ((0, alpha), (0, alpha + t)),
            SchauderCase::B2 => ((0, alpha), (1, alpha + t - 1.0)),
            SchauderCase::B3 => ((0, alpha), (2, alpha + t - 2.0)),
            _ => ((0, alpha), (0, alpha)),
        }
    }

    /// T on coefficients.
    pub fn apply(self, sigma: f64, c: &SpectralCoeffs) -> Result<SpectralCoeffs> {
        match self {
            SchauderCase::A1 | SchauderCase::A2 | SchauderCase::A3 => {
                multiplier_apply(MultiplierSpec::power(sigma), c)
            }
            SchauderCase::B1 | SchauderCase::B2 | SchauderCase::B3 => {
                multiplier_apply(MultiplierSpec::power(-sigma), c)
            }
            SchauderCase::RieszFirst => riesz_spectral(RieszKind::First(1), c),
            SchauderCase::RieszSecond => riesz_spectral(RieszKind::Second(1, 1), c),
            SchauderCase::RieszAdjoint => riesz_spectral(RieszKind::Adjoint(1), c),
        }
    }
}

/// H^{σ-1/2} ∘ ½Σ_i (R_{-i}^* A_i + R_i^* A_{-i}) on coefficients, with
/// R_i^* = H^{-1/2} A_i. Equals H^σ: the inner sum is H^{-1/2} H.
pub fn factored_power(sigma: f64, c: &SpectralCoeffs) -> Result<SpectralCoeffs> {
    let n = c.dimension;
    let mut sum = SpectralCoeffs::zeros(n, c.max_degree);
    for i in 1..=n as i32 {
        for (outer, inner) in [(-i, i), (i, -i)] {
            let a = ladder_apply(LadderIndex(inner), c)?;
            let r = riesz_spectral(RieszKind::Adjoint(outer), &a)?;
            for (nu, v) in r.iter() {
                sum.add(nu.clone(), 0.5 * v);
            }
        }
    }
    sum.max_degree = sum.max_degree.max(c.max_degree + 2);
    multiplier_apply(MultiplierSpec::power(sigma - 0.5), &sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    Gaussian,
    Bump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    /// Members in the base family; the doubled family adds as many again.
    pub size: usize,
}

impl Default for FamilySpec {
    fn default() -> Self {
        FamilySpec {
            kind: FamilyKind::Gaussian,
            size: 12,
        }
    }
}

// Additive recurrence of the plastic number: well spread in (width, center).
const R2: [f64; 2] = [0.754_877_666_246_692_7, 0.569_840_290_998_053_2];

/// Member i of the low-discrepancy family, in dimension n. Members are
/// nested: the first m of a longer family are the family of size m.
pub fn family_member(kind: FamilyKind, n: usize, i: usize) -> Box<dyn TestFunction> {
    let k = i as f64 + 1.0;
    let t = (0.5 + k * R2[0]).fract();
    let center: Vec<f64> = (0..n)
        .map(|a| -2.5 + 5.0 * (0.5 + k * R2[1] + a as f64 * R2[0] * R2[1]).fract())
        .collect();
    match kind {
        FamilyKind::Gaussian => Box::new(Gaussian::new(center, 0.35 + 0.85 * t)),
        FamilyKind::Bump => Box::new(Bump {
            center,
            width: 0.8 + 1.6 * t,
        }),
    }
}

pub fn family_members(spec: &FamilySpec, n: usize, count: usize) -> Vec<Box<dyn TestFunction>> {
    (0..count).map(|i| family_member(spec.kind, n, i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchauderOptions {
    pub dimension: usize,
    /// Grid half-width L.
    pub half_width: f64,
    pub step: f64,
    /// Spectral truncation degree.
    pub degree: u32,
    /// Gauss–Hermite points per axis of the expansion.
    pub quad_points: usize,
    pub sampling: PairSampling,
}

impl Default for SchauderOptions {
    fn default() -> Self {
        SchauderOptions {
            dimension: 1,
            half_width: 6.0,
            step: 0.01,
            degree: 320,
            quad_points: 700,
            sampling: PairSampling::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchauderReport {
    pub case: SchauderCase,
    pub alpha: f64,
    pub sigma: f64,
    pub source: Space,
    pub target: Space,
    /// max over the base family of ‖Tu‖/‖u‖.
    pub ratio: f64,
    /// The same over the doubled family.
    pub ratio_doubled: f64,
    /// ratio_doubled / ratio.
    pub growth: f64,
    pub stable: bool,
    /// Per-member ratios of the doubled family.
    pub member_ratios: Vec<f64>,
    /// Largest |coefficient| of Tu of degree above 0.9·N, relative to the largest overall.
    pub truncation_tail: f64,
}

fn tail_fraction(c: &SpectralCoeffs) -> f64 {
    let cut = (0.9 * c.max_degree as f64) as u32;
    let (mut top, mut all) = (0.0f64, 0.0f64);
    for (nu, v) in c.iter() {
        all = all.max(v.abs());
        if nu.order() > cut {
            top = top.max(v.abs());
        }
    }
    if all > 0.0 {
        top / all
    } else {
        0.0
    }
}

fn member_ratio(
    case: SchauderCase,
    sigma: f64,
    u: &dyn TestFunction,
    (src, tgt): (Space, Space),
    opts: &SchauderOptions,
) -> Result<(f64, f64)> {
    let n = opts.dimension;
    let rule = quadrature_rule(opts.quad_points)?;
    let c = expand(&|x: &[f64]| u.value(x), n, opts.degree, &rule);
    let tc = case.apply(sigma, &c)?;
    let tail = tail_fraction(&tc);
    let tu = SpectralFunction { coeffs: tc };
    let gs = sample_with_derivatives(u, opts.half_width, opts.step, src.0)?;
    let gt = sample_with_derivatives(&tu, opts.half_width, opts.step, tgt.0)?;
    let ns = norm_ck_alpha_with(&gs, src.0, src.1, &opts.sampling)?.ck_norm;
    let nt = norm_ck_alpha_with(&gt, tgt.0, tgt.1, &opts.sampling)?.ck_norm;
    if !(ns > 0.0 && ns.is_finite() && nt.is_finite()) {
        return Err(Error::numerical(
            format!("{case}: degenerate norms for {}", u.label()),
            format!("source {ns:e}, target {nt:e}"),
        ));
    }
    Ok((nt / ns, tail))
}

/// Schauder ratio of `case` at (α, σ) over the family and its doubling.
pub fn schauder_ratio(
    case: SchauderCase,
    alpha: f64,
    sigma: f64,
    family: &FamilySpec,
    opts: &SchauderOptions,
) -> Result<SchauderReport> {
    case.check(alpha, sigma)?;
    if family.size == 0 {
        return Err(Error::precondition("family needs at least one member"));
    }
    if !(1..=3).contains(&opts.dimension) {
        return Err(Error::precondition(format!(
            "dimension {} outside 1..=3",
            opts.dimension
        )));
    }
    let spaces = case.spaces(alpha, sigma);
    let members = family_members(family, opts.dimension, 2 * family.size);
    let results: Result<Vec<(f64, f64)>> = members
        .par_iter()
        .map(|u| member_ratio(case, sigma, u.as_ref(), spaces, opts))
        .collect();
    let results = results?;
    let member_ratios: Vec<f64> = results.iter().map(|r| r.0).collect();
    let ratio = member_ratios[..family.size]
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let ratio_doubled = member_ratios.iter().copied().fold(0.0, f64::max);
    let growth = ratio_doubled / ratio;
    let truncation_tail = results.iter().map(|r| r.1).fold(0.0, f64::max);
    if truncation_tail > 1e-8 {
        log::warn!(
            "{case}: spectral tail {truncation_tail:e} at degree {}",
            opts.degree
        );
    }
    Ok(SchauderReport {
        case,
        alpha,
        sigma,
        source: spaces.0,
        target: spaces.1,
        ratio,
        ratio_doubled,
        growth,
        stable: growth <= FAMILY_STABILITY,
        member_ratios,
        truncation_tail,
    })
}

const GRID_FRACTIONS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

/// 5 × 5 points (α, σ) inside the admissible region of `case`; the Riesz
/// cases have no σ and get 5 values of α.
pub fn admissible_grid(case: SchauderCase) -> Vec<(f64, f64)> {
    let alphas: Vec<f64> = GRID_FRACTIONS.iter().map(|t| 0.1 + 0.85 * t).collect();
    if case.is_riesz() {
        return alphas.into_iter().map(|a| (a, 0.0)).collect();
    }
    let mut out = Vec::new();
    for &a in &alphas {
        for &t in &GRID_FRACTIONS {
            let sigma = match case {
                SchauderCase::A1 | SchauderCase::A2 => t * a / 2.0,
                SchauderCase::A3 => a / 2.0 + t / 2.0,
                SchauderCase::B1 => t * (1.0 - a) / 2.0,
                SchauderCase::B2 => (1.0 - a) / 2.0 + t / 2.0,
                _ => (2.0 - a) / 2.0 + t * a / 2.0,
            };
            out.push((a, sigma));
        }
    }
    out
}

pub fn schauder_sweep(
    case: SchauderCase,
    family: &FamilySpec,
    opts: &SchauderOptions,
) -> Result<Vec<SchauderReport>> {
    admissible_grid(case)
        .into_iter()
        .map(|(a, s)| schauder_ratio(case, a, s, family, opts))
        .collect()
}
