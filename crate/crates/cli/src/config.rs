//! Resolved run configuration: defaults, then the JSON config file, then flags.

use std::path::PathBuf;

use clap::ValueEnum;
use hermite_frac::derivatives_riesz::RieszKernel;
use hermite_frac::estimate_lab::{FamilyKind, FamilySpec, DEFAULT_SAMPLES, DEFAULT_SEED};
use hermite_frac::frac_ops::{KernelKind, QuadratureSpec};
use hermite_frac::functions::{Bump, Gaussian, HermiteFunction, TestFunction};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Operator of `apply`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
pub enum Op {
    /// H^σ.
    #[default]
    #[value(name = "Hsigma")]
    Hsigma,
    /// H^{-σ}.
    #[value(name = "Hminus")]
    Hminus,
    /// R_i (one index) or R_ij (two indices).
    #[value(name = "Riesz")]
    Riesz,
    /// R_i^* = H^{-1/2} A_i.
    #[value(name = "RieszAdjoint")]
    RieszAdjoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Spectral,
    Pointwise,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub command: String,
    pub dimension: usize,
    /// Each command has its own default; the theorem sweep needs none.
    pub sigma: Option<f64>,
    /// Hölder exponent; a theorem sweep runs when it is absent.
    pub alpha: Option<f64>,
    /// Shift index of the shifted kernels.
    pub k: u32,
    pub quad: QuadratureSpec,
    /// Grid half-width L; each command has its own default.
    pub half_width: Option<f64>,
    /// Grid step h; each command has its own default.
    pub step: Option<f64>,
    pub family: FamilySpec,
    pub seed: u64,
    pub samples: usize,
    /// Spectral truncation degree.
    pub degree: Option<u32>,
    /// Gauss–Hermite points per axis for expansions.
    pub quad_points: Option<usize>,
    pub function: String,
    pub op: Op,
    pub route: Route,
    /// Ladder indices of the Riesz operators.
    pub index: Vec<i32>,
    pub kernel: String,
    /// Fixed first argument x of `kernel-eval`.
    pub point: Vec<f64>,
    pub lemma: Option<String>,
    pub case: Option<String>,
    /// Accepted max difference between the two routes of `apply`.
    pub tolerance: f64,
    pub inputs: Vec<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            command: String::new(),
            dimension: 1,
            sigma: None,
            alpha: None,
            k: 1,
            quad: QuadratureSpec::default(),
            half_width: None,
            step: None,
            family: FamilySpec::default(),
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            degree: None,
            quad_points: None,
            function: "hermite:2".into(),
            op: Op::default(),
            route: Route::default(),
            index: vec![1],
            kernel: "power".into(),
            point: Vec::new(),
            lemma: None,
            case: None,
            tolerance: 1e-5,
            inputs: Vec::new(),
            format: Format::default(),
            threads: None,
            out: None,
        }
    }
}

impl CampaignConfig {
    /// Fills the command-dependent defaults so that reports show every value used.
    pub fn resolve_defaults(&mut self) {
        let (l, h, degree, points) = match self.command.as_str() {
            "verify-theorem" => (6.0, 0.01, 320, 700),
            "kernel-eval" => (3.0, 0.1, 96, 200),
            _ => (3.0, 0.25, 96, 200),
        };
        match self.command.as_str() {
            "verify-theorem" | "report" => {}
            "verify-lemma" => {
                self.sigma.get_or_insert(0.4);
            }
            _ => {
                self.sigma.get_or_insert(0.5);
            }
        }
        self.half_width.get_or_insert(l);
        self.step.get_or_insert(h);
        self.degree.get_or_insert(degree);
        self.quad_points.get_or_insert(points);
        if self.point.is_empty() {
            self.point = vec![0.0; self.dimension];
        }
    }

    /// Admissibility of the parameters shared by all commands.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if !(1..=3).contains(&self.dimension) {
            return bad(format!("dimension {} outside 1..=3", self.dimension));
        }
        if let Some(s) = self.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return bad(format!(
                    "sigma must be a finite nonnegative number, got {s}"
                ));
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return bad(format!("alpha must lie in (0, 1], got {a}"));
            }
        }
        let (l, h) = (self.half_width.unwrap_or(1.0), self.step.unwrap_or(1.0));
        if !(l > 0.0 && h > 0.0 && h <= l) {
            return bad(format!("grid needs 0 < h <= L, got L = {l}, h = {h}"));
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if self.family.size == 0 {
            return bad("family size must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        if !(self.tolerance > 0.0) {
            return bad(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            ));
        }
        self.quad
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))
    }
}

fn numbers<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("cannot parse {p:?} in {what}")))
        })
        .collect()
}

/// hermite:k₁,…,k_n, gauss:c₁,…,c_n,w or bump:c₁,…,c_n,w.
pub fn parse_function(spec: &str, n: usize) -> Result<Box<dyn TestFunction>, CliError> {
    let (name, args) = spec.split_once(':').ok_or_else(|| {
        CliError::Usage(format!("function {spec:?} is not of the form name:args"))
    })?;
    match name {
        "hermite" => {
            let k: Vec<u32> = numbers(args, spec)?;
            if k.len() != n {
                return Err(CliError::Usage(format!("{spec}: expected {n} indices")));
            }
            Ok(Box::new(HermiteFunction::new(k)))
        }
        "gauss" | "bump" => {
            let mut v: Vec<f64> = numbers(args, spec)?;
            if v.len() != n + 1 {
                return Err(CliError::Usage(format!(
                    "{spec}: expected {n} center coordinates and a width"
                )));
            }
            let width = v.pop().expect("length checked");
            if !(width > 0.0) {
                return Err(CliError::Usage(format!("{spec}: width must be positive")));
            }
            Ok(if name == "gauss" {
                Box::new(Gaussian::new(v, width))
            } else {
                Box::new(Bump { center: v, width })
            })
        }
        _ => Err(CliError::Usage(format!(
            "unknown function family {name:?}; expected hermite, gauss or bump"
        ))),
    }
}

/// Kernels of `kernel-eval`.
pub enum KernelChoice {
    Plain(KernelKind),
    Riesz(RieszKernel),
}

/// power, power-up, power-down, integral, integral-up (shift from `k`),
/// riesz:i, riesz:i,j, riesz-shifted:i.
pub fn parse_kernel(spec: &str, k: u32) -> Result<KernelChoice, CliError> {
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    let riesz = |args: &str| -> Result<Vec<i32>, CliError> { numbers(args, spec) };
    Ok(match name {
        "power" => KernelChoice::Plain(KernelKind::FracPower),
        "power-up" => KernelChoice::Plain(KernelKind::FracPowerShiftUp(k)),
        "power-down" => KernelChoice::Plain(KernelKind::FracPowerShiftDown(k)),
        "integral" => KernelChoice::Plain(KernelKind::FracIntegral),
        "integral-up" => KernelChoice::Plain(KernelKind::FracIntegralShiftUp(k)),
        "riesz" => match riesz(args)?.as_slice() {
            [i] => KernelChoice::Riesz(RieszKernel::First(*i)),
            [i, j] => KernelChoice::Riesz(RieszKernel::Second(*i, *j)),
            _ => {
                return Err(CliError::Usage(format!(
                    "{spec}: expected one or two indices"
                )))
            }
        },
        "riesz-shifted" => match riesz(args)?.as_slice() {
            [i] => KernelChoice::Riesz(RieszKernel::FirstShifted(*i)),
            _ => return Err(CliError::Usage(format!("{spec}: expected one index"))),
        },
        _ => return Err(CliError::Usage(format!("unknown kernel {spec:?}"))),
    })
}

pub fn parse_family(s: &str) -> Result<FamilyKind, CliError> {
    match s {
        "gauss" | "gaussian" => Ok(FamilyKind::Gaussian),
        "bump" => Ok(FamilyKind::Bump),
        _ => Err(CliError::Usage(format!(
            "unknown family {s:?}; expected gauss or bump"
        ))),
    }
}
