//! Command-line front end: expansions, operator applications, kernel tables
//! and the verification campaigns, with JSON/CSV reports.
//!
//! Exit codes: 0 when every check passes, 1 when a numerical check fails,
//! 2 for usage errors and inadmissible parameters.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{parse_family, CampaignConfig, Format, Op, Route};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unknown names, inadmissible parameters.
    Usage(String),
    /// A computation failed or could not reach its tolerance.
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<hermite_frac::Error> for CliError {
    fn from(e: hermite_frac::Error) -> Self {
        use hermite_frac::Error as E;
        match e {
            E::Numerical { .. } | E::Capacity(_) | E::Missing(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "hermite-frac",
    version,
    about = "Fractional powers of the harmonic oscillator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    params: Params,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Hermite coefficients of a test function.
    Expand,
    /// Apply H^σ, H^{-σ} or a Riesz transform by the spectral and/or pointwise route.
    Apply,
    /// Tabulate a kernel K(x, ·) on a grid.
    KernelEval,
    /// Fit the constants of one lemma (5.1 … 5.10, or "all").
    VerifyLemma { id: Option<String> },
    /// Schauder ratios for A1 … B3, R_i, R_ij, R_i^* (R: all three Riesz cases).
    VerifyTheorem { case: Option<String> },
    /// Merge earlier reports into one summary.
    Report { inputs: Vec<PathBuf> },
}

#[derive(Args, Debug, Default)]
struct Params {
    /// JSON file with any of the configuration fields; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, env = "HERMITE_FRAC_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long = "n", global = true)]
    dimension: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    sigma: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    k: Option<u32>,
    #[arg(long = "half-width", visible_alias = "L", global = true)]
    half_width: Option<f64>,
    #[arg(long = "step", visible_alias = "h", global = true)]
    step: Option<f64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    degree: Option<u32>,
    #[arg(long, global = true)]
    quad_points: Option<usize>,
    #[arg(long, global = true)]
    panels: Option<usize>,
    #[arg(long, global = true)]
    pv_delta: Option<f64>,
    #[arg(long, global = true)]
    pv_tol: Option<f64>,
    #[arg(long, global = true)]
    outer_radius: Option<f64>,
    /// gauss or bump.
    #[arg(long, global = true)]
    family: Option<String>,
    #[arg(long, global = true)]
    family_size: Option<usize>,
    /// hermite:k, gauss:c,w or bump:c,w.
    #[arg(long = "fn", global = true)]
    function: Option<String>,
    #[arg(long, global = true, value_enum)]
    op: Option<Op>,
    #[arg(long, global = true, value_enum)]
    route: Option<Route>,
    /// Ladder indices, e.g. 1 or 1,-1.
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    index: Option<Vec<i32>>,
    /// power, power-up, power-down, integral, integral-up, riesz:i[,j], riesz-shifted:i.
    #[arg(long, global = true)]
    kernel: Option<String>,
    /// The point x of kernel-eval, comma separated.
    #[arg(
        long = "x",
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    point: Option<Vec<f64>>,
    #[arg(long = "tol", global = true)]
    tolerance: Option<f64>,
    /// More log output on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

fn resolve(cli: Cli) -> Result<CampaignConfig, CliError> {
    let p = cli.params;
    let mut c = match &p.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?
        }
        None => CampaignConfig::default(),
    };
    let (command, positional_id) = match cli.command {
        Command::Expand => ("expand", None),
        Command::Apply => ("apply", None),
        Command::KernelEval => ("kernel-eval", None),
        Command::VerifyLemma { id } => ("verify-lemma", id),
        Command::VerifyTheorem { case } => ("verify-theorem", case),
        Command::Report { inputs } => {
            if !inputs.is_empty() {
                c.inputs = inputs;
            }
            ("report", None)
        }
    };
    c.command = command.into();
    match command {
        "verify-lemma" if positional_id.is_some() => c.lemma = positional_id,
        "verify-theorem" if positional_id.is_some() => c.case = positional_id,
        _ => {}
    }
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = p.$field { c.$field = v; } )* };
    }
    set!(dimension, k, seed, samples, function, op, route, index, kernel, point, tolerance, format);
    macro_rules! set_opt {
        ($($field:ident),*) => { $( if p.$field.is_some() { c.$field = p.$field; } )* };
    }
    set_opt!(
        sigma,
        alpha,
        half_width,
        step,
        degree,
        quad_points,
        threads,
        out
    );
    if let Some(v) = p.panels {
        c.quad.panels = v;
    }
    if let Some(v) = p.pv_delta {
        c.quad.pv_delta = v;
    }
    if let Some(v) = p.pv_tol {
        c.quad.pv_tol = v;
    }
    if let Some(v) = p.outer_radius {
        c.quad.outer_radius = v;
    }
    if let Some(f) = &p.family {
        c.family.kind = parse_family(f)?;
    }
    if let Some(s) = p.family_size {
        c.family.size = s;
    }
    c.resolve_defaults();
    c.validate()?;
    Ok(c)
}

/// Parses `argv` (program name first), runs the command and writes its report.
/// Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.params.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match resolve(cli).and_then(execute) {
        Ok(passed) => {
            if passed {
                0
            } else {
                eprintln!("one or more checks failed");
                1
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn execute(cfg: CampaignConfig) -> Result<bool, CliError> {
    let work = || commands::dispatch(&cfg);
    let (text, passed) = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    match &cfg.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(passed)
}
