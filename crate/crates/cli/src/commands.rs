use std::path::Path;

use hermite_frac::derivatives_riesz::{
    riesz_pointwise, riesz_spectral, RieszKernelEval, RieszKind,
};
use hermite_frac::estimate_lab::{
    lemma_campaign, schauder_ratio, schauder_sweep, CampaignConfig as LemmaConfig, SchauderCase,
    SchauderOptions, LEMMA_IDS,
};
use hermite_frac::frac_ops::{
    frac_pointwise, fracint_pointwise, multiplier_apply, KernelSpec, MultiplierSpec,
};
use hermite_frac::functions::TestFunction;
use hermite_frac::grid::GridFunction;
use hermite_frac::hermite_basis::{expand, quadrature_rule, synthesize, SpectralCoeffs};
use hermite_frac::holder_spaces::PairSampling;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{
    parse_function, parse_kernel, CampaignConfig, Format, KernelChoice, Op, Route,
};
use crate::output::{to_csv, to_json, Check, Report};
use crate::CliError;

/// Runs the resolved command; returns the rendered report and whether it passed.
pub fn dispatch(cfg: &CampaignConfig) -> Result<(String, bool), CliError> {
    match cfg.command.as_str() {
        "expand" => expand_cmd(cfg),
        "apply" => apply_cmd(cfg),
        "kernel-eval" => kernel_cmd(cfg),
        "verify-lemma" => lemma_cmd(cfg),
        "verify-theorem" => theorem_cmd(cfg),
        "report" => report_cmd(cfg),
        other => Err(CliError::Usage(format!("unknown command {other:?}"))),
    }
}

fn render(
    cfg: &CampaignConfig,
    report: Report,
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
) -> Result<(String, bool), CliError> {
    let passed = report.passed;
    let text = match cfg.format {
        Format::Json => to_json(&report)?,
        Format::Csv => to_csv(cfg, &header, &rows)?,
    };
    Ok((text, passed))
}

fn grid_points(cfg: &CampaignConfig) -> Result<Vec<Vec<f64>>, CliError> {
    let (l, h) = (
        cfg.half_width.expect("resolved"),
        cfg.step.expect("resolved"),
    );
    let m = GridFunction::points_per_axis(l, h)?;
    let g = GridFunction::new(cfg.dimension, l, h, vec![0.0; m.pow(cfg.dimension as u32)])?;
    Ok((0..g.len()).map(|i| g.point(i)).collect())
}

fn coefficients(cfg: &CampaignConfig, u: &dyn TestFunction) -> Result<SpectralCoeffs, CliError> {
    let rule = quadrature_rule(cfg.quad_points.expect("resolved"))?;
    Ok(expand(
        &|x: &[f64]| u.value(x),
        cfg.dimension,
        cfg.degree.expect("resolved"),
        &rule,
    ))
}

fn axis_names(n: usize, prefix: &str) -> Vec<String> {
    (1..=n).map(|a| format!("{prefix}{a}")).collect()
}

fn expand_cmd(cfg: &CampaignConfig) -> Result<(String, bool), CliError> {
    let u = parse_function(&cfg.function, cfg.dimension)?;
    let c = coefficients(cfg, u.as_ref())?;
    let rows: Vec<Vec<f64>> = c
        .iter()
        .map(|(nu, v)| {
            nu.components()
                .iter()
                .map(|&k| k as f64)
                .chain([*v])
                .collect()
        })
        .collect();
    let finite = c.iter().all(|(_, v)| v.is_finite());
    let entries: Vec<_> = c
        .iter()
        .map(|(nu, v)| json!({"nu": nu.components(), "value": v}))
        .collect();
    let report = Report::new(
        cfg,
        vec![Check::new("coefficients finite", finite, None)],
        json!({"dimension": c.dimension, "max_degree": c.max_degree, "coefficients": entries}),
    );
    let mut header = axis_names(cfg.dimension, "nu");
    header.push("value".into());
    render(cfg, report, header, rows)
}

fn riesz_kind(cfg: &CampaignConfig) -> Result<RieszKind, CliError> {
    match (cfg.op, cfg.index.as_slice()) {
        (Op::Riesz, [i]) => Ok(RieszKind::First(*i)),
        (Op::Riesz, [i, j]) => Ok(RieszKind::Second(*i, *j)),
        (Op::RieszAdjoint, [i]) => Ok(RieszKind::Adjoint(*i)),
        _ => Err(CliError::Usage(format!(
            "{:?} takes {} ladder index(es), got {:?}",
            cfg.op,
            if cfg.op == Op::Riesz {
                "one or two"
            } else {
                "one"
            },
            cfg.index
        ))),
    }
}

fn apply_cmd(cfg: &CampaignConfig) -> Result<(String, bool), CliError> {
    let u = parse_function(&cfg.function, cfg.dimension)?;
    let sigma = cfg.sigma.expect("resolved");
    let points = grid_points(cfg)?;
    let input: Vec<f64> = points.iter().map(|x| u.value(x)).collect();
    let identity = sigma == 0.0 && matches!(cfg.op, Op::Hsigma | Op::Hminus);
    if matches!(cfg.op, Op::Riesz | Op::RieszAdjoint) {
        riesz_kind(cfg)?;
    }
    let spectral = if cfg.route != Route::Pointwise {
        Some(if identity {
            input.clone()
        } else {
            let c = coefficients(cfg, u.as_ref())?;
            let out = match cfg.op {
                Op::Hsigma => multiplier_apply(MultiplierSpec::power(sigma), &c)?,
                Op::Hminus => multiplier_apply(MultiplierSpec::power(-sigma), &c)?,
                _ => riesz_spectral(riesz_kind(cfg)?, &c)?,
            };
            points
                .iter()
                .map(|x| synthesize(&out, x))
                .collect::<hermite_frac::Result<Vec<f64>>>()?
        })
    } else {
        None
    };
    let pointwise = if cfg.route != Route::Spectral {
        Some(if identity {
            input.clone()
        } else {
            let u = u.as_ref();
            points
                .par_iter()
                .map(|x| match cfg.op {
                    Op::Hsigma => frac_pointwise(u, sigma, x, &cfg.quad),
                    Op::Hminus => fracint_pointwise(u, sigma, x, &cfg.quad),
                    _ => riesz_pointwise(riesz_kind(cfg).expect("checked above"), u, x, &cfg.quad),
                })
                .collect::<hermite_frac::Result<Vec<f64>>>()?
        })
    } else {
        None
    };
    let mut checks = Vec::new();
    let mut diff = None;
    if let (Some(s), Some(p)) = (&spectral, &pointwise) {
        let d = s
            .iter()
            .zip(p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        diff = Some(d);
        let mut c = Check::new("route agreement", d <= cfg.tolerance, Some(d));
        c.detail = Some(format!("max |spectral - pointwise| <= {}", cfg.tolerance));
        checks.push(c);
    }
    let values: Vec<&Vec<f64>> = spectral.iter().chain(pointwise.iter()).collect();
    checks.push(Check::new(
        "values finite",
        values.iter().all(|v| v.iter().all(|x| x.is_finite())),
        None,
    ));
    let mut header = axis_names(cfg.dimension, "x");
    header.push("input".into());
    if spectral.is_some() {
        header.push("spectral".into());
    }
    if pointwise.is_some() {
        header.push("pointwise".into());
    }
    let rows: Vec<Vec<f64>> = points
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut r = x.clone();
            r.push(input[i]);
            r.extend(spectral.iter().map(|v| v[i]));
            r.extend(pointwise.iter().map(|v| v[i]));
            r
        })
        .collect();
    let report = Report::new(
        cfg,
        checks,
        json!({
            "points": points,
            "input": input,
            "spectral": spectral,
            "pointwise": pointwise,
            "max_route_diff": diff,
        }),
    );
    render(cfg, report, header, rows)
}

fn kernel_cmd(cfg: &CampaignConfig) -> Result<(String, bool), CliError> {
    let n = cfg.dimension;
    let x = &cfg.point;
    if x.len() != n {
        return Err(CliError::Usage(format!(
            "--x needs {n} coordinates, got {}",
            x.len()
        )));
    }
    let sigma = cfg.sigma.expect("resolved");
    let eval: Box<dyn Fn(&[f64]) -> hermite_frac::Result<f64> + Sync> =
        match parse_kernel(&cfg.kernel, cfg.k)? {
            KernelChoice::Plain(kind) => {
                kind.validate(sigma, n)?;
                let mut spec = KernelSpec::new(kind, sigma, n);
                spec.quad = cfg.quad.clone();
                let k = spec.integrator()?;
                Box::new(move |z| k.value(x, z))
            }
            KernelChoice::Riesz(kind) => {
                let k = RieszKernelEval::new(kind, n, &cfg.quad)?;
                Box::new(move |z| k.value(x, z))
            }
        };
    let points: Vec<Vec<f64>> = grid_points(cfg)?
        .into_iter()
        .filter(|z| z.iter().zip(x).any(|(a, b)| (a - b).abs() > 1e-12))
        .collect();
    let values = points
        .par_iter()
        .map(|z| eval(z))
        .collect::<hermite_frac::Result<Vec<f64>>>()?;
    let finite = values.iter().all(|v| v.is_finite());
    let mut header = axis_names(n, "z");
    header.push("value".into());
    let rows: Vec<Vec<f64>> = points
        .iter()
        .zip(&values)
        .map(|(z, v)| z.iter().copied().chain([*v]).collect())
        .collect();
    let report = Report::new(
        cfg,
        vec![Check::new("values finite", finite, None)],
        json!({"x": x, "z": points, "values": values}),
    );
    render(cfg, report, header, rows)
}

fn lemma_cmd(cfg: &CampaignConfig) -> Result<(String, bool), CliError> {
    let id = cfg.lemma.clone().ok_or_else(|| {
        CliError::Usage("verify-lemma needs a lemma id (5.1 … 5.10 or all)".into())
    })?;
    let ids: Vec<&str> = if id == "all" {
        LEMMA_IDS.to_vec()
    } else {
        vec![id.as_str()]
    };
    let lab = LemmaConfig {
        dimension: cfg.dimension,
        samples: cfg.samples,
        seed: cfg.seed,
        sigma: cfg.sigma.expect("resolved"),
        quad: cfg.quad.clone(),
    };
    let mut reports = Vec::new();
    for id in ids {
        reports.extend(lemma_campaign(id, &lab)?);
    }
    let checks = reports
        .iter()
        .map(|r| {
            let mut c = Check::new(
                format!("{} {}", r.lemma, r.name),
                r.passed(),
                Some(r.c_star),
            );
            c.detail = r.stability_ratio.map(|s| format!("stability ratio {s:.6}"));
            c
        })
        .collect();
    let rows = reports
        .iter()
        .map(|r| {
            vec![
                r.c_star,
                r.stability_ratio.unwrap_or(f64::NAN),
                r.exp_constant.unwrap_or(f64::NAN),
            ]
        })
        .collect();
    let report = Report::new(cfg, checks, serde_json::to_value(&reports)?);
    render(
        cfg,
        report,
        vec![
            "c_star".into(),
            "stability_ratio".into(),
            "exp_constant".into(),
        ],
        rows,
    )
}

fn theorem_cmd(cfg: &CampaignConfig) -> Result<(String, bool), CliError> {
    let name = cfg.case.clone().ok_or_else(|| {
        CliError::Usage("verify-theorem needs a case (A1 … B3, R, R_i, R_ij, R_i^*)".into())
    })?;
    let cases: Vec<SchauderCase> = if name == "R" {
        vec![
            SchauderCase::RieszFirst,
            SchauderCase::RieszSecond,
            SchauderCase::RieszAdjoint,
        ]
    } else {
        vec![name.parse()?]
    };
    let opts = SchauderOptions {
        dimension: cfg.dimension,
        half_width: cfg.half_width.expect("resolved"),
        step: cfg.step.expect("resolved"),
        degree: cfg.degree.expect("resolved"),
        quad_points: cfg.quad_points.expect("resolved"),
        sampling: PairSampling {
            seed: cfg.seed,
            ..PairSampling::default()
        },
    };
    let mut reports = Vec::new();
    for case in cases {
        match cfg.alpha {
            Some(alpha) => {
                let sigma = match (cfg.sigma, name.starts_with('R')) {
                    (Some(s), _) => s,
                    (None, true) => 0.0,
                    (None, false) => {
                        return Err(CliError::Usage(format!(
                            "{case} at a single alpha needs --sigma"
                        )))
                    }
                };
                reports.push(schauder_ratio(case, alpha, sigma, &cfg.family, &opts)?);
            }
            None => reports.extend(schauder_sweep(case, &cfg.family, &opts)?),
        }
    }
    let checks = reports
        .iter()
        .map(|r| {
            let ok = r.ratio.is_finite() && r.stable;
            let mut c = Check::new(
                format!("{} alpha={} sigma={}", r.case, r.alpha, r.sigma),
                ok,
                Some(r.ratio),
            );
            c.detail = Some(format!("family-doubling growth {:.6}", r.growth));
            c
        })
        .collect();
    let rows = reports
        .iter()
        .map(|r| vec![r.alpha, r.sigma, r.ratio, r.ratio_doubled, r.growth])
        .collect();
    let report = Report::new(cfg, checks, serde_json::to_value(&reports)?);
    let header = ["alpha", "sigma", "ratio", "ratio_doubled", "growth"]
        .map(String::from)
        .to_vec();
    render(cfg, report, header, rows)
}

fn read_report(path: &Path) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{} is not a report: {e}", path.display())))
}

fn report_cmd(cfg: &CampaignConfig) -> Result<(String, bool), CliError> {
    if cfg.inputs.is_empty() {
        return Err(CliError::Usage(
            "report needs at least one input file".into(),
        ));
    }
    let mut checks = Vec::new();
    let mut table = Vec::new();
    for path in &cfg.inputs {
        let r = read_report(path)?;
        let failed = r.checks.iter().filter(|c| !c.passed).count();
        let file = path.display().to_string();
        let mut c = Check::new(format!("{file} ({})", r.command), r.passed, None);
        c.detail = Some(format!("{} checks, {failed} failed", r.checks.len()));
        checks.push(c);
        table.push(json!({"file": file, "command": r.command, "checks": r.checks.len(), "failed": failed, "passed": r.passed}));
    }
    let report = Report::new(cfg, checks, json!({"reports": table}));
    let passed = report.passed;
    let text = match cfg.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut out = format!(
                "# config {}\nfile,command,checks,failed,passed\n",
                serde_json::to_string(cfg)?
            );
            for row in &table {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row["file"].as_str().unwrap_or_default(),
                    row["command"].as_str().unwrap_or_default(),
                    row["checks"],
                    row["failed"],
                    row["passed"]
                ));
            }
            out
        }
    };
    Ok((text, passed))
}
