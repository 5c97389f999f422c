//! One function per subcommand. Each validates everything it needs before
//! computing and returns the tables to write.

use std::path::Path;
use std::sync::Arc;

use fraclab_core::fixedpoint::{picard_iterate, IterationConfig, Monitor, ProblemSpec, RhsKind};
use fraclab_core::grid::{GridDomain, GridFunction, Shape};
use fraclab_core::nonexistence::{bump_family, certify, optimality_obstruction, CAVEAT};
use fraclab_core::operators::{local_limit, FracLaplacian};
use fraclab_core::poisson::{refinement_study, FactorizedSolver, StiffnessOperator};
use fraclab_core::regularity::{discrepancy_window, exponent_range, parse_rational, regularity_probe, Proposition};
use fraclab_core::sobolev::hardy_constant;
use log::info;

use crate::cache::KernelCache;
use crate::config::{DomainConfig, ExperimentConfig, ProblemConfig};
use crate::output::{Format, Table};
use crate::CliError;

/// The eight subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    Solve,
    Iterate,
    Sweep,
    Hardy,
    Exponents,
    Certify,
    Probe,
    Limits,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Solve => "solve",
            Subcommand::Iterate => "iterate",
            Subcommand::Sweep => "sweep",
            Subcommand::Hardy => "hardy",
            Subcommand::Exponents => "exponents",
            Subcommand::Certify => "certify",
            Subcommand::Probe => "probe",
            Subcommand::Limits => "limits",
        }
    }
}

pub(crate) struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub cache: &'a KernelCache,
    pub fmt: Format,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn need<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    section.as_ref().ok_or_else(|| invalid(format!("missing [{name}] section")))
}

fn check_order(name: &str, s: f64) -> Result<(), CliError> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} ∈ (0,1) required, got {s}")))
    }
}

fn shape_of(d: &DomainConfig) -> Result<Shape, CliError> {
    let size = |k: usize| -> Result<f64, CliError> {
        if d.size.len() != k {
            return Err(invalid(format!(
                "domain.size for shape {} needs {k} value(s), got {}",
                d.shape,
                d.size.len()
            )));
        }
        Ok(d.size[0])
    };
    Ok(match d.shape.as_str() {
        "ball" => Shape::ball(d.dim, size(1)?),
        "cube" => Shape::cube(d.dim, size(1)?),
        "annulus" => {
            size(2)?;
            Shape::annulus(d.dim, d.size[0], d.size[1])
        }
        other => return Err(invalid(format!("domain.shape must be ball, cube or annulus, got {other}"))),
    })
}

fn domain_of(d: &DomainConfig) -> Result<Arc<GridDomain>, CliError> {
    Ok(GridDomain::build(shape_of(d)?, d.dim, d.nodes, d.margin, d.offset)?)
}

fn rhs_kind(p: &ProblemConfig) -> Result<RhsKind, CliError> {
    let get = |v: Option<f64>, name: &str| v.ok_or_else(|| invalid(format!("problem.{name} is required for kind {}", p.kind)));
    Ok(match p.kind.as_str() {
        "D_s2" => RhsKind::DS2,
        "u_times_D_s2" => RhsKind::UTimesDS2,
        "abs_frac_power_q" => RhsKind::AbsFracPowerQ {
            t: get(p.t, "t")?,
            q: get(p.q, "q")?,
        },
        "riesz_grad_q" => RhsKind::RieszGradQ { q: get(p.q, "q")? },
        "B_sq_alpha" => RhsKind::BSqAlpha {
            q: get(p.q, "q")?,
            alpha: get(p.alpha, "alpha")?,
        },
        other => {
            return Err(invalid(format!(
                "problem.kind must be one of D_s2, u_times_D_s2, abs_frac_power_q, riesz_grad_q, B_sq_alpha; got {other}"
            )))
        }
    })
}

fn data_of(domain: &Arc<GridDomain>, p: &ProblemConfig) -> Result<GridFunction, CliError> {
    let amp = p.f;
    Ok(match p.f_beta {
        None => GridFunction::constant(domain, amp),
        Some(beta) => {
            if domain.has_origin_node() {
                return Err(invalid("problem.f_beta needs an origin-offset grid"));
            }
            GridFunction::sample(domain, |x| amp * x.iter().map(|v| v * v).sum::<f64>().sqrt().powf(-beta))?
        }
    })
}

fn monitors_of(names: &[String]) -> Result<Vec<Monitor>, CliError> {
    names
        .iter()
        .map(|m| match m.as_str() {
            "linf" => Ok(Monitor::LInf),
            "energy" => Ok(Monitor::Energy),
            other => match other.strip_prefix("frac_lr:").map(str::parse::<u32>) {
                Some(Ok(r)) => Ok(Monitor::FracPowerLr { r }),
                _ => Err(invalid(format!("run.monitors entries are linf, energy or frac_lr:<r>; got {other}"))),
            },
        })
        .collect()
}

fn monitor_label(m: &Monitor) -> String {
    match m {
        Monitor::LInf => "linf".into(),
        Monitor::Energy => "energy".into(),
        Monitor::FracPowerLr { r } => format!("frac_lr{r}"),
    }
}

fn iteration_config(ctx: &Context) -> Result<IterationConfig, CliError> {
    let run = &ctx.config.run;
    let cfg = IterationConfig {
        tolerance: run.tolerance,
        max_iter: run.max_iter,
        divergence_norm: run.divergence_norm,
        monitors: monitors_of(&run.monitors)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cached_solver(ctx: &Context, domain: &Arc<GridDomain>, s: f64) -> Result<FactorizedSolver, CliError> {
    check_order("s", s)?;
    let (table, outcome) = ctx.cache.kernel(domain, 2.0 * s, None)?;
    info!("stiffness kernel for s = {s}: {outcome:?}");
    let lap = FracLaplacian::with_table(domain, table, s)?;
    Ok(FactorizedSolver::new(StiffnessOperator::from_laplacian(lap)?)?)
}

fn spec_for(
    domain: &Arc<GridDomain>,
    p: &ProblemConfig,
    s: f64,
    lambda: f64,
) -> Result<ProblemSpec, CliError> {
    let spec = ProblemSpec {
        kind: rhs_kind(p)?,
        s,
        lambda,
        mu: GridFunction::constant(domain, p.mu),
        f: data_of(domain, p)?,
        m: p.m.unwrap_or(f64::INFINITY),
    };
    spec.validate()?;
    Ok(spec)
}

pub(crate) fn solve(ctx: &Context) -> Result<Vec<Table>, CliError> {
    let d = need(&ctx.config.domain, "domain")?;
    let p = need(&ctx.config.problem, "problem")?;
    check_order("s", p.s)?;
    let shape = shape_of(d)?;
    let run = &ctx.config.run;
    if run.levels.len() < 2 {
        return Err(invalid("run.levels needs at least two cell counts"));
    }
    if !(run.half_width > 0.0) {
        return Err(invalid("run.half_width > 0 required"));
    }
    let amp = p.f;
    let beta = p.f_beta;
    let rows = refinement_study(&shape, p.s, run.half_width, &run.levels, |x| match beta {
        None => amp,
        Some(b) => amp * x.iter().map(|v| v * v).sum::<f64>().sqrt().powf(-b),
    })?;
    let mut t = Table::new("solve", &["level", "h", "l2_error_vs_finest", "ratio"]);
    for r in rows {
        t.push(vec![r.level.to_string(), ctx.fmt.num(r.h), ctx.fmt.num(r.l2_error), ctx.fmt.opt(r.ratio)]);
    }
    Ok(vec![t])
}

pub(crate) fn iterate(ctx: &Context) -> Result<Vec<Table>, CliError> {
    let d = need(&ctx.config.domain, "domain")?;
    let p = need(&ctx.config.problem, "problem")?;
    let lambda = p.lambda.ok_or_else(|| invalid("problem.lambda is required for iterate"))?;
    let cfg = iteration_config(ctx)?;
    let domain = domain_of(d)?;
    check_order("s", p.s)?;
    let spec = spec_for(&domain, p, p.s, lambda)?;
    let solver = cached_solver(ctx, &domain, p.s)?;
    let report = picard_iterate(&spec, &cfg, &solver)?;

    let mut header = vec!["iteration".to_string()];
    header.extend(cfg.monitors.iter().map(monitor_label));
    header.extend(["difference".to_string(), "residual".to_string()]);
    let href: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut hist = Table::new("iterate", &href);
    for rec in &report.history {
        let mut row = vec![rec.iteration.to_string()];
        row.extend(rec.norms.iter().map(|v| ctx.fmt.num(*v)));
        row.push(ctx.fmt.num(rec.difference));
        row.push(ctx.fmt.num(rec.residual));
        hist.push(row);
    }
    let mut summary = Table::new("iterate_summary", &["kind", "lambda", "verdict", "iterations", "final_residual"]);
    summary.comments.extend(report.warnings.iter().map(|w| format!("warning: {w}")));
    summary.push(vec![
        spec.kind.label().to_string(),
        ctx.fmt.num(lambda),
        report.verdict.label().to_string(),
        report.iterations.to_string(),
        ctx.fmt.num(report.final_residual),
    ]);
    Ok(vec![hist, summary])
}

pub(crate) fn sweep(ctx: &Context) -> Result<Vec<Table>, CliError> {
    let d = need(&ctx.config.domain, "domain")?;
    let p = need(&ctx.config.problem, "problem")?;
    let run = &ctx.config.run;
    if run.lambdas.is_empty() {
        return Err(invalid("run.lambdas must list at least one λ"));
    }
    let s_values = if run.s_values.is_empty() { vec![p.s] } else { run.s_values.clone() };
    let cfg = iteration_config(ctx)?;
    let domain = domain_of(d)?;
    for &s in &s_values {
        check_order("s", s)?;
        for &l in &run.lambdas {
            spec_for(&domain, p, s, l)?;
        }
    }
    let mut t = Table::new("sweep", &["lambda", "verdict", "iterations", "final_residual", "s"]);
    for &s in &s_values {
        let solver = cached_solver(ctx, &domain, s)?;
        for &lambda in &run.lambdas {
            let spec = spec_for(&domain, p, s, lambda)?;
            let r = picard_iterate(&spec, &cfg, &solver)?;
            t.push(vec![
                ctx.fmt.num(lambda),
                r.verdict.label().to_string(),
                r.iterations.to_string(),
                ctx.fmt.num(r.final_residual),
                ctx.fmt.num(s),
            ]);
        }
    }
    Ok(vec![t])
}

pub(crate) fn hardy(ctx: &Context) -> Result<Vec<Table>, CliError> {
    let h = need(&ctx.config.hardy, "hardy")?;
    if h.cases.is_empty() && h.obstruction.is_none() {
        return Err(invalid("[hardy] needs cases or an obstruction table"));
    }
    if !(h.tolerance > 0.0) {
        return Err(invalid("hardy.tolerance > 0 required"));
    }
    let obstruction_domain = match &h.obstruction {
        Some(_) => Some(domain_of(need(&ctx.config.domain, "domain")?)?),
        None => None,
    };
    let mut out = Vec::new();
    if !h.cases.is_empty() {
        let mut t = Table::new("hardy", &["dim", "s", "p", "constant", "error_estimate"]);
        for c in &h.cases {
            let r = hardy_constant(c.dim, c.s, c.p, h.tolerance)?;
            t.push(vec![c.dim.to_string(), ctx.fmt.num(c.s), ctx.fmt.num(c.p), ctx.fmt.num(r.value), ctx.fmt.num(r.error)]);
        }
        out.push(t);
    }
    if let (Some(o), Some(domain)) = (&h.obstruction, obstruction_domain) {
        let rows = optimality_obstruction(&domain, o.s, o.m, o.eps, &o.radii)?;
        let mut t = Table::new("hardy_obstruction", &["radius", "quotient", "decay"]);
        for r in rows {
            t.push(vec![ctx.fmt.num(r.radius), ctx.fmt.num(r.quotient), ctx.fmt.opt(r.decay)]);
        }
        out.push(t);
    }
    Ok(out)
}

pub(crate) fn exponents(ctx: &Context) -> Result<Vec<Table>, CliError> {
    let e = need(&ctx.config.exponents, "exponents")?;
    if e.cases.is_empty() {
        return Err(invalid("exponents.cases is empty"));
    }
    let mut t = Table::new(
        "exponents",
        &["proposition", "dim", "s", "t", "m", "case", "lower", "upper", "upper_inclusive", "upper_value"],
    );
    for c in &e.cases {
        let prop = Proposition::from_id(&c.proposition)?;
        let s = parse_rational(&c.s)?;
        let tt = c.t.as_deref().map(parse_rational).transpose()?;
        let m = parse_rational(&c.m)?;
        let r = exponent_range(prop, c.dim, &s, tt.as_ref(), &m)?;
        if let (Proposition::P31 | Proposition::Cr2, Some(tv)) = (prop, &tt) {
            if let Some((a, b)) = discrepancy_window(c.dim, &s, tv, &m) {
                let note = format!("discrepancy N={} s={s} t={tv} m={m}: P3.1 case 3 gives {a}, P-cr2 gives {b}", c.dim);
                if !t.comments.contains(&note) {
                    t.comments.push(note);
                }
            }
        }
        t.push(vec![
            prop.id().to_string(),
            c.dim.to_string(),
            s.to_string(),
            tt.map(|v| v.to_string()).unwrap_or_default(),
            m.to_string(),
            r.case.to_string(),
            r.lower.to_string(),
            r.upper.to_string(),
            r.upper_inclusive.to_string(),
            ctx.fmt.num(r.upper.to_f64()),
        ]);
    }
    Ok(vec![t])
}

pub(crate) fn certify_cmd(ctx: &Context) -> Result<Vec<Table>, CliError> {
    let d = need(&ctx.config.domain, "domain")?;
    let p = need(&ctx.config.problem, "problem")?;
    let c = need(&ctx.config.certify, "certify")?;
    check_order("s", p.s)?;
    if c.lambdas.is_empty() || c.centers.is_empty() || c.widths.is_empty() {
        return Err(invalid("certify needs nonempty lambdas, centers and widths"));
    }
    let domain = domain_of(d)?;
    let f = data_of(&domain, p)?;
    let family = bump_family(&domain, &c.centers, &c.widths)?;
    let mut t = Table::new("certify", &["lambda", "certified", "witness", "lambda_star_star"]);
    t.comments.push(CAVEAT.to_string());
    for &lambda in &c.lambdas {
        let (ok, best) = certify(lambda, &f, c.mu1, p.s, &family)?;
        t.push(vec![ctx.fmt.num(lambda), ok.to_string(), best.id, ctx.fmt.num(best.lambda_star_star)]);
    }
    Ok(vec![t])
}

pub(crate) fn probe(ctx: &Context) -> Result<Vec<Table>, CliError> {
    let pr = need(&ctx.config.probe, "probe")?;
    if pr.p.is_empty() {
        return Err(invalid("probe.p must list at least one exponent"));
    }
    let mut t = Table::new("probe", &["p", "route", "cells", "h", "value", "growth", "classification"]);
    for &p in &pr.p {
        let r = regularity_probe(pr.beta, pr.s, pr.t, p, &pr.levels)?;
        for (k, l) in r.levels.iter().enumerate() {
            t.push(vec![
                ctx.fmt.num(p),
                format!("{:?}", r.route),
                l.cells.to_string(),
                ctx.fmt.num(l.h),
                ctx.fmt.num(l.value),
                ctx.fmt.opt(k.checked_sub(1).map(|j| r.growth[j])),
                r.classification.label().to_string(),
            ]);
        }
    }
    Ok(vec![t])
}

pub(crate) fn limits(ctx: &Context) -> Result<Vec<Table>, CliError> {
    let d = need(&ctx.config.domain, "domain")?;
    let l = need(&ctx.config.limits, "limits")?;
    if l.s_values.is_empty() {
        return Err(invalid("limits.s_values is empty"));
    }
    for &s in &l.s_values {
        check_order("s", s)?;
    }
    if !(l.bump_radius > 0.0) {
        return Err(invalid("limits.bump_radius > 0 required"));
    }
    let domain = domain_of(d)?;
    let rho2 = l.bump_radius * l.bump_radius;
    let u = GridFunction::sample(&domain, |x| (1.0 - x.iter().map(|v| v * v).sum::<f64>() / rho2).max(0.0).powi(4))?;
    let mut t = Table::new("limits", &["s", "laplacian_error", "gradient_error"]);
    for &s in &l.s_values {
        let e = local_limit(&u, s)?;
        t.push(vec![ctx.fmt.num(s), ctx.fmt.num(e.laplacian), ctx.fmt.num(e.gradient)]);
    }
    Ok(vec![t])
}

pub(crate) fn dispatch(cmd: Subcommand, ctx: &Context) -> Result<Vec<Table>, CliError> {
    match cmd {
        Subcommand::Solve => solve(ctx),
        Subcommand::Iterate => iterate(ctx),
        Subcommand::Sweep => sweep(ctx),
        Subcommand::Hardy => hardy(ctx),
        Subcommand::Exponents => exponents(ctx),
        Subcommand::Certify => certify_cmd(ctx),
        Subcommand::Probe => probe(ctx),
        Subcommand::Limits => limits(ctx),
    }
}

pub(crate) fn default_cache_dir(out: &Path) -> std::path::PathBuf {
    out.join(".kernel-cache")
}
