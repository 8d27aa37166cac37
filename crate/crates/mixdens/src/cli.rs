//! Dispatch of a resolved [`RunConfig`] to the library.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mixdens_core::simulation::{deterministic_hash, rng_from_seed, sample_mixture};
use mixdens_core::smoothness::{certify_query, Verdict, Violation};
use mixdens_core::{
    build_basis, estimate_coefficients, postprocess_density, select_m, Interval, MixingDensity,
    MixtureFamily, ModulusQuery, PostProcess, ScaleKernel, ScaleShape, SelectionRule,
};
use serde::Serialize;

use crate::config::{
    parse_config, CommandKind, FTrueSpec, FamilyName, FamilySpec, KernelSpec, OrderSpec, Parsed,
    RunConfig,
};
use crate::error::{AppError, AppResult};
use crate::experiment::{
    rate_table, run_experiment, variance_condition_audit, ExperimentConfig, ExperimentReport,
    OrderChoice,
};
use crate::formats::{self, ConfigEcho, EstimateDocument};

pub fn build_family(spec: &FamilySpec) -> AppResult<MixtureFamily> {
    let theta = Interval::new(spec.a, spec.b)?;
    Ok(match spec.name {
        FamilyName::ExponentialIndicator => MixtureFamily::exponential_indicator(theta)?,
        FamilyName::ExponentialMoment => MixtureFamily::exponential_moment(theta)?,
        FamilyName::GammaShape => MixtureFamily::gamma_shape(theta)?,
        FamilyName::BetaScale => MixtureFamily::beta_scale(theta, spec.k.unwrap_or(1))?,
        FamilyName::GenericScale => {
            let shape = match spec.kernel.clone() {
                Some(KernelSpec::Uniform) => ScaleShape::Uniform,
                Some(KernelSpec::Beta { p, q }) => ScaleShape::Beta { p, q },
                Some(KernelSpec::Tabulated { xs, ys }) => ScaleShape::Tabulated { xs, ys },
                None => return Err(AppError::usage("--kernel", "generic-scale needs a kernel")),
            };
            let kernel = ScaleKernel::new(shape, spec.kernel_support, None)?;
            MixtureFamily::generic_scale(theta, kernel)?
        }
    })
}

pub fn build_f_true(
    spec: &FTrueSpec,
    interval: Interval,
    family: Option<&MixtureFamily>,
    precision: u32,
) -> AppResult<MixingDensity> {
    Ok(match spec {
        FTrueSpec::Uniform => MixingDensity::uniform(interval),
        FTrueSpec::CosineBump => MixingDensity::cosine_bump(interval),
        FTrueSpec::BetaShaped { p, q } => MixingDensity::beta_shaped(interval, *p, *q)?,
        FTrueSpec::InBasis(coeffs) => {
            let family = family
                .ok_or_else(|| AppError::usage("--family", "in-basis densities need a family"))?;
            let basis = Arc::new(build_basis(
                family.target_interval(),
                coeffs.len(),
                precision,
            )?);
            MixingDensity::in_basis(family, basis, coeffs)?
        }
    })
}

fn selection_rule(spec: OrderSpec, family: &MixtureFamily) -> AppResult<Option<SelectionRule>> {
    Ok(match spec {
        OrderSpec::Fixed(_) => None,
        OrderSpec::Rule { regime, a: Some(a) } => Some(SelectionRule::new(regime, a)),
        OrderSpec::Rule { regime, a: None } => Some(SelectionRule::default_for(regime, family)?),
    })
}

fn order_choice(spec: OrderSpec, family: &MixtureFamily) -> AppResult<OrderChoice> {
    Ok(match (spec, selection_rule(spec, family)?) {
        (OrderSpec::Fixed(m), _) => OrderChoice::Fixed(m),
        (_, Some(rule)) => OrderChoice::Rule(rule),
        _ => unreachable!("rule specs resolve to a rule"),
    })
}

struct Context<'a> {
    config: &'a RunConfig,
    echo: ConfigEcho,
    stdout: &'a mut dyn Write,
}

impl Context<'_> {
    fn family(&self) -> AppResult<MixtureFamily> {
        let spec = self
            .config
            .family
            .as_ref()
            .ok_or_else(|| AppError::usage("--family", "a family is required"))?;
        build_family(spec)
    }

    fn out_path(&self, name: &str) -> Option<PathBuf> {
        self.config.out.as_ref().map(|d| d.join(name))
    }

    /// Writes to `<out>/<name>` or, without `--out`, to stdout when
    /// `primary` is set.
    fn emit<F>(&mut self, name: &str, primary: bool, body: F) -> AppResult<()>
    where
        F: FnOnce(&mut dyn Write, &ConfigEcho) -> AppResult<()>,
    {
        match self.out_path(name) {
            Some(path) => {
                let echo = &self.echo;
                formats::with_output_file(&path, |w| body(w, echo))
            }
            None if primary => body(&mut *self.stdout, &self.echo),
            None => Ok(()),
        }
    }
}

/// Fills in the default selection constant so that the echo shows the value
/// actually used.
fn resolve_rule_constant(config: &RunConfig) -> AppResult<RunConfig> {
    let mut resolved = config.clone();
    if let (Some(OrderSpec::Rule { regime, a: None }), Some(spec)) = (config.order, &config.family)
    {
        let rule = SelectionRule::default_for(regime, &build_family(spec)?)?;
        resolved.order = Some(OrderSpec::Rule {
            regime,
            a: Some(rule.a),
        });
    }
    Ok(resolved)
}

pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> AppResult<()> {
    let config = &resolve_rule_constant(config)?;
    let mut ctx = Context {
        config,
        echo: config.echo(),
        stdout,
    };
    match config.command {
        CommandKind::Basis => run_basis(&mut ctx),
        CommandKind::Estimate => run_estimate(&mut ctx),
        CommandKind::Simulate => run_simulate(&mut ctx),
        CommandKind::Rates => run_rates(&mut ctx),
        CommandKind::Audit => run_audit(&mut ctx),
        CommandKind::Smoothness => run_smoothness(&mut ctx),
    }
}

fn run_basis(ctx: &mut Context) -> AppResult<()> {
    let Some(OrderSpec::Fixed(m)) = ctx.config.order else {
        return Err(AppError::usage("--m", "basis needs --m"));
    };
    let interval = match &ctx.config.family {
        Some(_) => ctx.family()?.target_interval(),
        None => Interval::new(ctx.config.a, ctx.config.b)?,
    };
    let basis = build_basis(interval, m, ctx.config.precision)?;
    ctx.echo
        .push(("basis-lo".into(), interval.lo().to_string()));
    ctx.echo
        .push(("basis-hi".into(), interval.hi().to_string()));
    ctx.echo.push((
        "orthonormality-residual".into(),
        basis.residual().to_string(),
    ));
    ctx.emit("basis.csv", true, |w, echo| {
        formats::write_basis_csv(w, echo, &basis)
    })
}

fn run_estimate(ctx: &mut Context) -> AppResult<()> {
    let config = ctx.config;
    let family = ctx.family()?;
    let input = config
        .input
        .as_ref()
        .ok_or_else(|| AppError::usage("--input", "estimate needs an input file"))?;
    let data = formats::read_data(input)?;
    if data.is_empty() {
        return Err(AppError::Parse {
            path: input.clone(),
            line: 0,
            message: "no observations".into(),
        });
    }
    let spec = config
        .order
        .ok_or_else(|| AppError::usage("--m", "estimate needs --m or --rule"))?;
    let m = match order_choice(spec, &family)? {
        OrderChoice::Fixed(m) => m,
        OrderChoice::Rule(rule) => select_m(rule, data.len(), &family)?,
    };
    let basis = Arc::new(build_basis(family.target_interval(), m, config.precision)?);
    let est = estimate_coefficients(&family, &basis, &data, m)?;
    let post = postprocess_density(&est, config.postprocess)?;
    ctx.echo.push(("n".into(), data.len().to_string()));
    ctx.echo.push(("m-used".into(), m.to_string()));

    let grid = family.theta_interval().uniform_grid(config.grid);
    let rows = grid
        .iter()
        .map(|&t| Ok(vec![t, est.evaluate(t)?, post.eval(t)?]))
        .collect::<mixdens_core::Result<Vec<_>>>()?;
    ctx.emit("estimate.csv", true, |w, echo| {
        formats::write_curve_csv(w, echo, &["t", "f_hat", "f_hat_post"], &rows)
    })?;
    let doc = EstimateDocument {
        family: family.describe(),
        n: data.len(),
        m,
        coefficients: est.coefficients().to_vec(),
        postprocess: match config.postprocess {
            PostProcess::Raw => "raw".into(),
            PostProcess::ClipRenormalize => "clip".into(),
        },
        scale: post.scale(),
    };
    ctx.emit("estimate.json", false, |w, echo| {
        formats::write_json(w, echo, &doc)
    })
}

fn experiment_config(ctx: &Context) -> AppResult<ExperimentConfig> {
    let config = ctx.config;
    let family = ctx.family()?;
    let f_spec = config
        .f_true
        .as_ref()
        .ok_or_else(|| AppError::usage("--f-true", "a true density is required"))?;
    let f_true = build_f_true(
        f_spec,
        family.theta_interval(),
        Some(&family),
        config.precision,
    )?;
    let spec = config
        .order
        .ok_or_else(|| AppError::usage("--m", "--m or --rule is required"))?;
    let order = order_choice(spec, &family)?;
    let mut exp = ExperimentConfig::new(
        family,
        f_true,
        config.sample_sizes.clone(),
        order,
        config.replications,
        config.seed,
    );
    exp.grid_points = config.grid;
    exp.precision_digits = config.precision;
    exp.sigma_samples = config.sigma_samples;
    exp.postprocess = config.postprocess;
    exp.threads = config.threads;
    exp.output_path = config.out.clone();
    Ok(exp)
}

#[derive(Serialize)]
struct SeedRow {
    n: usize,
    replication: usize,
    seed: u64,
}

#[derive(Serialize)]
struct Summary<'a> {
    family: &'a str,
    f_true: &'a str,
    master_seed: u64,
    replications: usize,
    sigma_seed: u64,
    sigma_samples: usize,
    cells: &'a [crate::experiment::CellSummary],
    seeds: Vec<SeedRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rates: Option<&'a [crate::experiment::RateRow]>,
}

fn summary<'a>(
    report: &'a ExperimentReport,
    rates: Option<&'a [crate::experiment::RateRow]>,
) -> Summary<'a> {
    Summary {
        family: &report.family,
        f_true: &report.f_true,
        master_seed: report.master_seed,
        replications: report.replications,
        sigma_seed: report.sigma_seed,
        sigma_samples: report.sigma_samples,
        cells: &report.cells,
        seeds: report
            .runs
            .iter()
            .map(|r| SeedRow {
                n: r.n,
                replication: r.replication,
                seed: r.seed,
            })
            .collect(),
        rates,
    }
}

/// File name of the replication-0 dump for sample size `n`.
pub fn data_file_name(n: usize) -> String {
    format!("data_n{n}.txt")
}

fn run_simulate(ctx: &mut Context) -> AppResult<()> {
    let exp = experiment_config(ctx)?;
    let report = run_experiment(&exp)?;
    ctx.emit("ise.csv", false, |w, echo| {
        formats::write_ise_csv(w, echo, &report)
    })?;
    ctx.emit("coefficients.csv", false, |w, echo| {
        formats::write_coefficients_csv(w, echo, &report)
    })?;
    let doc = summary(&report, None);
    ctx.emit("summary.json", true, |w, echo| {
        formats::write_json(w, echo, &doc)
    })?;
    if ctx.config.dump_data {
        let dir = ctx
            .config
            .out
            .clone()
            .ok_or_else(|| AppError::usage("--dump-data", "--dump-data needs --out"))?;
        dump_data(&exp, &ctx.echo, &dir)?;
    }
    Ok(())
}

fn dump_data(exp: &ExperimentConfig, echo: &ConfigEcho, dir: &Path) -> AppResult<()> {
    for &n in &exp.sample_sizes {
        let seed = deterministic_hash(exp.master_seed, n as u64, 0);
        let data = sample_mixture(&exp.family, &exp.f_true, n, &mut rng_from_seed(seed))?;
        let mut local = echo.clone();
        local.push(("sample-n".into(), n.to_string()));
        local.push(("replication".into(), "0".into()));
        local.push(("replication-seed".into(), seed.to_string()));
        let path = dir.join(data_file_name(n));
        formats::with_output_file(&path, |w| {
            formats::write_data(w, &local, &data).map_err(|e| AppError::io(&path, e))
        })?;
    }
    Ok(())
}

fn run_rates(ctx: &mut Context) -> AppResult<()> {
    let exp = experiment_config(ctx)?;
    let (rows, report) = rate_table(&exp, ctx.config.alpha, ctx.config.c)?;
    ctx.emit("rates.csv", true, |w, echo| {
        formats::write_rates_csv(w, echo, &rows)
    })?;
    let doc = summary(&report, Some(&rows));
    ctx.emit("summary.json", false, |w, echo| {
        formats::write_json(w, echo, &doc)
    })
}

fn run_audit(ctx: &mut Context) -> AppResult<()> {
    let config = ctx.config;
    let family = ctx.family()?;
    let f_spec = config
        .f_true
        .as_ref()
        .ok_or_else(|| AppError::usage("--f-true", "a true density is required"))?;
    let f = build_f_true(
        f_spec,
        family.theta_interval(),
        Some(&family),
        config.precision,
    )?;
    let rows = variance_condition_audit(&family, &f, config.k_max, config.n_mc, config.seed)?;
    ctx.emit("audit.csv", true, |w, echo| {
        formats::write_audit_csv(w, echo, &rows)
    })
}

#[derive(Serialize)]
struct CertificateDocument {
    alpha: f64,
    c: f64,
    r: u32,
    verdict: String,
    witness_t: Option<f64>,
    witness_value: Option<f64>,
    margin: f64,
}

fn run_smoothness(ctx: &mut Context) -> AppResult<()> {
    let config = ctx.config;
    let interval = Interval::new(config.a, config.b)?;
    let family = match &config.family {
        Some(_) => Some(ctx.family()?),
        None => None,
    };
    let f_spec = config
        .f_true
        .as_ref()
        .ok_or_else(|| AppError::usage("--f-true", "a true density is required"))?;
    let f = build_f_true(f_spec, interval, family.as_ref(), config.precision)?;
    let r = config.alpha.floor() as u32 + 1;
    let mut query = ModulusQuery::new(f, r);
    query.h_subdivisions = config.h_subdivisions;
    let cert = certify_query(&query, config.alpha, config.c)?;
    let modulus = if cert.modulus.is_empty() {
        mixdens_core::weighted_modulus(&query)?
    } else {
        cert.modulus.clone()
    };
    let rows: Vec<Vec<f64>> = modulus
        .iter()
        .map(|&(t, w)| vec![t, w, config.c * t.powf(config.alpha)])
        .collect();
    ctx.emit("modulus.csv", true, |w, echo| {
        formats::write_curve_csv(w, echo, &["t", "omega", "envelope"], &rows)
    })?;
    let (verdict, witness_t, witness_value) = match cert.verdict {
        Verdict::ConsistentWithMembership => ("consistent".to_string(), None, None),
        Verdict::Violated(Violation::NormExceeded { norm }) => {
            ("norm-exceeded".into(), None, Some(norm))
        }
        Verdict::Violated(Violation::ModulusExceeded { t, omega }) => {
            ("modulus-exceeded".into(), Some(t), Some(omega))
        }
    };
    let doc = CertificateDocument {
        alpha: cert.alpha,
        c: cert.c,
        r,
        verdict,
        witness_t,
        witness_value,
        margin: cert.margin,
    };
    ctx.emit("certificate.json", false, |w, echo| {
        formats::write_json(w, echo, &doc)
    })
}

/// Parses `argv`, runs the command and returns the process exit code.
/// Failures produce one `error kind=... message="..."` line on `stderr`.
pub fn main_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_config(argv).and_then(|parsed| match parsed {
        Parsed::Info(text) => {
            let _ = write!(stdout, "{text}");
            Ok(())
        }
        Parsed::Run(config) => run(&config, stdout),
    });
    match result {
        Ok(()) => 0,
        Err(e) if e.is_broken_pipe() => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.machine_line());
            e.exit_code()
        }
    }
}
