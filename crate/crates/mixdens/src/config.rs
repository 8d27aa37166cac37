//! Command-line and config-file parsing into a fully resolved [`RunConfig`].
//!
//! Flags override keys of the TOML file given by `--config`; the file uses the
//! flag names (without dashes in front) as keys and rejects unknown keys.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Args, Parser, Subcommand};
use mixdens_core::{PostProcess, Regime};
use serde::Deserialize;

use crate::error::{AppError, AppResult};
use crate::formats::ConfigEcho;

pub const DEFAULT_REPLICATIONS: usize = 100;
pub const DEFAULT_GRID: usize = 512;
pub const DEFAULT_K_MAX: usize = 8;
pub const DEFAULT_N_MC: usize = 100_000;

#[derive(Debug, Parser)]
#[command(
    name = "mixdens",
    version,
    about = "Projection estimators for mixing densities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump the normalized Legendre coefficient matrix Q.
    Basis(Flags),
    /// Estimate the mixing density from a data file.
    Estimate(Flags),
    /// Replicated simulation experiment.
    Simulate(Flags),
    /// MISE against the rate envelope along a selection rule.
    Rates(Flags),
    /// Monte Carlo audit of the variance condition.
    Audit(Flags),
    /// Weighted moduli of smoothness and class membership.
    Smoothness(Flags),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Basis,
    Estimate,
    Simulate,
    Rates,
    Audit,
    Smoothness,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Basis => "basis",
            CommandKind::Estimate => "estimate",
            CommandKind::Simulate => "simulate",
            CommandKind::Rates => "rates",
            CommandKind::Audit => "audit",
            CommandKind::Smoothness => "smoothness",
        }
    }
}

#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// exp-indicator | exp-moment | gamma-shape | beta-scale | generic-scale
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Shape of the beta-scale kernel.
    #[arg(long)]
    pub k: Option<u32>,
    /// Fixed approximation order.
    #[arg(long)]
    pub m: Option<usize>,
    /// logn[:A] or loglog[:A]; A defaults to half its admissible bound.
    #[arg(long)]
    pub rule: Option<String>,
    /// Comma-separated sample sizes.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Points of the output and cross-check grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Decimal digits of the extended-precision basis construction.
    #[arg(long)]
    pub precision: Option<u32>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// raw | clip
    #[arg(long)]
    pub postprocess: Option<String>,
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write replication 0 of every sample size as a data file.
    #[arg(long)]
    pub dump_data: bool,
    /// uniform | cosine-bump | beta-shaped(p,q) | in-basis(c1,c2,...)
    #[arg(long)]
    pub f_true: Option<String>,
    /// Observation file for `estimate`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Class or envelope constant C.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub n_mc: Option<usize>,
    /// Draws used for the covariance of g(X) in `simulate` and `rates`.
    #[arg(long)]
    pub sigma_samples: Option<usize>,
    /// Unit kernel of generic-scale: uniform | beta(p,q)
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub kernel_support: Option<f64>,
    #[arg(long)]
    pub h_subdivisions: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum SizeList {
    One(u64),
    Many(Vec<u64>),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    family: Option<String>,
    a: Option<f64>,
    b: Option<f64>,
    k: Option<u32>,
    m: Option<usize>,
    rule: Option<String>,
    n: Option<SizeList>,
    reps: Option<usize>,
    seed: Option<u64>,
    grid: Option<usize>,
    precision: Option<u32>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    postprocess: Option<String>,
    dump_data: Option<bool>,
    f_true: Option<String>,
    input: Option<PathBuf>,
    alpha: Option<f64>,
    c: Option<f64>,
    k_max: Option<usize>,
    n_mc: Option<usize>,
    sigma_samples: Option<usize>,
    kernel: Option<String>,
    kernel_support: Option<f64>,
    kernel_xs: Option<Vec<f64>>,
    kernel_ys: Option<Vec<f64>>,
    h_subdivisions: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyName {
    ExponentialIndicator,
    ExponentialMoment,
    GammaShape,
    BetaScale,
    GenericScale,
}

impl FamilyName {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "exp-indicator" => FamilyName::ExponentialIndicator,
            "exp-moment" => FamilyName::ExponentialMoment,
            "gamma-shape" => FamilyName::GammaShape,
            "beta-scale" => FamilyName::BetaScale,
            "generic-scale" => FamilyName::GenericScale,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyName::ExponentialIndicator => "exp-indicator",
            FamilyName::ExponentialMoment => "exp-moment",
            FamilyName::GammaShape => "gamma-shape",
            FamilyName::BetaScale => "beta-scale",
            FamilyName::GenericScale => "generic-scale",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Uniform,
    Beta { p: f64, q: f64 },
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub name: FamilyName,
    pub a: f64,
    pub b: f64,
    pub k: Option<u32>,
    pub kernel: Option<KernelSpec>,
    pub kernel_support: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FTrueSpec {
    Uniform,
    CosineBump,
    BetaShaped { p: f64, q: f64 },
    InBasis(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderSpec {
    Fixed(usize),
    Rule { regime: Regime, a: Option<f64> },
}

/// Everything a command needs, with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub a: f64,
    pub b: f64,
    pub family: Option<FamilySpec>,
    pub order: Option<OrderSpec>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub grid: usize,
    pub precision: u32,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub postprocess: PostProcess,
    pub dump_data: bool,
    pub f_true: Option<FTrueSpec>,
    pub input: Option<PathBuf>,
    pub alpha: f64,
    pub c: f64,
    pub k_max: usize,
    pub n_mc: usize,
    pub sigma_samples: usize,
    pub h_subdivisions: usize,
}

fn flag_of_clap_error(err: &clap::Error) -> String {
    match err.get(ContextKind::InvalidArg) {
        Some(ContextValue::String(s)) => s.split_whitespace().next().unwrap_or(s).to_string(),
        Some(ContextValue::Strings(v)) => v.first().cloned().unwrap_or_default(),
        _ => "<command>".to_string(),
    }
}

/// Outcome of argument parsing that is not a configuration.
#[derive(Debug)]
pub enum Parsed {
    Run(Box<RunConfig>),
    /// `--help` or `--version` text.
    Info(String),
}

pub fn parse_config<I, T>(argv: I) -> AppResult<Parsed>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    Ok(Parsed::Info(e.render().to_string()))
                }
                _ => {
                    let text = e.render().to_string();
                    let first = text
                        .lines()
                        .next()
                        .unwrap_or("")
                        .trim_start_matches("error: ");
                    Err(AppError::usage(flag_of_clap_error(&e), first))
                }
            };
        }
    };
    let (kind, flags) = match cli.command {
        Command::Basis(f) => (CommandKind::Basis, f),
        Command::Estimate(f) => (CommandKind::Estimate, f),
        Command::Simulate(f) => (CommandKind::Simulate, f),
        Command::Rates(f) => (CommandKind::Rates, f),
        Command::Audit(f) => (CommandKind::Audit, f),
        Command::Smoothness(f) => (CommandKind::Smoothness, f),
    };
    let file = match &flags.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };
    resolve(kind, flags, file).map(|c| Parsed::Run(Box::new(c)))
}

fn load_file(path: &Path) -> AppResult<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    toml::from_str(&text)
        .map_err(|e| AppError::usage("--config", format!("{}: {}", path.display(), e.message())))
}

fn parse_sizes(flag: &str, text: &str) -> AppResult<Vec<usize>> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            let v: f64 = s
                .parse()
                .map_err(|_| AppError::usage(flag, format!("not a sample size: {s:?}")))?;
            if v < 1.0 || v.fract() != 0.0 || v > 1e12 {
                return Err(AppError::usage(flag, format!("not a sample size: {s:?}")));
            }
            Ok(v as usize)
        })
        .collect()
}

fn parse_call(text: &str) -> Option<(&str, Vec<&str>)> {
    let text = text.trim();
    match text.find('(') {
        None => Some((text, Vec::new())),
        Some(open) => {
            let inner = text[open + 1..].strip_suffix(')')?;
            let args = inner
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .collect();
            Some((text[..open].trim(), args))
        }
    }
}

fn parse_numbers(flag: &str, args: &[&str]) -> AppResult<Vec<f64>> {
    args.iter()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AppError::usage(flag, format!("not a number: {s:?}")))
        })
        .collect()
}

fn parse_f_true(text: &str) -> AppResult<FTrueSpec> {
    let flag = "--f-true";
    let (name, args) =
        parse_call(text).ok_or_else(|| AppError::usage(flag, format!("cannot parse {text:?}")))?;
    let nums = parse_numbers(flag, &args)?;
    let arity = |want: usize| {
        if nums.len() == want {
            Ok(())
        } else {
            Err(AppError::usage(
                flag,
                format!("{name} takes {want} arguments"),
            ))
        }
    };
    Ok(match name {
        "uniform" => {
            arity(0)?;
            FTrueSpec::Uniform
        }
        "cosine-bump" => {
            arity(0)?;
            FTrueSpec::CosineBump
        }
        "beta-shaped" => {
            arity(2)?;
            FTrueSpec::BetaShaped {
                p: nums[0],
                q: nums[1],
            }
        }
        "in-basis" => {
            if nums.is_empty() {
                return Err(AppError::usage(
                    flag,
                    "in-basis needs at least one coefficient",
                ));
            }
            FTrueSpec::InBasis(nums)
        }
        other => return Err(AppError::usage(flag, format!("unknown density {other:?}"))),
    })
}

fn parse_kernel(text: &str) -> AppResult<KernelSpec> {
    let flag = "--kernel";
    let (name, args) =
        parse_call(text).ok_or_else(|| AppError::usage(flag, format!("cannot parse {text:?}")))?;
    let nums = parse_numbers(flag, &args)?;
    match (name, nums.len()) {
        ("uniform", 0) => Ok(KernelSpec::Uniform),
        ("beta", 2) => Ok(KernelSpec::Beta {
            p: nums[0],
            q: nums[1],
        }),
        _ => Err(AppError::usage(
            flag,
            format!("expected uniform or beta(p,q), got {text:?}"),
        )),
    }
}

fn parse_rule(text: &str) -> AppResult<OrderSpec> {
    let flag = "--rule";
    let (name, a) = match text.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (text, None),
    };
    let regime = match name.trim() {
        "logn" => Regime::LogN,
        "loglog" => Regime::LogNOverLogLogN,
        other => return Err(AppError::usage(flag, format!("unknown regime {other:?}"))),
    };
    let a = match a {
        None => None,
        Some(s) => Some(
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AppError::usage(flag, format!("not a number: {s:?}")))?,
        ),
    };
    Ok(OrderSpec::Rule { regime, a })
}

fn parse_postprocess(text: &str) -> AppResult<PostProcess> {
    match text {
        "raw" => Ok(PostProcess::Raw),
        "clip" => Ok(PostProcess::ClipRenormalize),
        other => Err(AppError::usage(
            "--postprocess",
            format!("expected raw or clip, got {other:?}"),
        )),
    }
}

fn resolve(command: CommandKind, flags: Flags, file: FileConfig) -> AppResult<RunConfig> {
    use CommandKind::*;
    let needs_family = matches!(command, Estimate | Simulate | Rates | Audit);
    let needs_f_true = matches!(command, Simulate | Rates | Audit | Smoothness);

    let a = flags.a.or(file.a);
    let b = flags.b.or(file.b);
    let (a, b) = match (a, b) {
        (Some(a), Some(b)) => (a, b),
        (None, _) => return Err(AppError::usage("--a", "the interval start is required")),
        (_, None) => return Err(AppError::usage("--b", "the interval end is required")),
    };
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(AppError::usage(
            "--b",
            format!("need a < b, got [{a}, {b}]"),
        ));
    }

    let family = match flags.family.or(file.family) {
        None if needs_family => {
            return Err(AppError::usage(
                "--family",
                format!("{} needs a family", command.name()),
            ))
        }
        None => None,
        Some(text) => {
            let name = FamilyName::parse(&text)
                .ok_or_else(|| AppError::usage("--family", format!("unknown family {text:?}")))?;
            let k = flags.k.or(file.k);
            if name == FamilyName::BetaScale && k.is_none() {
                return Err(AppError::usage("--k", "beta-scale needs --k"));
            }
            if name == FamilyName::BetaScale && k == Some(0) {
                return Err(AppError::usage("--k", "k must be at least 1"));
            }
            if a <= 0.0 {
                return Err(AppError::usage(
                    "--a",
                    "the parameter interval must lie in (0, ∞)",
                ));
            }
            let kernel = match (flags.kernel.or(file.kernel), file.kernel_xs, file.kernel_ys) {
                (Some(text), None, None) => Some(parse_kernel(&text)?),
                (None, Some(xs), Some(ys)) => Some(KernelSpec::Tabulated { xs, ys }),
                (None, None, None) => None,
                (Some(_), _, _) => {
                    return Err(AppError::usage(
                        "--kernel",
                        "give either a kernel shape or a table",
                    ))
                }
                _ => {
                    return Err(AppError::usage(
                        "--config",
                        "kernel-xs and kernel-ys must be given together",
                    ))
                }
            };
            if name == FamilyName::GenericScale && kernel.is_none() {
                return Err(AppError::usage("--kernel", "generic-scale needs a kernel"));
            }
            Some(FamilySpec {
                name,
                a,
                b,
                k,
                kernel,
                kernel_support: flags.kernel_support.or(file.kernel_support).unwrap_or(1.0),
            })
        }
    };

    let m = flags.m.or(file.m);
    let rule = flags.rule.or(file.rule);
    let order = match (m, rule) {
        (Some(_), Some(_)) => {
            return Err(AppError::usage(
                "--rule",
                "give either --m or --rule, not both",
            ))
        }
        (Some(0), None) => return Err(AppError::usage("--m", "m must be at least 1")),
        (Some(m), None) => Some(OrderSpec::Fixed(m)),
        (None, Some(r)) => Some(parse_rule(&r)?),
        (None, None) => None,
    };
    match command {
        Basis if !matches!(order, Some(OrderSpec::Fixed(_))) => {
            return Err(AppError::usage("--m", "basis needs --m"))
        }
        Estimate | Simulate if order.is_none() => {
            return Err(AppError::usage(
                "--m",
                format!("{} needs --m or --rule", command.name()),
            ))
        }
        Rates if !matches!(order, Some(OrderSpec::Rule { .. })) => {
            return Err(AppError::usage("--rule", "rates needs --rule"))
        }
        _ => {}
    }

    let sample_sizes = match (flags.n, file.n) {
        (Some(text), _) => parse_sizes("--n", &text)?,
        (None, Some(SizeList::One(v))) => vec![v as usize],
        (None, Some(SizeList::Many(v))) => v.into_iter().map(|x| x as usize).collect(),
        (None, Some(SizeList::Text(t))) => parse_sizes("--n", &t)?,
        (None, None) => Vec::new(),
    };
    if matches!(command, Simulate | Rates) {
        if sample_sizes.is_empty() {
            return Err(AppError::usage(
                "--n",
                format!("{} needs --n", command.name()),
            ));
        }
        if sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AppError::usage(
                "--n",
                "sample sizes must be strictly increasing",
            ));
        }
        if command == Rates && sample_sizes.len() < 3 {
            return Err(AppError::usage(
                "--n",
                "rates needs at least 3 sample sizes",
            ));
        }
    }

    let replications = flags.reps.or(file.reps).unwrap_or(DEFAULT_REPLICATIONS);
    if matches!(command, Simulate | Rates) && replications < 2 {
        return Err(AppError::usage(
            "--reps",
            "at least 2 replications are needed",
        ));
    }
    let grid = flags.grid.or(file.grid).unwrap_or(DEFAULT_GRID);
    if grid < 2 {
        return Err(AppError::usage(
            "--grid",
            "the grid needs at least 2 points",
        ));
    }
    let precision = flags
        .precision
        .or(file.precision)
        .unwrap_or(mixdens_core::DEFAULT_PRECISION_DIGITS);
    if precision < 15 {
        return Err(AppError::usage(
            "--precision",
            "at least 15 digits are needed",
        ));
    }
    let threads = flags.threads.or(file.threads);
    if threads == Some(0) {
        return Err(AppError::usage(
            "--threads",
            "thread count must be positive",
        ));
    }
    let postprocess = match flags.postprocess.or(file.postprocess) {
        Some(t) => parse_postprocess(&t)?,
        None => PostProcess::Raw,
    };
    let f_true = match flags.f_true.or(file.f_true) {
        Some(t) => Some(parse_f_true(&t)?),
        None if needs_f_true => {
            return Err(AppError::usage(
                "--f-true",
                format!("{} needs --f-true", command.name()),
            ))
        }
        None => None,
    };
    if matches!(f_true, Some(FTrueSpec::InBasis(_))) && family.is_none() {
        return Err(AppError::usage(
            "--family",
            "in-basis densities need a family",
        ));
    }
    let input = flags.input.or(file.input);
    if command == Estimate && input.is_none() {
        return Err(AppError::usage("--input", "estimate needs an input file"));
    }
    let alpha = flags.alpha.or(file.alpha).unwrap_or(1.0);
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(AppError::usage("--alpha", "alpha must be positive"));
    }
    let c = flags.c.or(file.c).unwrap_or(1.0);
    if !(c > 0.0 && c.is_finite()) {
        return Err(AppError::usage("--c", "C must be positive"));
    }
    let k_max = flags.k_max.or(file.k_max).unwrap_or(DEFAULT_K_MAX);
    if k_max == 0 {
        return Err(AppError::usage("--k-max", "k_max must be at least 1"));
    }
    let n_mc = flags.n_mc.or(file.n_mc).unwrap_or(DEFAULT_N_MC);
    if n_mc < 2 {
        return Err(AppError::usage("--n-mc", "at least 2 draws are needed"));
    }
    let sigma_samples = flags
        .sigma_samples
        .or(file.sigma_samples)
        .unwrap_or(crate::experiment::DEFAULT_SIGMA_SAMPLES);
    if sigma_samples < 2 {
        return Err(AppError::usage(
            "--sigma-samples",
            "at least 2 draws are needed",
        ));
    }
    let h_subdivisions = flags
        .h_subdivisions
        .or(file.h_subdivisions)
        .unwrap_or(mixdens_core::smoothness::DEFAULT_H_SUBDIVISIONS);
    if h_subdivisions == 0 {
        return Err(AppError::usage("--h-subdivisions", "must be positive"));
    }

    Ok(RunConfig {
        command,
        a,
        b,
        family,
        order,
        sample_sizes,
        replications,
        seed: flags.seed.or(file.seed).unwrap_or(0),
        grid,
        precision,
        out: flags.out.or(file.out),
        threads,
        postprocess,
        dump_data: flags.dump_data || file.dump_data.unwrap_or(false),
        f_true,
        input,
        alpha,
        c,
        k_max,
        n_mc,
        sigma_samples,
        h_subdivisions,
    })
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// The resolved configuration in a fixed key order. Thread count and
    /// output location are left out: they do not affect results.
    pub fn echo(&self) -> ConfigEcho {
        let mut e: ConfigEcho = Vec::new();
        let mut put = |k: &str, v: String| e.push((k.to_string(), v));
        put("command", self.command.name().into());
        put("a", self.a.to_string());
        put("b", self.b.to_string());
        if let Some(f) = &self.family {
            put("family", f.name.as_str().into());
            if let Some(k) = f.k {
                put("k", k.to_string());
            }
            match &f.kernel {
                Some(KernelSpec::Uniform) => put("kernel", "uniform".into()),
                Some(KernelSpec::Beta { p, q }) => put("kernel", format!("beta({p},{q})")),
                Some(KernelSpec::Tabulated { xs, ys }) => {
                    put("kernel", "tabulated".into());
                    put("kernel-xs", join(xs));
                    put("kernel-ys", join(ys));
                }
                None => {}
            }
            if f.kernel.is_some() {
                put("kernel-support", f.kernel_support.to_string());
            }
        }
        match self.order {
            Some(OrderSpec::Fixed(m)) => put("m", m.to_string()),
            Some(OrderSpec::Rule { regime, a }) => {
                let name = match regime {
                    Regime::LogN => "logn",
                    Regime::LogNOverLogLogN => "loglog",
                };
                put(
                    "rule",
                    match a {
                        Some(a) => format!("{name}:{a}"),
                        None => name.into(),
                    },
                );
            }
            None => {}
        }
        match self.command {
            CommandKind::Simulate | CommandKind::Rates => {
                put("n", join(&self.sample_sizes));
                put("reps", self.replications.to_string());
                put("sigma-samples", self.sigma_samples.to_string());
            }
            CommandKind::Audit => {
                put("k-max", self.k_max.to_string());
                put("n-mc", self.n_mc.to_string());
            }
            CommandKind::Smoothness => {
                put("h-subdivisions", self.h_subdivisions.to_string());
            }
            _ => {}
        }
        if matches!(self.command, CommandKind::Rates | CommandKind::Smoothness) {
            put("alpha", self.alpha.to_string());
            put("c", self.c.to_string());
        }
        put("seed", self.seed.to_string());
        put("grid", self.grid.to_string());
        put("precision", self.precision.to_string());
        put(
            "postprocess",
            match self.postprocess {
                PostProcess::Raw => "raw",
                PostProcess::ClipRenormalize => "clip",
            }
            .into(),
        );
        if let Some(f) = &self.f_true {
            put(
                "f-true",
                match f {
                    FTrueSpec::Uniform => "uniform".into(),
                    FTrueSpec::CosineBump => "cosine-bump".into(),
                    FTrueSpec::BetaShaped { p, q } => format!("beta-shaped({p},{q})"),
                    FTrueSpec::InBasis(c) => format!("in-basis({})", join(c)),
                },
            );
        }
        if let Some(p) = &self.input {
            put("input", p.display().to_string());
        }
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &str) -> AppResult<RunConfig> {
        let argv = std::iter::once("mixdens").chain(args.split_whitespace());
        match parse_config(argv)? {
            Parsed::Run(c) => Ok(*c),
            Parsed::Info(t) => panic!("unexpected info: {t}"),
        }
    }

    fn usage_flag(r: AppResult<RunConfig>) -> String {
        match r {
            Err(AppError::Usage { flag, .. }) => flag,
            other => panic!("expected a usage error, got {other:?}"),
        }
    }

    #[test]
    fn simulate_example_parses() {
        let c = run("simulate --family exp-indicator --a 1 --b 2 --n 1000,10000 --reps 100 --seed 7 --m 3 --f-true cosine-bump").unwrap();
        assert_eq!(c.sample_sizes, vec![1000, 10000]);
        assert_eq!(c.replications, 100);
        assert_eq!(c.seed, 7);
        assert_eq!(c.family.unwrap().name, FamilyName::ExponentialIndicator);
    }

    #[test]
    fn missing_requirements_name_the_flag() {
        assert_eq!(
            usage_flag(run("estimate --family exp-indicator --a 1 --b 2 --m 2")),
            "--input"
        );
        assert_eq!(
            usage_flag(run(
                "estimate --family beta-scale --a 1 --b 2 --m 2 --input x"
            )),
            "--k"
        );
        assert_eq!(
            usage_flag(run(
                "simulate --family exp-indicator --a 1 --b 2 --m 2 --f-true uniform"
            )),
            "--n"
        );
        assert_eq!(usage_flag(run("basis --a 1 --b 2")), "--m");
        assert_eq!(
            usage_flag(run("basis --a 1 --b 2 --m 3 --bogus 1")),
            "--bogus"
        );
        assert_eq!(
            usage_flag(run("simulate --family nope --a 1 --b 2")),
            "--family"
        );
        assert_eq!(
            usage_flag(run(
                "rates --family exp-indicator --a 1 --b 2 --m 2 --n 10,20,30 --f-true uniform"
            )),
            "--rule"
        );
        assert_eq!(usage_flag(run("basis --a 2 --b 1 --m 3")), "--b");
        assert_eq!(
            usage_flag(run(
                "simulate --family exp-indicator --a 1 --b 2 --m 2 --n 100,50 --f-true uniform"
            )),
            "--n"
        );
        assert_eq!(
            usage_flag(run("basis --a 1 --b 2 --m 3 --threads 0")),
            "--threads"
        );
    }

    #[test]
    fn rule_and_densities_parse() {
        let c = run("simulate --family gamma-shape --a 1 --b 2 --rule loglog:0.1 --n 10,20 --f-true beta-shaped(2,3)").unwrap();
        assert_eq!(
            c.order,
            Some(OrderSpec::Rule {
                regime: Regime::LogNOverLogLogN,
                a: Some(0.1)
            })
        );
        assert_eq!(c.f_true, Some(FTrueSpec::BetaShaped { p: 2.0, q: 3.0 }));
        let c = run("simulate --family exp-indicator --a 1 --b 2 --rule logn --n 10 --f-true in-basis(1,0.1)").unwrap();
        assert_eq!(c.f_true, Some(FTrueSpec::InBasis(vec![1.0, 0.1])));
        assert_eq!(usage_flag(run("simulate --family exp-indicator --a 1 --b 2 --rule cubic:1 --n 10 --f-true uniform")), "--rule");
        assert_eq!(
            usage_flag(run(
                "simulate --family exp-indicator --a 1 --b 2 --m 1 --n 10 --f-true beta-shaped(2)"
            )),
            "--f-true"
        );
    }

    #[test]
    fn file_values_are_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "family = \"exp-indicator\"\na = 1.0\nb = 2.0\nn = [100, 200]\nseed = 3\nm = 2\nf-true = \"uniform\"\n").unwrap();
        let c = run(&format!("simulate --config {} --seed 9", path.display())).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.sample_sizes, vec![100, 200]);
        std::fs::write(&path, "a = 1.0\nb = 2.0\nm = 2\ncolour = \"red\"\n").unwrap();
        assert_eq!(
            usage_flag(run(&format!("basis --config {}", path.display()))),
            "--config"
        );
    }

    #[test]
    fn generic_scale_from_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.toml");
        std::fs::write(&path, "family = \"generic-scale\"\nkernel-xs = [0.0, 0.5, 1.0]\nkernel-ys = [1.0, 1.0, 1.0]\n").unwrap();
        let c = run(&format!(
            "estimate --config {} --a 1 --b 2 --m 2 --input d.txt",
            path.display()
        ))
        .unwrap();
        assert!(matches!(
            c.family.unwrap().kernel,
            Some(KernelSpec::Tabulated { .. })
        ));
        assert_eq!(
            usage_flag(run(
                "estimate --family generic-scale --a 1 --b 2 --m 2 --input d"
            )),
            "--kernel"
        );
    }

    #[test]
    fn echo_is_stable() {
        let c = run("simulate --family exp-indicator --a 1 --b 2 --n 1000 --reps 10 --seed 7 --m 3 --f-true cosine-bump --threads 3").unwrap();
        let echo = c.echo();
        let keys: Vec<&str> = echo.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys[..4], ["command", "a", "b", "family"]);
        let mut d = c.clone();
        d.threads = Some(1);
        assert_eq!(c.echo(), d.echo());
    }

    #[test]
    fn help_is_info() {
        let argv = ["mixdens", "--help"];
        assert!(matches!(parse_config(argv).unwrap(), Parsed::Info(_)));
    }
}
