use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use toepfer::blasius::{solve_toepfer, BlasiusError, Integrator, ToepferConfig};
use toepfer::falkner_skan::{
    find_beta_min, solve_case, sweep_beta, BetaMinConfig, BetaMinError, FalknerSkanCase, Flow,
    SeedPolicy,
};
use toepfer::itm::{ItmConfig, ItmError};
use toepfer::ode::{AdaptiveConfig, DEFAULT_MAX_STEPS};

use crate::format::*;

/// Process exit codes. They depend on the outcome class only.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INVALID: i32 = 1;
    pub const NO_CONVERGENCE: i32 = 2;
    pub const DOUBLE_BLOW_UP: i32 = 3;
    pub const PARTIAL_SWEEP: i32 = 4;
}

#[derive(Debug, Parser)]
#[command(
    name = "toepfer",
    version,
    about = "Transformation-method solvers for the Blasius and Falkner-Skan boundary layers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Report layout.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Rk4,
    Adaptive,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Blasius skin friction by Töpfer's non-iterative method.
    Blasius(BlasiusArgs),
    /// One Falkner-Skan case by the iterative transformation method.
    FalknerSkan(FalknerSkanArgs),
    /// Skin friction along one branch for a list or range of beta.
    Sweep(SweepArgs),
    /// Continuation toward the limiting beta where both branches merge.
    BetaMin(BetaMinArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct BlasiusArgs {
    #[arg(long, value_enum, default_value = "adaptive")]
    pub method: Method,
    /// RK4 grid step.
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    /// Truncated boundaries eta*_j, comma separated. Defaults to 4,6 for rk4
    /// and 6,8,10 for adaptive.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<f64>>,
    /// Defaults to 1e-3 for rk4 and 1e-9 for adaptive.
    #[arg(long)]
    pub agreement_tol: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub atol: f64,
    /// Also write the physical profile as CSV to this path.
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct ItmArgs {
    /// Truncated boundary eta*_inf.
    #[arg(long, default_value_t = 20.0)]
    pub eta_inf: f64,
    /// Bound on |Gamma(h*)|.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_r: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_a: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub atol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
}

impl ItmArgs {
    fn config(&self, flow: Flow, h0: Option<f64>, h1: Option<f64>) -> ItmConfig {
        let (d0, d1) = flow.default_seeds();
        ItmConfig {
            h0: h0.unwrap_or(d0),
            h1: h1.unwrap_or(d1),
            eta_inf: self.eta_inf,
            tol: self.tol,
            tol_r: self.tol_r,
            tol_a: self.tol_a,
            max_iter: self.max_iter,
            integrator: AdaptiveConfig {
                rtol: self.rtol,
                atol: self.atol,
                max_steps: self.max_steps,
            },
        }
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct FalknerSkanArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value = "normal")]
    pub flow: Flow,
    /// First secant seed; defaults to 1 (normal) or 15 (reverse).
    #[arg(long)]
    pub h0: Option<f64>,
    /// Second secant seed; defaults to 5 (normal) or 25 (reverse).
    #[arg(long)]
    pub h1: Option<f64>,
    /// Append integrator work counters to each iterate.
    #[arg(long)]
    pub stats: bool,
    /// Also write the physical profile as CSV to this path.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[command(flatten)]
    pub itm: ItmArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    /// Comma-separated list of beta values.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "beta_range")]
    pub betas: Option<String>,
    /// `FROM:TO:N`, N evenly spaced values including both ends.
    #[arg(long, allow_hyphen_values = true)]
    pub beta_range: Option<String>,
    #[arg(long, default_value = "normal")]
    pub flow: Flow,
    #[arg(long)]
    pub h0: Option<f64>,
    #[arg(long)]
    pub h1: Option<f64>,
    /// Use the same seeds at every beta instead of warm starts; points are
    /// solved in parallel.
    #[arg(long)]
    pub independent: bool,
    #[command(flatten)]
    pub itm: ItmArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct BetaMinArgs {
    #[arg(long, default_value_t = 1e-5)]
    pub threshold: f64,
    #[arg(long, default_value_t = -0.1988)]
    pub start_beta: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub min_bracket: f64,
    #[arg(long, default_value_t = 60)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub atol: f64,
}

/// An error that ends the run with a given exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: exit::INVALID,
            message: message.into(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::invalid(format!("i/o error: {e}"))
    }
}

impl From<toepfer::error::Error> for Failure {
    fn from(e: toepfer::error::Error) -> Self {
        Failure::invalid(e.to_string())
    }
}

/// Parses `args` and runs the selected subcommand. Reports go to `stdout`
/// (or `--output`), diagnostics to `stderr`. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    return exit::OK;
                }
                _ => exit::INVALID,
            };
            let _ = write!(stderr, "{e}");
            return code;
        }
    };

    let mut report = Vec::new();
    let outcome = dispatch(&cli, &mut report);
    let flushed = match &cli.output {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            w.write_all(&report)?;
            w.flush()
        }),
        None => stdout.write_all(&report),
    };

    match (outcome, flushed) {
        (Ok(code), Ok(())) => code,
        (Err(f), _) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
        (Ok(_), Err(e)) => {
            let _ = writeln!(stderr, "error: cannot write report: {e}");
            exit::INVALID
        }
    }
}

fn dispatch(cli: &Cli, out: &mut Vec<u8>) -> Result<i32, Failure> {
    match &cli.command {
        Command::Blasius(a) => cmd_blasius(a, cli.format.unwrap_or(Format::Table), out),
        Command::FalknerSkan(a) => cmd_falkner_skan(a, cli.format.unwrap_or(Format::Table), out),
        Command::Sweep(a) => cmd_sweep(a, cli.format.unwrap_or(Format::Csv), out),
        Command::BetaMin(a) => cmd_beta_min(a, cli.format.unwrap_or(Format::Table), out),
    }
}

fn write_profile_file(
    path: &PathBuf,
    profile: &[toepfer::profile::ProfilePoint],
) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path)?);
    write_profile_csv(&mut w, profile)?;
    w.flush()?;
    Ok(())
}

fn cmd_blasius(a: &BlasiusArgs, format: Format, out: &mut Vec<u8>) -> Result<i32, Failure> {
    let (integrator, default_cps, default_tol) = match a.method {
        Method::Rk4 => (Integrator::Rk4 { step: a.step }, vec![4.0, 6.0], 1e-3),
        Method::Adaptive => (
            Integrator::Adaptive(AdaptiveConfig {
                rtol: a.rtol,
                atol: a.atol,
                max_steps: DEFAULT_MAX_STEPS,
            }),
            vec![6.0, 8.0, 10.0],
            1e-9,
        ),
    };
    if !(a.step > 0.0 && a.step.is_finite()) {
        return Err(Failure::invalid(format!(
            "--step must be positive, got {}",
            a.step
        )));
    }
    let config = ToepferConfig {
        checkpoints: a.checkpoints.clone().unwrap_or(default_cps),
        agreement_tol: a.agreement_tol.unwrap_or(default_tol),
        integrator,
    };
    config.validate()?;

    let (checkpoints, accepted) = match solve_toepfer(&config) {
        Ok(sol) => {
            if let Some(path) = &a.profile {
                write_profile_file(path, &sol.physical)?;
            }
            (sol.lambda_checkpoints, Some(sol.lambda))
        }
        Err(BlasiusError::NoConvergence { checkpoints }) => (checkpoints, None),
        Err(BlasiusError::BlowUp { at }) => {
            return Err(Failure {
                code: exit::NO_CONVERGENCE,
                message: format!("integration halted at eta* = {at}"),
            })
        }
        Err(BlasiusError::Invalid(e)) => return Err(e.into()),
    };

    match format {
        Format::Csv => {
            writeln!(out, "eta_star,lambda,accepted")?;
            let mut marked = false;
            for (i, &(eta, lambda)) in checkpoints.iter().enumerate() {
                let is_accepted = !marked
                    && i > 0
                    && accepted == Some(lambda)
                    && (lambda - checkpoints[i - 1].1).abs() <= config.agreement_tol;
                marked |= is_accepted;
                writeln!(out, "{},{},{}", csv_num(eta), csv_num(lambda), is_accepted)?;
            }
        }
        Format::Table => {
            writeln!(out, "{:>10}  {:>14}", "eta*_j", "lambda_j")?;
            for &(eta, lambda) in &checkpoints {
                writeln!(out, "{eta:>10}  {lambda:>14.10}")?;
            }
            if let Some(lambda) = accepted {
                writeln!(out, "accepted lambda = {lambda:.10}")?;
            }
        }
    }

    match accepted {
        Some(_) => Ok(exit::OK),
        None => Err(Failure {
            code: exit::NO_CONVERGENCE,
            message: format!(
                "no two consecutive checkpoint estimates agree within {}: {:?}",
                config.agreement_tol, checkpoints
            ),
        }),
    }
}

fn cmd_falkner_skan(
    a: &FalknerSkanArgs,
    format: Format,
    out: &mut Vec<u8>,
) -> Result<i32, Failure> {
    if !a.beta.is_finite() {
        return Err(Failure::invalid("--beta must be finite"));
    }
    let config = a.itm.config(a.flow, a.h0, a.h1);
    config.validate()?;
    let case = FalknerSkanCase {
        beta: a.beta,
        flow: a.flow,
        config,
    };

    let outcome = solve_case(&case);
    let history = match &outcome {
        Ok(r) => r.iterations.as_slice(),
        Err(e) => e.history(),
    };
    match format {
        Format::Csv => write_iterations_csv(out, history, a.stats)?,
        Format::Table => write_iterations_table(out, history, a.stats)?,
    }

    match outcome {
        Ok(r) => {
            match format {
                Format::Csv => writeln!(
                    out,
                    "# lambda={},h_star={},fpp0={}",
                    csv_num(r.lambda),
                    csv_num(r.h_star_root),
                    csv_num(r.fpp0)
                )?,
                Format::Table => writeln!(
                    out,
                    "lambda = {:.6}  h* = {:.6}  f''(0) = {:.6}  iterations = {}",
                    r.lambda,
                    r.h_star_root,
                    r.fpp0,
                    r.iteration_count()
                )?,
            }
            if let Some(path) = &a.profile {
                write_profile_file(path, &r.physical)?;
            }
            Ok(exit::OK)
        }
        Err(e) => {
            let code = match e {
                ItmError::DoubleBlowUp { .. } => exit::DOUBLE_BLOW_UP,
                ItmError::NoConvergence { .. } | ItmError::Stalled { .. } => exit::NO_CONVERGENCE,
                ItmError::Invalid(_) => exit::INVALID,
            };
            Err(Failure {
                code,
                message: e.to_string(),
            })
        }
    }
}

/// Parses `--betas` or `--beta-range`.
pub fn parse_betas(list: Option<&str>, range: Option<&str>) -> Result<Vec<f64>, String> {
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("bad beta value `{s}`"))
    };
    match (list, range) {
        (Some(list), None) => {
            if list.trim().is_empty() {
                return Err("--betas is empty".into());
            }
            list.split(',').map(parse).collect()
        }
        (None, Some(range)) => {
            let parts: Vec<&str> = range.split(':').collect();
            let [from, to, n] = parts.as_slice() else {
                return Err(format!("--beta-range must be FROM:TO:N, got `{range}`"));
            };
            let (from, to) = (parse(from)?, parse(to)?);
            let n: usize = n
                .trim()
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| format!("bad point count `{n}`"))?;
            if n == 1 {
                return Ok(vec![from]);
            }
            let step = (to - from) / (n - 1) as f64;
            Ok((0..n)
                .map(|i| {
                    if i + 1 == n {
                        to
                    } else {
                        from + i as f64 * step
                    }
                })
                .collect())
        }
        (None, None) => Err("one of --betas or --beta-range is required".into()),
        (Some(_), Some(_)) => Err("--betas and --beta-range are exclusive".into()),
    }
}

fn cmd_sweep(a: &SweepArgs, format: Format, out: &mut Vec<u8>) -> Result<i32, Failure> {
    let betas =
        parse_betas(a.betas.as_deref(), a.beta_range.as_deref()).map_err(Failure::invalid)?;
    let config = a.itm.config(a.flow, a.h0, a.h1);
    let policy = if a.independent {
        SeedPolicy::Fixed
    } else {
        SeedPolicy::WarmStart
    };
    let points = sweep_beta(&betas, a.flow, policy, &config)?;
    match format {
        Format::Csv => write_branch_csv(out, &points)?,
        Format::Table => write_branch_table(out, &points)?,
    }
    Ok(if points.iter().all(|p| p.converged) {
        exit::OK
    } else {
        exit::PARTIAL_SWEEP
    })
}

fn cmd_beta_min(a: &BetaMinArgs, format: Format, out: &mut Vec<u8>) -> Result<i32, Failure> {
    let defaults = BetaMinConfig::default();
    let config = BetaMinConfig {
        start_beta: a.start_beta,
        threshold: a.threshold,
        min_bracket: a.min_bracket,
        itm: ItmConfig {
            max_iter: a.max_iter,
            integrator: AdaptiveConfig {
                rtol: a.rtol,
                atol: a.atol,
                ..defaults.itm.integrator
            },
            ..defaults.itm
        },
        ..defaults
    };
    config.validate()?;
    let r = match find_beta_min(&config) {
        Ok(r) => r,
        Err(BetaMinError::Invalid(e)) => return Err(e.into()),
        Err(e @ BetaMinError::BadStart { .. }) => {
            return Err(Failure {
                code: exit::NO_CONVERGENCE,
                message: e.to_string(),
            })
        }
    };
    match format {
        Format::Csv => write_beta_min_csv(out, &r)?,
        Format::Table => {
            writeln!(out, "beta_min       = {:.12}", r.beta_min)?;
            writeln!(out, "f''(0) normal  = {}", table_num(r.fpp0_normal))?;
            writeln!(out, "f''(0) reverse = {}", table_num(r.fpp0_reverse))?;
            writeln!(
                out,
                "bracket        = [{:.12}, {:.12}]",
                r.bracket.0, r.bracket.1
            )?;
            writeln!(
                out,
                "iterations     = {} (normal), {} (reverse)",
                r.iterations.0, r.iterations.1
            )?;
            writeln!(out, "eta*_inf       = {:.6}", r.eta_inf)?;
        }
    }
    Ok(exit::OK)
}
