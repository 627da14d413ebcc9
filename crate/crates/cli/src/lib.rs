//! Command-line front end: configuration, experiment runs, CSV and meta output.

pub mod config;

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use thiserror::Error;

use tfk_core::fracops::{grunwald_coeffs, lubich2_coeffs, wsgd_weights};
use tfk_core::par;
use tfk_core::problems::{convergence_study, fpt_run, ConvergenceMode, FptCurve, RunReport};
use tfk_core::substantial::{OrderRow, OrderStudy};
use tfk_core::{ProblemSpec, WeightTable};

pub use config::{Command, ConfigError, Job, RawConfig, RunConfig};

pub const CONVERGENCE_CSV: &str = "convergence.csv";
pub const FPT_CSV: &str = "fpt.csv";
pub const OPERATOR_CSV: &str = "operator.csv";
pub const COEFFS_CSV: &str = "coeffs.csv";
pub const META_FILE: &str = "meta.txt";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Core(#[from] tfk_core::Error),

    #[error("cannot write {path}: {reason}")]
    Output { path: String, reason: String },
}

impl CliError {
    /// 2 for configuration and output errors, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "tfk", version, about = "Time-tempered fractional Feynman-Kac solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Errors and observed orders over a refinement ladder.
    Converge(ConvergeArgs),
    /// Survival curve of the first passage time.
    Fpt(FptArgs),
    /// Observed order of the discrete substantial derivative.
    OperatorTest(OperatorArgs),
    /// Dump a coefficient table.
    Coeffs(CoeffsArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat key=value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<String>,
    #[arg(long)]
    pub threads: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Any config key, as key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<String>,
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long, visible_alias = "h")]
    pub h0: Option<String>,
    #[arg(long, visible_alias = "tau")]
    pub tau0: Option<String>,
    /// exact or self.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long = "T")]
    pub t_final: Option<String>,
    /// gamma or alpha.
    #[arg(long)]
    pub source_exponent: Option<String>,
}

#[derive(Debug, Args)]
pub struct FptArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub c0: Option<String>,
    #[arg(long = "p")]
    pub p: Option<String>,
    /// Half-width of the symmetric domain.
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long = "T")]
    pub t_final: Option<String>,
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long)]
    pub h: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    /// physical or zero.
    #[arg(long)]
    pub source: Option<String>,
    /// Start from the large-domain, long-time preset.
    #[arg(long)]
    pub full_scale: bool,
}

#[derive(Debug, Args)]
pub struct OperatorArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub nu: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_re: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_im: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: Option<String>,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// grunwald, wsgd or lubich2.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub param: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
}

fn flag_layer(common: &CommonArgs, pairs: &[(&str, &Option<String>)]) -> Result<RawConfig> {
    let mut raw = RawConfig::default();
    for kv in &common.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: kv.clone(),
        })?;
        raw.set(k, v)?;
    }
    let own = [
        ("output_dir", &common.output_dir),
        ("threads", &common.threads),
        ("seed", &common.seed),
    ];
    for (k, v) in own.iter().chain(pairs) {
        if let Some(v) = v {
            raw.set(k, v.as_str())?;
        }
    }
    Ok(raw)
}

impl Sub {
    fn common(&self) -> &CommonArgs {
        match self {
            Sub::Converge(a) => &a.common,
            Sub::Fpt(a) => &a.common,
            Sub::OperatorTest(a) => &a.common,
            Sub::Coeffs(a) => &a.common,
        }
    }

    /// Resolve defaults, the config file and the flags into a validated config.
    pub fn resolve(&self) -> Result<RunConfig> {
        let (command, flags) = match self {
            Sub::Converge(a) => (
                Command::Converge,
                flag_layer(
                    &a.common,
                    &[
                        ("alpha", &a.alpha),
                        ("gamma", &a.gamma),
                        ("lambda", &a.lambda),
                        ("rho", &a.rho),
                        ("eta", &a.eta),
                        ("levels", &a.levels),
                        ("h", &a.h0),
                        ("tau", &a.tau0),
                        ("mode", &a.mode),
                        ("t_final", &a.t_final),
                        ("source_exponent", &a.source_exponent),
                    ],
                )?,
            ),
            Sub::Fpt(a) => {
                let mut flags = flag_layer(
                    &a.common,
                    &[
                        ("c0", &a.c0),
                        ("p", &a.p),
                        ("domain", &a.domain),
                        ("t_final", &a.t_final),
                        ("tau", &a.tau),
                        ("h", &a.h),
                        ("gamma", &a.gamma),
                        ("alpha", &a.alpha),
                        ("lambda", &a.lambda),
                        ("source", &a.source),
                    ],
                )?;
                if a.full_scale {
                    flags.set("full_scale", "true")?;
                }
                (Command::Fpt, flags)
            }
            Sub::OperatorTest(a) => (
                Command::OperatorTest,
                flag_layer(
                    &a.common,
                    &[
                        ("nu", &a.nu),
                        ("gamma", &a.gamma),
                        ("lambda_re", &a.lambda_re),
                        ("lambda_im", &a.lambda_im),
                        ("lambda0", &a.lambda0),
                    ],
                )?,
            ),
            Sub::Coeffs(a) => (
                Command::Coeffs,
                flag_layer(&a.common, &[("kind", &a.kind), ("param", &a.param), ("n", &a.n)])?,
            ),
        };
        let file = match &self.common().config {
            Some(path) => RawConfig::read(path)?,
            None => RawConfig::default(),
        };
        Ok(RunConfig::resolve(command, &file, &flags)?)
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn convergence_csv(report: &RunReport) -> String {
    let mut s = String::from("h,tau,max_error,rate\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_float(r.h),
            fmt_float(r.tau),
            fmt_float(r.max_error),
            fmt_float(r.rate)
        );
    }
    s
}

/// `t, P, ln t, ln P`; the `t = 0` row carries `-inf` for `ln t`.
pub fn fpt_csv(curve: &FptCurve) -> String {
    let mut s = String::from("t,P,logt,logP\n");
    for (&t, &p) in curve.times.iter().zip(&curve.survival) {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_float(t),
            fmt_float(p),
            fmt_float(t.ln()),
            fmt_float(p.ln())
        );
    }
    s
}

pub fn operator_csv(rows: &[OrderRow]) -> String {
    let mut s = String::from("tau,error,rate\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", fmt_float(r.tau), fmt_float(r.error), fmt_float(r.rate));
    }
    s
}

pub fn coeffs_csv(table: &WeightTable) -> String {
    let mut s = String::from("k,value,partial_sum\n");
    for (k, (v, ps)) in table.values().iter().zip(table.partial_sums()).enumerate() {
        let _ = writeln!(s, "{k},{},{}", fmt_float(*v), fmt_float(ps));
    }
    s
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    let err = |e: std::io::Error| CliError::Output {
        path: path.display().to_string(),
        reason: e.to_string(),
    };
    std::fs::create_dir_all(dir).map_err(err)?;
    std::fs::write(&path, contents).map_err(err)?;
    Ok(path)
}

fn meta(cfg: &RunConfig, timings: &[(String, f64)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "header = {}", cfg.header());
    for (k, v) in cfg.pairs() {
        let _ = writeln!(s, "config.{k} = {v}");
    }
    let _ = writeln!(s, "threads_used = {}", par::current_threads());
    for (label, secs) in timings {
        let _ = writeln!(s, "timing.{} = {secs:.6}", label.replace(' ', "_"));
    }
    s
}

/// Run a resolved config: header to `out`, CSV and meta file to the output
/// directory, and a short summary to `out`. Returns the CSV path.
pub fn execute(cfg: &RunConfig, out: &mut impl Write) -> Result<PathBuf> {
    let io = |e: std::io::Error| CliError::Output {
        path: "stdout".into(),
        reason: e.to_string(),
    };
    writeln!(out, "{}", cfg.header()).map_err(io)?;
    if cfg.threads > 0 {
        par::configure_threads(cfg.threads);
    }
    let started = Instant::now();
    let mut timings: Vec<(String, f64)> = Vec::new();
    let (name, csv, summary) = match &cfg.job {
        Job::Converge(j) => {
            let params = j.params();
            let (spec, mode) = match j.mode {
                config::Mode::Exact => (ProblemSpec::manufactured(params, j.source_exponent)?, ConvergenceMode::Exact),
                config::Mode::SelfConvergence => (ProblemSpec::quartic_decay(params)?, ConvergenceMode::SelfConvergence),
            };
            let report = convergence_study(&spec, &j.ladder(), mode, j.t_final)?;
            timings.extend(report.timings.iter().cloned());
            let mut summary = String::new();
            for r in &report.rows {
                let _ = writeln!(summary, "h={:e} tau={:e} error={:.4e} rate={:.4}", r.h, r.tau, r.max_error, r.rate);
            }
            (CONVERGENCE_CSV, convergence_csv(&report), summary)
        }
        Job::Fpt(j) => {
            let curve = fpt_run(&j.cfg)?;
            timings.push(("solve".into(), curve.seconds));
            let t = j.cfg.t_final;
            let slope = curve.loglog_slope(t / 2.0, t).unwrap_or(f64::NAN);
            let summary = format!(
                "steps={} P(T)={:.6e} loglog_slope[T/2,T]={slope:.4}\n",
                curve.len() - 1,
                curve.survival.last().copied().unwrap_or(f64::NAN)
            );
            (FPT_CSV, fpt_csv(&curve), summary)
        }
        Job::OperatorTest(j) => {
            let study = OrderStudy {
                order: j.order,
                gamma: j.gamma,
                lambda_tilde: Complex64::new(j.lambda_re, j.lambda_im),
                lambda: j.lambda0,
                beta: j.beta,
                t: j.t,
            };
            let rows = study.run(j.first_level, j.last_level)?;
            let mut summary = String::new();
            for r in &rows {
                let _ = writeln!(summary, "tau={:e} error={:.4e} rate={:.4}", r.tau, r.error, r.rate);
            }
            (OPERATOR_CSV, operator_csv(&rows), summary)
        }
        Job::Coeffs(j) => {
            let table = match j.kind {
                config::CoeffKind::Grunwald => grunwald_coeffs(j.param, j.n)?,
                config::CoeffKind::Wsgd => wsgd_weights(j.param, j.n)?,
                config::CoeffKind::Lubich2 => lubich2_coeffs(j.param, j.n)?,
            };
            let summary = format!("{} coefficients\n", table.values().len());
            (COEFFS_CSV, coeffs_csv(&table), summary)
        }
    };
    timings.push(("total".into(), started.elapsed().as_secs_f64()));
    let path = write_file(&cfg.output_dir, name, &csv)?;
    write_file(&cfg.output_dir, META_FILE, &meta(cfg, &timings))?;
    write!(out, "{summary}").map_err(io)?;
    writeln!(out, "wrote {}", path.display()).map_err(io)?;
    Ok(path)
}

/// Parse, resolve and execute; returns the process exit code.
pub fn run(cli: Cli, out: &mut impl Write, err: &mut impl Write) -> u8 {
    let result = cli.command.resolve().and_then(|cfg| execute(&cfg, out));
    match result {
        Ok(_) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
