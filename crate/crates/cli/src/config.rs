//! Flat `key=value` run configuration: per-command defaults, then the config
//! file, then command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use tfk_core::problems::{FptConfig, FptSource, Ladder};
use tfk_core::{FunctionalWeight, PhysicalParams, SchemeOrder, SourceExponent};

/// First token of the reproducibility header.
pub const HEADER_TAG: &str = "tfk-config";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("{key}: cannot parse `{value}` as {expected}")]
    Type {
        key: String,
        value: String,
        expected: &'static str,
    },

    #[error("{key} {message}")]
    Constraint { key: String, message: String },

    #[error("line {line}: expected key=value, found `{text}`")]
    Syntax { line: usize, text: String },

    #[error("cannot read config file {path}: {reason}")]
    Read { path: String, reason: String },

    #[error("config is for `{found}` but the command is `{expected}`")]
    CommandMismatch { expected: String, found: String },
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Converge,
    Fpt,
    OperatorTest,
    Coeffs,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Converge => "converge",
            Command::Fpt => "fpt",
            Command::OperatorTest => "operator-test",
            Command::Coeffs => "coeffs",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Command::Converge => &[
                "gamma",
                "alpha",
                "lambda",
                "rho",
                "eta",
                "k_diff",
                "h",
                "tau",
                "levels",
                "mode",
                "t_final",
                "source_exponent",
            ],
            Command::Fpt => &[
                "full_scale",
                "c0",
                "p",
                "domain",
                "t_final",
                "tau",
                "h",
                "gamma",
                "alpha",
                "lambda",
                "k_diff",
                "source",
            ],
            Command::OperatorTest => &[
                "nu",
                "gamma",
                "lambda_re",
                "lambda_im",
                "lambda0",
                "beta",
                "t",
                "first_level",
                "last_level",
            ],
            Command::Coeffs => &["kind", "param", "n"],
        }
    }

    const ALL: [Command; 4] = [Command::Converge, Command::Fpt, Command::OperatorTest, Command::Coeffs];
}

const COMMON_KEYS: [&str; 3] = ["output_dir", "threads", "seed"];

fn known_key(key: &str) -> bool {
    key == "command" || COMMON_KEYS.contains(&key) || Command::ALL.iter().any(|c| c.keys().contains(&key))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    SelfConvergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffKind {
    Grunwald,
    Wsgd,
    Lubich2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeJob {
    pub gamma: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub rho: f64,
    pub eta: f64,
    pub k_diff: f64,
    pub h: f64,
    pub tau: f64,
    pub levels: usize,
    pub mode: Mode,
    pub t_final: f64,
    pub source_exponent: SourceExponent,
}

impl ConvergeJob {
    /// `(0, 1)` for the manufactured problem, `(0, 2)` for self-convergence.
    pub fn domain(&self) -> (f64, f64) {
        match self.mode {
            Mode::Exact => (0.0, 1.0),
            Mode::SelfConvergence => (0.0, 2.0),
        }
    }

    /// Exact mode halves `h` and `τ` together; self mode halves `h` only.
    pub fn ladder(&self) -> Ladder {
        match self.mode {
            Mode::Exact => Ladder::halving(self.h, self.tau, self.levels),
            Mode::SelfConvergence => Ladder::spatial(self.h, self.tau, self.levels),
        }
    }

    pub fn params(&self) -> PhysicalParams {
        PhysicalParams {
            gamma: self.gamma,
            alpha: self.alpha,
            lambda: self.lambda,
            rho: self.rho,
            eta: self.eta,
            k_diff: self.k_diff,
            weight: FunctionalWeight::Identity,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FptJob {
    pub full_scale: bool,
    pub cfg: FptConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorJob {
    pub order: SchemeOrder,
    pub gamma: f64,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub lambda0: f64,
    pub beta: f64,
    pub t: f64,
    pub first_level: u32,
    pub last_level: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoeffsJob {
    pub kind: CoeffKind,
    pub param: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Converge(ConvergeJob),
    Fpt(FptJob),
    OperatorTest(OperatorJob),
    Coeffs(CoeffsJob),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    /// Worker threads; 0 keeps the default pool.
    pub threads: usize,
    pub seed: u64,
    pub job: Job,
}

/// Unvalidated key/value pairs in precedence order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        let key = key.trim();
        if !known_key(key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        self.values.insert(key.to_string(), value.into().trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Later pairs override earlier ones.
    pub fn merge(&mut self, other: &RawConfig) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    /// Parse `key=value` lines. `#` starts a comment line; a line starting with
    /// the header tag holds whitespace-separated pairs.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = || ConfigError::Syntax {
                line: idx + 1,
                text: line.to_string(),
            };
            if let Some(rest) = line.strip_prefix(HEADER_TAG) {
                for token in rest.split_whitespace() {
                    let (k, v) = token.split_once('=').ok_or_else(syntax)?;
                    raw.set(k, v)?;
                }
            } else {
                let (k, v) = line.split_once('=').ok_or_else(syntax)?;
                raw.set(k, v)?;
            }
        }
        Ok(raw)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }
}

fn defaults(command: Command, full_scale: bool) -> Vec<(&'static str, String)> {
    let mut d: Vec<(&'static str, String)> = vec![
        ("output_dir", ".".into()),
        ("threads", "0".into()),
        ("seed", "0".into()),
    ];
    match command {
        Command::Converge => d.extend([
            ("gamma", "0.8".into()),
            ("alpha", "1.3".into()),
            ("lambda", "0.2".into()),
            ("rho", "1".into()),
            ("eta", "5".into()),
            ("k_diff", "1".into()),
            ("h", "0.05".into()),
            ("tau", "0.05".into()),
            ("levels", "4".into()),
            ("mode", "exact".into()),
            ("t_final", "1".into()),
            ("source_exponent", "gamma".into()),
        ]),
        Command::Fpt => {
            let c = if full_scale { FptConfig::full_scale() } else { FptConfig::desk() };
            d.extend([
                ("full_scale", full_scale.to_string()),
                ("c0", c.c0.to_string()),
                ("p", c.p_large.to_string()),
                ("domain", c.half_width.to_string()),
                ("t_final", c.t_final.to_string()),
                ("tau", c.tau.to_string()),
                ("h", c.h.to_string()),
                ("gamma", c.gamma.to_string()),
                ("alpha", c.alpha.to_string()),
                ("lambda", c.lambda.to_string()),
                ("k_diff", c.k_diff.to_string()),
                ("source", "physical".into()),
            ])
        }
        Command::OperatorTest => d.extend([
            ("nu", "2".into()),
            ("gamma", "0.5".into()),
            ("lambda_re", "1".into()),
            ("lambda_im", "2".into()),
            ("lambda0", "0.5".into()),
            ("beta", "3".into()),
            ("t", "1".into()),
            ("first_level", "4".into()),
            ("last_level", "10".into()),
        ]),
        Command::Coeffs => d.extend([("kind", "lubich2".into()), ("param", "0.5".into()), ("n", "16".into())]),
    }
    d
}

/// Typed lookups that name the offending key.
struct Fields<'a>(&'a BTreeMap<String, String>);

impl Fields<'_> {
    fn raw(&self, key: &str) -> &str {
        self.0.get(key).map(String::as_str).expect("defaults cover every key")
    }

    fn type_err(&self, key: &str, expected: &'static str) -> ConfigError {
        ConfigError::Type {
            key: key.to_string(),
            value: self.raw(key).to_string(),
            expected,
        }
    }

    /// A float, or a fraction `a/b`.
    fn float(&self, key: &str) -> Result<f64> {
        let s = self.raw(key);
        let v = match s.split_once('/') {
            Some((a, b)) => match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
                (Ok(a), Ok(b)) => a / b,
                _ => return Err(self.type_err(key, "a number")),
            },
            None => s.parse::<f64>().map_err(|_| self.type_err(key, "a number"))?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(constraint(key, "must be finite"))
        }
    }

    fn open(&self, key: &str, lo: f64, hi: f64) -> Result<f64> {
        let v = self.float(key)?;
        if v > lo && v < hi {
            Ok(v)
        } else {
            Err(constraint(key, &format!("must lie in ({lo},{hi})")))
        }
    }

    fn positive(&self, key: &str) -> Result<f64> {
        let v = self.float(key)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(constraint(key, "must be > 0"))
        }
    }

    fn nonneg(&self, key: &str) -> Result<f64> {
        let v = self.float(key)?;
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(constraint(key, "must be >= 0"))
        }
    }

    fn int<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.raw(key).parse().map_err(|_| self.type_err(key, "a non-negative integer"))
    }

    fn boolean(&self, key: &str) -> Result<bool> {
        self.raw(key).parse().map_err(|_| self.type_err(key, "true or false"))
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)], expected: &'static str) -> Result<T> {
        let s = self.raw(key);
        options
            .iter()
            .find(|(name, _)| *name == s)
            .map(|(_, v)| *v)
            .ok_or_else(|| self.type_err(key, expected))
    }
}

fn constraint(key: &str, message: &str) -> ConfigError {
    ConfigError::Constraint {
        key: key.to_string(),
        message: message.to_string(),
    }
}

fn core_constraint(key: &str, err: tfk_core::Error) -> ConfigError {
    constraint(key, &format!("is inconsistent: {err}"))
}

impl RunConfig {
    /// Resolve defaults, then `file`, then `flags`, and validate.
    pub fn resolve(command: Command, file: &RawConfig, flags: &RawConfig) -> Result<Self> {
        let mut layered = file.clone();
        layered.merge(flags);
        if let Some(found) = layered.get("command") {
            if found != command.name() {
                return Err(ConfigError::CommandMismatch {
                    expected: command.name().into(),
                    found: found.into(),
                });
            }
        }
        let full_scale = match layered.get("full_scale") {
            Some(s) if command == Command::Fpt => s.parse().map_err(|_| ConfigError::Type {
                key: "full_scale".into(),
                value: s.into(),
                expected: "true or false",
            })?,
            _ => false,
        };
        let mut values: BTreeMap<String, String> = defaults(command, full_scale)
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        for (k, v) in layered.values {
            if values.contains_key(&k) {
                values.insert(k, v);
            }
        }
        let f = Fields(&values);

        let output_dir = PathBuf::from(f.raw("output_dir"));
        if f.raw("output_dir").chars().any(char::is_whitespace) || f.raw("output_dir").is_empty() {
            return Err(constraint("output_dir", "must be non-empty without whitespace"));
        }
        let threads = f.int("threads")?;
        let seed = f.int("seed")?;

        let job = match command {
            Command::Converge => Job::Converge(converge_job(&f)?),
            Command::Fpt => Job::Fpt(fpt_job(&f)?),
            Command::OperatorTest => Job::OperatorTest(operator_job(&f)?),
            Command::Coeffs => Job::Coeffs(coeffs_job(&f)?),
        };
        Ok(RunConfig {
            output_dir,
            threads,
            seed,
            job,
        })
    }

    /// Rebuild a config from its reproducibility header line.
    pub fn from_header(line: &str) -> Result<Self> {
        let raw = RawConfig::parse(line)?;
        let name = raw.get("command").unwrap_or_default();
        let command = Command::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| constraint("command", &format!("`{name}` is not a known command")))?;
        Self::resolve(command, &raw, &RawConfig::default())
    }

    pub fn command(&self) -> Command {
        match self.job {
            Job::Converge(_) => Command::Converge,
            Job::Fpt(_) => Command::Fpt,
            Job::OperatorTest(_) => Command::OperatorTest,
            Job::Coeffs(_) => Command::Coeffs,
        }
    }

    /// Every resolved key in a fixed order.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut p: Vec<(&'static str, String)> = vec![("command", self.command().name().into())];
        match &self.job {
            Job::Converge(j) => p.extend([
                ("gamma", j.gamma.to_string()),
                ("alpha", j.alpha.to_string()),
                ("lambda", j.lambda.to_string()),
                ("rho", j.rho.to_string()),
                ("eta", j.eta.to_string()),
                ("k_diff", j.k_diff.to_string()),
                ("h", j.h.to_string()),
                ("tau", j.tau.to_string()),
                ("levels", j.levels.to_string()),
                (
                    "mode",
                    match j.mode {
                        Mode::Exact => "exact",
                        Mode::SelfConvergence => "self",
                    }
                    .into(),
                ),
                ("t_final", j.t_final.to_string()),
                (
                    "source_exponent",
                    match j.source_exponent {
                        SourceExponent::Gamma => "gamma",
                        SourceExponent::Alpha => "alpha",
                    }
                    .into(),
                ),
            ]),
            Job::Fpt(j) => {
                let c = &j.cfg;
                p.extend([
                    ("full_scale", j.full_scale.to_string()),
                    ("c0", c.c0.to_string()),
                    ("p", c.p_large.to_string()),
                    ("domain", c.half_width.to_string()),
                    ("t_final", c.t_final.to_string()),
                    ("tau", c.tau.to_string()),
                    ("h", c.h.to_string()),
                    ("gamma", c.gamma.to_string()),
                    ("alpha", c.alpha.to_string()),
                    ("lambda", c.lambda.to_string()),
                    ("k_diff", c.k_diff.to_string()),
                    (
                        "source",
                        match c.source {
                            FptSource::Physical => "physical",
                            FptSource::Zero => "zero",
                        }
                        .into(),
                    ),
                ])
            }
            Job::OperatorTest(j) => p.extend([
                ("nu", j.order.as_int().to_string()),
                ("gamma", j.gamma.to_string()),
                ("lambda_re", j.lambda_re.to_string()),
                ("lambda_im", j.lambda_im.to_string()),
                ("lambda0", j.lambda0.to_string()),
                ("beta", j.beta.to_string()),
                ("t", j.t.to_string()),
                ("first_level", j.first_level.to_string()),
                ("last_level", j.last_level.to_string()),
            ]),
            Job::Coeffs(j) => p.extend([
                (
                    "kind",
                    match j.kind {
                        CoeffKind::Grunwald => "grunwald",
                        CoeffKind::Wsgd => "wsgd",
                        CoeffKind::Lubich2 => "lubich2",
                    }
                    .into(),
                ),
                ("param", j.param.to_string()),
                ("n", j.n.to_string()),
            ]),
        }
        p.extend([
            ("output_dir", self.output_dir.display().to_string()),
            ("threads", self.threads.to_string()),
            ("seed", self.seed.to_string()),
        ]);
        p
    }

    /// Single-line reproducibility header.
    pub fn header(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(HEADER_TAG)?;
        for (k, v) in self.pairs() {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

fn converge_job(f: &Fields) -> Result<ConvergeJob> {
    let job = ConvergeJob {
        gamma: f.open("gamma", 0.0, 1.0)?,
        alpha: f.open("alpha", 1.0, 2.0)?,
        lambda: f.nonneg("lambda")?,
        rho: f.positive("rho")?,
        eta: f.float("eta")?,
        k_diff: f.positive("k_diff")?,
        h: f.positive("h")?,
        tau: f.positive("tau")?,
        levels: f.int("levels")?,
        mode: f.choice("mode", &[("exact", Mode::Exact), ("self", Mode::SelfConvergence)], "exact or self")?,
        t_final: f.positive("t_final")?,
        source_exponent: f.choice(
            "source_exponent",
            &[("gamma", SourceExponent::Gamma), ("alpha", SourceExponent::Alpha)],
            "gamma or alpha",
        )?,
    };
    if job.levels > 12 {
        return Err(constraint("levels", "must be <= 12"));
    }
    let (a, b) = job.domain();
    for lv in &job.ladder().levels {
        tfk_core::Grid::with_width(a, b, lv.h).map_err(|e| core_constraint("h", e))?;
        tfk_core::TimeGrid::with_step(job.t_final, lv.tau).map_err(|e| core_constraint("tau", e))?;
    }
    Ok(job)
}

fn fpt_job(f: &Fields) -> Result<FptJob> {
    let cfg = FptConfig {
        c0: f.positive("c0")?,
        p_large: f.positive("p")?,
        half_width: f.positive("domain")?,
        t_final: f.positive("t_final")?,
        tau: f.positive("tau")?,
        h: f.positive("h")?,
        gamma: f.open("gamma", 0.0, 1.0)?,
        alpha: f.open("alpha", 1.0, 2.0)?,
        lambda: f.nonneg("lambda")?,
        k_diff: f.positive("k_diff")?,
        source: f.choice(
            "source",
            &[("physical", FptSource::Physical), ("zero", FptSource::Zero)],
            "physical or zero",
        )?,
    };
    cfg.grid().map_err(|e| core_constraint("h", e))?;
    cfg.time_grid().map_err(|e| core_constraint("tau", e))?;
    cfg.readout_index().map_err(|e| core_constraint("c0", e))?;
    cfg.validate().map_err(|e| core_constraint("fpt", e))?;
    Ok(FptJob {
        full_scale: f.boolean("full_scale")?,
        cfg,
    })
}

fn operator_job(f: &Fields) -> Result<OperatorJob> {
    let job = OperatorJob {
        order: f.choice("nu", &[("1", SchemeOrder::First), ("2", SchemeOrder::Second)], "1 or 2")?,
        gamma: f.open("gamma", 0.0, 1.0)?,
        lambda_re: f.nonneg("lambda_re")?,
        lambda_im: f.float("lambda_im")?,
        lambda0: f.nonneg("lambda0")?,
        beta: f.positive("beta")?,
        t: f.positive("t")?,
        first_level: f.int("first_level")?,
        last_level: f.int("last_level")?,
    };
    if job.beta <= job.gamma {
        return Err(constraint("beta", "must exceed gamma"));
    }
    if job.first_level > job.last_level {
        return Err(constraint("first_level", "must not exceed last_level"));
    }
    if job.last_level > 20 {
        return Err(constraint("last_level", "must be <= 20"));
    }
    Ok(job)
}

fn coeffs_job(f: &Fields) -> Result<CoeffsJob> {
    let kind = f.choice(
        "kind",
        &[
            ("grunwald", CoeffKind::Grunwald),
            ("wsgd", CoeffKind::Wsgd),
            ("lubich2", CoeffKind::Lubich2),
        ],
        "grunwald, wsgd or lubich2",
    )?;
    let param = match kind {
        CoeffKind::Grunwald => {
            let v = f.open("param", 0.0, 2.0)?;
            if v == 1.0 {
                return Err(constraint("param", "must not equal 1"));
            }
            v
        }
        CoeffKind::Wsgd => f.open("param", 1.0, 2.0)?,
        CoeffKind::Lubich2 => f.open("param", 0.0, 1.0)?,
    };
    let n = f.int("n")?;
    if n < 1 {
        return Err(constraint("n", "must be >= 1"));
    }
    Ok(CoeffsJob { kind, param, n })
}
