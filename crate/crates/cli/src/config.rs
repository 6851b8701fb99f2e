//! Run configuration: long flags merged over an optional `key = value` file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use asymconj::conjugate::DEFAULT_GRID_CAP;
use asymconj::wellposed::{Mode, Tolerances};
use clap::{Args, ValueEnum};
use serde::Serialize;

/// A configuration problem; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Frechet,
    Gateaux,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Frechet => Mode::Frechet,
            ModeArg::Gateaux => Mode::Gateaux,
        }
    }
}

/// Flags shared by every command.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Seed for every randomized routine.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for report.json and CSV curves; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Maximum number of grid points per grid.
    #[arg(long)]
    pub grid_cap: Option<usize>,
    #[arg(long)]
    pub tol_frechet: Option<f64>,
    #[arg(long)]
    pub tol_gateaux: Option<f64>,
    #[arg(long)]
    pub tol_converge: Option<f64>,
    #[arg(long)]
    pub tol_grid: Option<f64>,
    #[arg(long)]
    pub tol_exact: Option<f64>,
    #[arg(long)]
    pub tol_sampled: Option<f64>,
    /// Restrict the derivative harness to one flavour.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Flags of individual commands, all optional so a config file can fill them.
#[derive(Debug, Clone, Default)]
pub struct Specific {
    pub model: Option<PathBuf>,
    pub dim: Option<usize>,
    pub y: Option<Vec<f64>>,
    pub h: Option<f64>,
    pub input: Option<PathBuf>,
    pub dual: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TolSet {
    pub frechet: f64,
    pub gateaux: f64,
    pub converge: f64,
    pub grid: f64,
    /// Closed-form and exact-arithmetic paths.
    pub exact: f64,
    /// Sampled suprema and optimizer agreement.
    pub sampled: f64,
}

impl Default for TolSet {
    fn default() -> Self {
        let t = Tolerances::default();
        TolSet {
            frechet: t.frechet,
            gateaux: t.gateaux,
            converge: t.converge,
            grid: t.grid,
            exact: 1e-9,
            sampled: 1e-6,
        }
    }
}

impl TolSet {
    pub fn harness(&self) -> Tolerances {
        Tolerances {
            value: self.sampled,
            converge: self.converge,
            grid: self.grid,
            frechet: self.frechet,
            gateaux: self.gateaux,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Verify,
    Example1,
    Cgf,
    Conjugate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Example1 => "example1",
            Command::Cgf => "cgf",
            Command::Conjugate => "conjugate",
        }
    }

    fn needs_seed(self) -> bool {
        !matches!(self, Command::Conjugate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub grid_cap: usize,
    pub tol: TolSet,
    pub mode: Option<Mode>,
    pub model: Option<PathBuf>,
    pub dim: Option<usize>,
    pub y: Option<Vec<f64>>,
    pub h: Option<f64>,
    pub input: Option<PathBuf>,
    pub dual: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "seed",
    "out",
    "grid_cap",
    "tol_frechet",
    "tol_gateaux",
    "tol_converge",
    "tol_grid",
    "tol_exact",
    "tol_sampled",
    "mode",
    "model",
    "dim",
    "y",
    "h",
    "input",
    "dual",
];

/// Parses `key = value` lines. `#` starts a comment; values may be quoted;
/// dashes in keys are read as underscores.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key = value", n + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(usage(format!("config line {}: unknown key `{key}`", n + 1)));
        }
        let mut val = v.trim();
        if val.len() >= 2 && val.starts_with('"') && val.ends_with('"') {
            val = &val[1..val.len() - 1];
        }
        if out.insert(key.clone(), val.to_string()).is_some() {
            return Err(usage(format!(
                "config line {}: duplicate key `{key}`",
                n + 1
            )));
        }
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, UsageError> {
    v.parse()
        .map_err(|_| usage(format!("bad value for `{key}`: {v}")))
}

/// Comma-separated numbers, optionally wrapped in brackets.
pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, UsageError> {
    let inner = v.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(',')
        .map(|s| parse::<f64>(key, s.trim()))
        .collect()
}

fn positive(name: &str, v: f64) -> Result<f64, UsageError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl RunConfig {
    pub fn resolve(
        command: Command,
        common: &CommonArgs,
        specific: Specific,
    ) -> Result<RunConfig, UsageError> {
        let file = match &common.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        let get = |k: &str| file.get(k).map(String::as_str);
        let pick_f = |flag: Option<f64>, key: &str, def: f64| -> Result<f64, UsageError> {
            let v = match (flag, get(key)) {
                (Some(v), _) => v,
                (None, Some(s)) => parse(key, s)?,
                (None, None) => def,
            };
            positive(key, v)
        };
        let path = |flag: &Option<PathBuf>, key: &str| -> Option<PathBuf> {
            flag.clone().or_else(|| get(key).map(PathBuf::from))
        };

        let seed = match (common.seed, get("seed")) {
            (Some(s), _) => Some(s),
            (None, Some(s)) => Some(parse("seed", s)?),
            (None, None) => None,
        };
        let seed = match seed {
            Some(s) => s,
            None if command.needs_seed() => {
                return Err(usage(format!("`{}` requires --seed", command.name())))
            }
            None => 0,
        };
        let grid_cap = match (common.grid_cap, get("grid_cap")) {
            (Some(c), _) => c,
            (None, Some(s)) => parse("grid_cap", s)?,
            (None, None) => DEFAULT_GRID_CAP,
        };
        if grid_cap == 0 {
            return Err(usage("grid_cap must be positive"));
        }
        let d = TolSet::default();
        let tol = TolSet {
            frechet: pick_f(common.tol_frechet, "tol_frechet", d.frechet)?,
            gateaux: pick_f(common.tol_gateaux, "tol_gateaux", d.gateaux)?,
            converge: pick_f(common.tol_converge, "tol_converge", d.converge)?,
            grid: pick_f(common.tol_grid, "tol_grid", d.grid)?,
            exact: pick_f(common.tol_exact, "tol_exact", d.exact)?,
            sampled: pick_f(common.tol_sampled, "tol_sampled", d.sampled)?,
        };
        let mode = match (common.mode, get("mode")) {
            (Some(m), _) => Some(m.into()),
            (None, Some("frechet")) => Some(Mode::Frechet),
            (None, Some("gateaux")) => Some(Mode::Gateaux),
            (None, Some(other)) => return Err(usage(format!("bad value for `mode`: {other}"))),
            (None, None) => None,
        };
        let dim = match (specific.dim, get("dim")) {
            (Some(v), _) => Some(v),
            (None, Some(s)) => Some(parse("dim", s)?),
            (None, None) => None,
        };
        let y = match (specific.y, get("y")) {
            (Some(v), _) => Some(v),
            (None, Some(s)) => Some(parse_list("y", s)?),
            (None, None) => None,
        };
        let h = match (specific.h, get("h")) {
            (Some(v), _) => Some(positive("h", v)?),
            (None, Some(s)) => Some(positive("h", parse("h", s)?)?),
            (None, None) => None,
        };
        Ok(RunConfig {
            command,
            seed,
            out: path(&common.out, "out"),
            grid_cap,
            tol,
            mode,
            model: path(&specific.model, "model"),
            dim,
            y,
            h,
            input: path(&specific.input, "input"),
            dual: path(&specific.dual, "dual"),
        })
    }

    pub fn out_dir(&self) -> Option<&Path> {
        self.out.as_deref()
    }
}
