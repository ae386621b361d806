//! Command-line front end: `census`, `convergence`, `mesh-study` and
//! `selftest`.
//!
//! Settings are resolved as flag, then `--config` file, then (for the seed
//! only) the `SPDE_LAB_SEED` environment variable, then built-in defaults.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::experiments::{
    dyadic_level, mean_square_error_study, mesh_independence_study, positivity_census,
    write_report, CensusConfig, ConvergenceConfig, ExperimentReport, MeshStudyConfig,
    NonlinearitySpec, ReferenceKind,
};
use crate::integrators::IntegratorKind;
use crate::mesh::InitialData;
use crate::nonlinearity::NonlinearityKind;
use crate::selftest::run_selftest;

pub const SEED_ENV: &str = "SPDE_LAB_SEED";
const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(
    name = "spde-lab",
    version,
    about = "Positivity and strong convergence experiments for stochastic heat equations"
)]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Subcommand, Debug)]
enum CommandArgs {
    /// Count sample paths that stay entrywise nonnegative
    Census(Flags),
    /// Root-mean-square sup error against a fine reference, per step size
    Convergence(Flags),
    /// Convergence study repeated on several meshes
    MeshStudy(Flags),
    /// Run the built-in property suite
    Selftest,
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Coefficient tags (linear, rational, sineplus, log1p, zero), comma separated
    /// [default: all four catalogue tags for census, rational for convergence,
    /// linear,rational for mesh-study]
    #[arg(long = "g", value_name = "TAGS")]
    g: Option<String>,
    /// Noise intensity [default: 2.5 census, 1 convergence, 1.5 mesh-study]
    #[arg(long)]
    lambda: Option<String>,
    /// Space dimension, 1 or 2 [default: 1]
    #[arg(long)]
    d: Option<String>,
    /// Subdivisions per axis; mesh-study takes a comma list
    /// [default: 256 in 1d, 16 in 2d; mesh-study 16,64,256,1024]
    #[arg(long = "N", value_name = "N")]
    n: Option<String>,
    /// Final time [default: 2 census, 0.5 otherwise]
    #[arg(long = "T", value_name = "T")]
    t: Option<String>,
    /// Census time step, `2^-j` or a decimal equal to T/2^j [default: 2^-5]
    #[arg(long)]
    tau: Option<String>,
    /// Levels j with tau = T/2^j, as `a..b` (inclusive) or a comma list
    /// [default: 3..11 in 1d, 3..9 in 2d]
    #[arg(long)]
    levels: Option<String>,
    /// Reference level [default: 15 in 1d, 13 in 2d]
    #[arg(long = "ref-level")]
    ref_level: Option<String>,
    /// Levels used in the slope fit [default: all levels below ref-level - 2]
    #[arg(long = "fit-levels")]
    fit_levels: Option<String>,
    /// Reference solution: lt, or exact (linear g only) [default: lt]
    #[arg(long)]
    reference: Option<String>,
    /// Monte Carlo sample count [default: 100 census, 150 otherwise]
    #[arg(long)]
    samples: Option<String>,
    /// Master seed [default: $SPDE_LAB_SEED, else 42]
    #[arg(long)]
    seed: Option<String>,
    /// Integrators (LT, EM, SEM, SEXP), comma separated
    /// [default: all four for census, LT,SEM,SEXP convergence, LT mesh-study]
    #[arg(long)]
    integrators: Option<String>,
    /// CSV destination; the summary goes to <stem>.summary.txt alongside
    /// [default: <subcommand>.csv]
    #[arg(long)]
    out: Option<String>,
    /// Worker threads, 0 for all cores [default: 0]
    #[arg(long, short = 'j')]
    jobs: Option<String>,
    /// File of `key = value` lines using the flag names; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

const KEYS: [&str; 15] = [
    "g",
    "lambda",
    "d",
    "N",
    "T",
    "tau",
    "levels",
    "ref-level",
    "fit-levels",
    "reference",
    "samples",
    "seed",
    "integrators",
    "out",
    "jobs",
];

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("g", &self.g),
            ("lambda", &self.lambda),
            ("d", &self.d),
            ("N", &self.n),
            ("T", &self.t),
            ("tau", &self.tau),
            ("levels", &self.levels),
            ("ref-level", &self.ref_level),
            ("fit-levels", &self.fit_levels),
            ("reference", &self.reference),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("integrators", &self.integrators),
            ("out", &self.out),
            ("jobs", &self.jobs),
        ]
    }
}

#[derive(Clone, Debug)]
pub enum Task {
    Census(CensusConfig),
    Convergence(ConvergenceConfig),
    MeshStudy(MeshStudyConfig),
    Selftest,
}

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub task: Task,
    pub out: Option<PathBuf>,
}

/// A rejected command line. `--help` and `--version` also land here, with
/// `exit_code` 0 and the text to print.
#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct UsageError {
    pub message: String,
    pub exit_code: i32,
}

impl UsageError {
    fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            exit_code: 1,
        }
    }

    fn flag(key: &str, message: impl std::fmt::Display) -> Self {
        Self::new(format!("error: invalid value for --{key}: {message}"))
    }
}

/// Parses `argv` (program name first), reading the seed fallback from the
/// environment.
pub fn parse_args<I, T>(argv: I) -> Result<RunSpec, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    parse_args_with_env(argv, std::env::var(SEED_ENV).ok())
}

/// As [`parse_args`] with an explicit value for `SPDE_LAB_SEED`.
pub fn parse_args_with_env<I, T>(argv: I, env_seed: Option<String>) -> Result<RunSpec, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| UsageError {
        message: e.render().to_string(),
        exit_code: if e.use_stderr() { 1 } else { 0 },
    })?;
    let (flags, kind) = match cli.command {
        CommandArgs::Selftest => {
            return Ok(RunSpec {
                task: Task::Selftest,
                out: None,
            })
        }
        CommandArgs::Census(f) => (f, "census"),
        CommandArgs::Convergence(f) => (f, "convergence"),
        CommandArgs::MeshStudy(f) => (f, "mesh-study"),
    };

    let mut settings = match &flags.config {
        Some(path) => read_config(path)?,
        None => BTreeMap::new(),
    };
    for (key, value) in flags.pairs() {
        if let Some(v) = value {
            settings.insert(key.to_string(), v.clone());
        }
    }
    if !settings.contains_key("seed") {
        if let Some(v) = env_seed {
            settings.insert("seed".into(), v);
        }
    }
    let s = Settings(settings);

    let out = Some(PathBuf::from(
        s.get("out")
            .map(str::to_string)
            .unwrap_or(format!("{kind}.csv")),
    ));
    let task = match kind {
        "census" => Task::Census(census_config(&s)?),
        "convergence" => Task::Convergence(convergence_config(&s, false)?),
        _ => Task::MeshStudy(mesh_config(&s)?),
    };
    Ok(RunSpec { task, out })
}

/// Parses a `key = value` file with `#` comments.
fn read_config(path: &Path) -> Result<BTreeMap<String, String>, UsageError> {
    let text = fs::read_to_string(path)
        .map_err(|e| UsageError::new(format!("error: {}", Error::io(path, e))))?;
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(UsageError::new(format!(
                "error: {}:{}: expected `key = value`",
                path.display(),
                i + 1
            )));
        };
        let key = key.trim().trim_start_matches("--");
        if !KEYS.contains(&key) {
            return Err(UsageError::new(format!(
                "error: {}:{}: unknown key `{key}`",
                path.display(),
                i + 1
            )));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

struct Settings(BTreeMap<String, String>);

impl Settings {
    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, UsageError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            Some(v) => v
                .parse()
                .map_err(|e| UsageError::flag(key, format!("`{v}`: {e}"))),
            None => Ok(default),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>, UsageError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|e| UsageError::flag(key, format!("`{s}`: {e}")))
                })
                .collect(),
            None => Ok(default),
        }
    }

    fn reject(&self, key: &str, command: &str) -> Result<(), UsageError> {
        match self.get(key) {
            Some(_) => Err(UsageError::new(format!(
                "error: --{key} does not apply to {command}"
            ))),
            None => Ok(()),
        }
    }

    fn dim(&self) -> Result<usize, UsageError> {
        let d = self.parse("d", 1usize)?;
        if d == 1 || d == 2 {
            Ok(d)
        } else {
            Err(UsageError::flag(
                "d",
                format!("dimension must be 1 or 2, got {d}"),
            ))
        }
    }

    fn seed(&self) -> Result<u64, UsageError> {
        self.parse("seed", DEFAULT_SEED)
    }

    fn jobs(&self) -> Result<usize, UsageError> {
        self.parse("jobs", 0)
    }

    fn integrators(&self, default: Vec<IntegratorKind>) -> Result<Vec<IntegratorKind>, UsageError> {
        match self.get("integrators") {
            Some(v) if v.eq_ignore_ascii_case("all") => Ok(IntegratorKind::ALL.to_vec()),
            _ => self.list("integrators", default),
        }
    }

    fn nonlinearities(
        &self,
        default: Vec<NonlinearityKind>,
        lambda: f64,
    ) -> Result<Vec<NonlinearitySpec>, UsageError> {
        let kinds = self.list("g", default)?;
        if kinds.contains(&NonlinearityKind::Custom) {
            return Err(UsageError::flag(
                "g",
                "custom coefficients are library-only",
            ));
        }
        let lambda = self.parse("lambda", lambda)?;
        if !lambda.is_finite() {
            return Err(UsageError::flag("lambda", "must be finite"));
        }
        Ok(kinds
            .into_iter()
            .map(|k| NonlinearitySpec::new(k, lambda))
            .collect())
    }

    fn levels(&self, key: &str) -> Result<Option<Vec<u32>>, UsageError> {
        self.get(key)
            .map(|v| parse_levels(v).map_err(|e| UsageError::flag(key, e)))
            .transpose()
    }
}

/// `2^-j`, `2^j` or a decimal.
pub fn parse_step(text: &str) -> Result<f64, String> {
    let t = text.trim();
    if let Some(exp) = t.strip_prefix("2^") {
        let exp = exp.trim_start_matches('(').trim_end_matches(')');
        let e: i32 = exp
            .parse()
            .map_err(|_| format!("`{text}` is not a power of two"))?;
        if !(-1000..=1000).contains(&e) {
            return Err(format!("`{text}` is out of range"));
        }
        return Ok(2f64.powi(e));
    }
    t.parse::<f64>()
        .map_err(|_| format!("`{text}` is not a number"))
}

/// `a..b` (inclusive), `a..=b`, or a comma list.
pub fn parse_levels(text: &str) -> Result<Vec<u32>, String> {
    let t = text.trim();
    if let Some((a, b)) = t.split_once("..") {
        let b = b.trim_start_matches('=');
        let a: u32 = a
            .trim()
            .parse()
            .map_err(|_| format!("bad range start in `{text}`"))?;
        let b: u32 = b
            .trim()
            .parse()
            .map_err(|_| format!("bad range end in `{text}`"))?;
        if a > b {
            return Err(format!("empty range `{text}`"));
        }
        return Ok((a..=b).collect());
    }
    let levels = t
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| format!("bad level `{s}` in `{text}`"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if levels.is_empty() {
        return Err("no levels given".into());
    }
    Ok(levels)
}

fn initial_for(dim: usize) -> InitialData {
    InitialData::sine(dim)
}

fn census_config(s: &Settings) -> Result<CensusConfig, UsageError> {
    for key in ["levels", "ref-level", "fit-levels", "reference"] {
        s.reject(key, "census")?;
    }
    let dim = s.dim()?;
    let base = CensusConfig::standard(dim);
    let horizon = s.parse("T", base.horizon)?;
    let tau = match s.get("tau") {
        Some(v) => parse_step(v).map_err(|e| UsageError::flag("tau", e))?,
        None => base.tau(),
    };
    let level = dyadic_level(horizon, tau).map_err(|e| UsageError::flag("tau", e))?;
    let cfg = CensusConfig {
        dim,
        horizon,
        level,
        subdivisions: s.parse("N", base.subdivisions)?,
        nonlinearities: s.nonlinearities(NonlinearityKind::CATALOGUE.to_vec(), 2.5)?,
        initial: initial_for(dim),
        samples: s.parse("samples", base.samples)?,
        seed: s.seed()?,
        integrators: s.integrators(base.integrators)?,
        jobs: s.jobs()?,
    };
    cfg.validate()
        .map_err(|e| UsageError::new(format!("error: {e}")))?;
    Ok(cfg)
}

fn convergence_config(s: &Settings, mesh: bool) -> Result<ConvergenceConfig, UsageError> {
    s.reject("tau", if mesh { "mesh-study" } else { "convergence" })?;
    let dim = s.dim()?;
    let base = ConvergenceConfig::standard(dim);
    let default_integrators = if mesh {
        vec![IntegratorKind::Lt]
    } else {
        base.integrators.clone()
    };
    let nonlinearity = if mesh {
        // placeholder; the mesh study sets g per table
        base.nonlinearity
    } else {
        let gs = s.nonlinearities(vec![NonlinearityKind::Rational], 1.0)?;
        if gs.len() != 1 {
            return Err(UsageError::flag(
                "g",
                "convergence takes a single coefficient",
            ));
        }
        gs[0]
    };
    let reference = s.parse("reference", ReferenceKind::LieTrotter)?;
    let cfg = ConvergenceConfig {
        dim,
        horizon: s.parse("T", base.horizon)?,
        ref_level: s.parse("ref-level", base.ref_level)?,
        levels: s.levels("levels")?.unwrap_or(base.levels),
        subdivisions: if mesh {
            base.subdivisions
        } else {
            s.parse("N", base.subdivisions)?
        },
        nonlinearity,
        initial: initial_for(dim),
        samples: s.parse("samples", base.samples)?,
        seed: s.seed()?,
        integrators: s.integrators(default_integrators)?,
        reference,
        fit_levels: s.levels("fit-levels")?,
        jobs: s.jobs()?,
    };
    if !mesh {
        cfg.validate()
            .map_err(|e| UsageError::new(format!("error: {e}")))?;
    }
    Ok(cfg)
}

fn mesh_config(s: &Settings) -> Result<MeshStudyConfig, UsageError> {
    let base = convergence_config(s, true)?;
    let standard = MeshStudyConfig::standard();
    let subdivisions = s.list("N", standard.subdivisions)?;
    let nonlinearities = s.nonlinearities(
        vec![NonlinearityKind::Linear, NonlinearityKind::Rational],
        1.5,
    )?;
    for &n in &subdivisions {
        for &g in &nonlinearities {
            ConvergenceConfig {
                subdivisions: n,
                nonlinearity: g,
                ..base.clone()
            }
            .validate()
            .map_err(|e| UsageError::new(format!("error: {e}")))?;
        }
    }
    Ok(MeshStudyConfig {
        base,
        subdivisions,
        nonlinearities,
    })
}

/// Runs the task, writes the report and prints the summary. Returns the
/// process exit status: 0 on success, 1 on configuration or I/O errors and
/// 2 if the selftest fails.
pub fn run(spec: &RunSpec) -> i32 {
    let report: crate::Result<ExperimentReport> = match &spec.task {
        Task::Selftest => {
            let report = run_selftest();
            print!("{report}");
            return if report.passed() { 0 } else { 2 };
        }
        Task::Census(cfg) => positivity_census(cfg),
        Task::Convergence(cfg) => mean_square_error_study(cfg),
        Task::MeshStudy(cfg) => mesh_independence_study(cfg),
    };
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    print!("{}", report.summary());
    if let Some(path) = &spec.out {
        match write_report(&report, path) {
            Ok(summary) => println!("wrote {} and {}", path.display(), summary.display()),
            Err(e) => {
                eprintln!("error: {e}");
                return 1;
            }
        }
    }
    0
}

/// Parses and runs; the body of the `spde-lab` binary.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(argv) {
        Ok(spec) => run(&spec),
        Err(e) if e.exit_code == 0 => {
            print!("{}", e.message);
            0
        }
        Err(e) => {
            eprintln!("{}", e.message.trim_end());
            e.exit_code
        }
    }
}
