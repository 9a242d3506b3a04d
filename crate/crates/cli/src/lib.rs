//! Experiment runner for `steplab`.
//!
//! Each subcommand resolves its parameters from flags and an optional TOML
//! file, with flags taking precedence. It then runs one library operation
//! and writes `report.json` and any side outputs into a directory of its own.
//! All computation finishes before anything is written, so a rejected config
//! leaves no files behind.

mod commands;
pub mod parse;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use steplab::Exec;

pub use commands::*;

pub const REPORT_SCHEMA: &str = "steplab.report/1";
pub const CONFIG_SCHEMA_VERSION: &str = "1";
/// Root directory for outputs when `--out` is not given.
pub const OUT_ENV: &str = "STEPLAB_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Lib(#[from] steplab::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "steplab", version, about = "Exact-arithmetic experiments on step-isometries, random graphs on dense sets, and ball geometry")]
pub struct Cli {
    /// TOML file with parameters for the subcommand; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory. Defaults to $STEPLAB_OUT/<command>, or steplab-out/<command>.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Run on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Build the staged dense subset of c00 whose distance-one graph is almost surely universal.
    ///
    /// Stage 1 is {e1}. Stage n adds u + q·e_j for every u supported on
    /// coordinates 1..n−1 with entries in Q_n and every nonzero q in Q_n, each
    /// at a fresh index j. Q_n holds the rationals of absolute value at most n
    /// with denominator at most n. Writes rado.jsonl.
    RadoBuild(RadoBuildArgs),

    /// Sample the random graph joining points at distance below one with probability p.
    ///
    /// Each eligible pair draws once from a keyed counter-based generator, so
    /// the graph depends only on the seed and the point ids. Writes
    /// graph.json, graph.dot or graph.graphml.
    SampleGraph(SampleGraphArgs),

    /// Build a partial isomorphism between two sampled graphs on the same dense set.
    ///
    /// Alternates forward and backward steps. Each step picks the lowest
    /// unmatched index and scans candidates that keep distances exactly, keep
    /// support-closed domains and respect adjacency. Every accepted step is
    /// verified. Writes transcript.jsonl and, with --sweep-pairs, sweep.csv.
    BackAndForth(BackAndForthArgs),

    /// Compare graph distance with norm distance on a rational grid of an interval.
    ///
    /// For k up to k-max counts pairs with ‖x−y‖ < k whose graph distance
    /// exceeds k, and pairs within graph distance k whose norm distance
    /// reaches k. The second count must be zero. Writes dichotomy.csv.
    Dichotomy(DichotomyArgs),

    /// Test whether a finite map preserves the floor of every pairwise distance.
    ///
    /// Images come from --images or from --map (c0, identity, or a single
    /// piecewise-linear step map applied to every coordinate).
    CheckStepIso(CheckStepIsoArgs),

    /// List every self-bijection of a small point set that preserves distance floors.
    EnumerateStepIso(EnumerateStepIsoArgs),

    /// Evaluate the coordinatewise step-isometry of c0 that admits no isometric extension.
    ///
    /// Checks ‖T(e_n/(n+1))‖ = 1 − 1/(n+1) exactly and runs the step-isometry
    /// test on random finite subsets.
    C0Counterexample(C0CounterexampleArgs),

    /// Compute the coordinate that any extension of the c0 map must assign to (1/(k+1))_k.
    ///
    /// Intersects the pairs of unit balls around images of
    /// (±1 + 1/(n+1) ∓ ε)e_n and takes the limit ε → 0 exactly.
    ForcedCoordinate(ForcedCoordinateArgs),

    /// Check the two-ball and four-ball intersection facts for L1 on step functions.
    ///
    /// The two-ball witness splits f at half its mass. The four-ball probe
    /// samples the open balls around ±δ·1 and ±δ·(1_[0,1/2] − 1_[1/2,1]) and
    /// records the largest norm found. Writes probe.csv.
    L1Balls(L1BallsArgs),

    /// Write a vector of norm below one as a sum of two unit vectors in ℓp^d.
    TwoUnit(TwoUnitArgs),

    /// Sample the two-ball intersection at the all-ones vector of ℓ∞^d.
    StronglyExtreme(StronglyExtremeArgs),

    /// Evaluate the renorming gauge built from a slab and the points e0 + e_k/(2k), e0 − e_k/(2k+1).
    ///
    /// Reports an upper bound with its decomposition and a dual lower bound,
    /// plus the (2/3)‖x‖₂ ≤ γ(x) ≤ 2‖x‖₂ sandwich. Writes certificate.json.
    DavisGauge(DavisGaugeArgs),

    /// Tabulate, for each extreme point in ±F, the nearest other extreme point in gauge distance.
    ///
    /// Only ±(e0 + e1/2) should have none within 1/2. Writes table.csv.
    DavisTable(DavisTableArgs),

    /// Generate a finite set whose pairwise distances are all distinct.
    NoRepeatGen(NoRepeatGenArgs),

    /// Run the registered property checks.
    ///
    /// Writes suite.json and junit.xml.
    Suite(SuiteArgs),

    /// Run several config files concurrently, one output directory each.
    ///
    /// Every file must name its subcommand with a top-level `command` key.
    Sweep(SweepArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::RadoBuild(_) => RadoBuildArgs::NAME,
            Command::SampleGraph(_) => SampleGraphArgs::NAME,
            Command::BackAndForth(_) => BackAndForthArgs::NAME,
            Command::Dichotomy(_) => DichotomyArgs::NAME,
            Command::CheckStepIso(_) => CheckStepIsoArgs::NAME,
            Command::EnumerateStepIso(_) => EnumerateStepIsoArgs::NAME,
            Command::C0Counterexample(_) => C0CounterexampleArgs::NAME,
            Command::ForcedCoordinate(_) => ForcedCoordinateArgs::NAME,
            Command::L1Balls(_) => L1BallsArgs::NAME,
            Command::TwoUnit(_) => TwoUnitArgs::NAME,
            Command::StronglyExtreme(_) => StronglyExtremeArgs::NAME,
            Command::DavisGauge(_) => DavisGaugeArgs::NAME,
            Command::DavisTable(_) => DavisTableArgs::NAME,
            Command::NoRepeatGen(_) => NoRepeatGenArgs::NAME,
            Command::Suite(_) => SuiteArgs::NAME,
            Command::Sweep(_) => "sweep",
        }
    }
}

#[derive(clap::Args, Debug, Clone, Default)]
pub struct SweepArgs {
    /// Config files, each with a `command` key.
    #[arg(required = true)]
    pub configs: Vec<PathBuf>,
}

/// A file written next to `report.json`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SideFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl SideFile {
    pub fn new(name: impl Into<String>, bytes: impl Into<Vec<u8>>) -> Self {
        SideFile { name: name.into(), bytes: bytes.into() }
    }
}

/// What a subcommand hands back before anything touches the disk.
#[derive(Debug, Default)]
pub struct RunOutput {
    /// Fully resolved parameters.
    pub config: Value,
    pub results: Value,
    /// Named assertions; the run passes iff all hold.
    pub checks: BTreeMap<String, bool>,
    pub files: Vec<SideFile>,
}

impl RunOutput {
    pub fn check(&mut self, name: &str, ok: bool) {
        self.checks.insert(name.to_string(), ok);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub version: String,
    pub command: String,
    pub config: Value,
    pub results: Value,
    pub side_outputs: Vec<String>,
    pub checks: BTreeMap<String, bool>,
    pub passed: bool,
    pub wall_time_ms: u64,
}

impl Report {
    /// Everything except wall time; equal across repeated runs of one config.
    pub fn payload(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("wall_time_ms");
        v
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_INVARIANT
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub files: Vec<SideFile>,
}

/// A subcommand whose parameters can come from flags, a config table, or both.
pub trait Experiment: Serialize + DeserializeOwned + Default + Clone {
    const NAME: &'static str;

    fn run(&self, exec: Exec) -> CliResult<RunOutput>;
}

/// Overlay set flags onto the config table and deserialize the result.
///
/// Config keys may use `_` or `-`; unknown keys are rejected.
pub fn merge<E: Experiment>(flags: &E, file: Option<&Map<String, Value>>) -> CliResult<E> {
    let mut merged = Map::new();
    if let Some(file) = file {
        for (k, v) in file {
            merged.insert(k.replace('_', "-"), v.clone());
        }
    }
    let flags = serde_json::to_value(flags).map_err(|e| CliError::config(e.to_string()))?;
    if let Value::Object(flags) = flags {
        for (k, v) in flags {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::config(format!("{}: {e}", E::NAME)))
}

fn execute<E: Experiment>(flags: &E, file: Option<&Map<String, Value>>, exec: Exec) -> CliResult<Outcome> {
    let start = Instant::now();
    let args = merge(flags, file)?;
    let out = args.run(exec)?;
    let passed = out.checks.values().all(|&ok| ok);
    let report = Report {
        schema: REPORT_SCHEMA.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: E::NAME.into(),
        config: out.config,
        results: out.results,
        side_outputs: out.files.iter().map(|f| f.name.clone()).collect(),
        checks: out.checks,
        passed,
        wall_time_ms: start.elapsed().as_millis() as u64,
    };
    Ok(Outcome { report, files: out.files })
}

/// Run a subcommand other than `sweep` entirely in memory.
pub fn run_command(cmd: &Command, file: Option<&Map<String, Value>>, exec: Exec) -> CliResult<Outcome> {
    match cmd {
        Command::RadoBuild(a) => execute(a, file, exec),
        Command::SampleGraph(a) => execute(a, file, exec),
        Command::BackAndForth(a) => execute(a, file, exec),
        Command::Dichotomy(a) => execute(a, file, exec),
        Command::CheckStepIso(a) => execute(a, file, exec),
        Command::EnumerateStepIso(a) => execute(a, file, exec),
        Command::C0Counterexample(a) => execute(a, file, exec),
        Command::ForcedCoordinate(a) => execute(a, file, exec),
        Command::L1Balls(a) => execute(a, file, exec),
        Command::TwoUnit(a) => execute(a, file, exec),
        Command::StronglyExtreme(a) => execute(a, file, exec),
        Command::DavisGauge(a) => execute(a, file, exec),
        Command::DavisTable(a) => execute(a, file, exec),
        Command::NoRepeatGen(a) => execute(a, file, exec),
        Command::Suite(a) => execute(a, file, exec),
        Command::Sweep(_) => Err(CliError::config("sweep cannot be nested")),
    }
}

/// Run the subcommand named in a config table, with no flags.
pub fn run_named(name: &str, file: &Map<String, Value>, exec: Exec) -> CliResult<Outcome> {
    fn go<E: Experiment>(file: &Map<String, Value>, exec: Exec) -> CliResult<Outcome> {
        execute(&E::default(), Some(file), exec)
    }
    match name {
        RadoBuildArgs::NAME => go::<RadoBuildArgs>(file, exec),
        SampleGraphArgs::NAME => go::<SampleGraphArgs>(file, exec),
        BackAndForthArgs::NAME => go::<BackAndForthArgs>(file, exec),
        DichotomyArgs::NAME => go::<DichotomyArgs>(file, exec),
        CheckStepIsoArgs::NAME => go::<CheckStepIsoArgs>(file, exec),
        EnumerateStepIsoArgs::NAME => go::<EnumerateStepIsoArgs>(file, exec),
        C0CounterexampleArgs::NAME => go::<C0CounterexampleArgs>(file, exec),
        ForcedCoordinateArgs::NAME => go::<ForcedCoordinateArgs>(file, exec),
        L1BallsArgs::NAME => go::<L1BallsArgs>(file, exec),
        TwoUnitArgs::NAME => go::<TwoUnitArgs>(file, exec),
        StronglyExtremeArgs::NAME => go::<StronglyExtremeArgs>(file, exec),
        DavisGaugeArgs::NAME => go::<DavisGaugeArgs>(file, exec),
        DavisTableArgs::NAME => go::<DavisTableArgs>(file, exec),
        NoRepeatGenArgs::NAME => go::<NoRepeatGenArgs>(file, exec),
        SuiteArgs::NAME => go::<SuiteArgs>(file, exec),
        other => Err(CliError::config(format!("unknown command {other:?}"))),
    }
}

/// A parsed config file, split into reserved keys and command parameters.
#[derive(Debug, Default)]
pub struct ConfigFile {
    pub command: Option<String>,
    pub out: Option<PathBuf>,
    pub params: Map<String, Value>,
}

pub fn load_config(path: &Path) -> CliResult<ConfigFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_config(text: &str) -> CliResult<ConfigFile> {
    let table: toml::Table = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
    let Value::Object(mut params) = serde_json::to_value(table).map_err(|e| CliError::config(e.to_string()))? else {
        unreachable!("a TOML table is an object");
    };
    let take_str = |params: &mut Map<String, Value>, key: &str| -> CliResult<Option<String>> {
        match params.remove(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(CliError::config(format!("{key} must be a string, got {v}"))),
        }
    };
    match take_str(&mut params, "schema_version")? {
        None => {}
        Some(v) if v == CONFIG_SCHEMA_VERSION => {}
        Some(v) => return Err(CliError::config(format!("unsupported schema_version {v:?}"))),
    }
    let command = take_str(&mut params, "command")?;
    let out = take_str(&mut params, "out")?.map(PathBuf::from);
    Ok(ConfigFile { command, out, params })
}

fn default_out(command: &str) -> PathBuf {
    let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("steplab-out"));
    root.join(command)
}

/// Write side outputs, then `report.json`.
pub fn write_outcome(dir: &Path, outcome: &Outcome) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    for f in &outcome.files {
        fs::write(dir.join(&f.name), &f.bytes)?;
    }
    let mut json = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    json.push('\n');
    fs::write(dir.join("report.json"), json)?;
    Ok(())
}

fn run_sweep(args: &SweepArgs, root: &Path, exec: Exec) -> CliResult<Outcome> {
    let start = Instant::now();
    let mut configs = Vec::with_capacity(args.configs.len());
    for path in &args.configs {
        let cfg = load_config(path)?;
        let name = cfg
            .command
            .clone()
            .ok_or_else(|| CliError::config(format!("{}: missing `command` key", path.display())))?;
        configs.push((name, cfg));
    }
    // runs are independent; their outputs are merged back in input order
    let outcomes: Vec<CliResult<Outcome>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|(name, cfg)| s.spawn(move || run_named(name, &cfg.params, exec)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let outcomes = outcomes.into_iter().collect::<CliResult<Vec<_>>>()?;
    let mut runs = Vec::new();
    let mut checks = BTreeMap::new();
    for (k, (((name, _), outcome), path)) in configs.iter().zip(&outcomes).zip(&args.configs).enumerate() {
        let dir = format!("{k:03}-{name}");
        write_outcome(&root.join(&dir), outcome)?;
        checks.insert(dir.clone(), outcome.report.passed);
        runs.push(serde_json::json!({
            "config": path.display().to_string(),
            "command": name,
            "dir": dir,
            "passed": outcome.report.passed,
        }));
    }
    let passed = checks.values().all(|&ok| ok);
    let report = Report {
        schema: REPORT_SCHEMA.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "sweep".into(),
        config: serde_json::json!({ "configs": args.configs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>() }),
        results: serde_json::json!({ "runs": runs }),
        side_outputs: Vec::new(),
        checks,
        passed,
        wall_time_ms: start.elapsed().as_millis() as u64,
    };
    Ok(Outcome { report, files: Vec::new() })
}

fn run_parsed(cli: &Cli) -> CliResult<(PathBuf, Outcome)> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    let cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => ConfigFile::default(),
    };
    let name = cli.command.name();
    if let Some(c) = &cfg.command {
        if c != name {
            return Err(CliError::config(format!("config is for {c:?}, not {name:?}")));
        }
    }
    let dir = cli.out.clone().or(cfg.out.clone()).unwrap_or_else(|| default_out(name));
    let outcome = match &cli.command {
        Command::Sweep(args) => run_sweep(args, &dir, exec)?,
        cmd => run_command(cmd, cli.config.as_ref().map(|_| &cfg.params), exec)?,
    };
    Ok((dir, outcome))
}

/// Parse arguments, run, write outputs, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (dir, outcome) = match run_parsed(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = write_outcome(&dir, &outcome) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    let r = &outcome.report;
    for (name, ok) in &r.checks {
        if !ok {
            eprintln!("check failed: {name}");
        }
    }
    println!("{} {} -> {}", r.command, if r.passed { "passed" } else { "FAILED" }, dir.join("report.json").display());
    r.exit_code()
}
