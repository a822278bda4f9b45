//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation-suite failure, 2 usage or parameter
//! error, 3 resource limit or unresolved threshold.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::equilibrium::{find_threshold_with, Outcome, ThresholdOptions, DEFAULT_CAP};
use crate::error::Error;
use crate::model::ModelParams;
use crate::sim::{profit_from_estimate, simulate, EmpiricalProfit, SimConfig, SimEstimate, Z_95};
use crate::sojourn::build_table;
use crate::validate::{all_passed, run_suite, SuiteOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tandem", version, about = "Threshold equilibria for a two-node tandem queue")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the equilibrium threshold and profit profile.
    Solve(SolveArgs),
    /// Dump the full-information sojourn table as CSV.
    Table(TableArgs),
    /// Simulate the network under a threshold population.
    Simulate(SimulateArgs),
    /// Solve over a grid of one parameter.
    Sweep(SweepArgs),
    /// Run the cross-oracle check suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// JSON file with keys lambda, mu1, mu2, R, c1, c2; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub mu2: Option<f64>,
    #[arg(long = "R")]
    pub reward: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    /// Accept c1 = c2 = 0.
    #[arg(long)]
    pub allow_degenerate: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub mu2: Option<f64>,
    #[arg(long)]
    pub nmax: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "K")]
    pub threshold: usize,
    #[arg(long)]
    pub seed: u64,
    /// Measured events per replication.
    #[arg(long)]
    pub events: u64,
    #[arg(long, default_value_t = 100_000)]
    pub warmup: u64,
    #[arg(long, default_value_t = 1)]
    pub reps: u32,
    #[arg(long, default_value_t = 50)]
    pub batches: u32,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SweepParam {
    #[value(name = "R")]
    Reward,
    #[value(name = "c1")]
    C1,
    #[value(name = "c2")]
    C2,
    #[value(name = "mu1")]
    Mu1,
    #[value(name = "mu2")]
    Mu2,
    #[value(name = "lambda")]
    Lambda,
}

impl SweepParam {
    fn key(self) -> &'static str {
        match self {
            SweepParam::Reward => "R",
            SweepParam::C1 => "c1",
            SweepParam::C2 => "c2",
            SweepParam::Mu1 => "mu1",
            SweepParam::Mu2 => "mu2",
            SweepParam::Lambda => "lambda",
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    #[arg(long, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub step: f64,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Small grids only (thresholds up to 10).
    #[arg(long)]
    pub quick: bool,
    #[arg(long, hide = true)]
    pub self_test_negative: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Partially specified parameters, as read from a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    lambda: Option<f64>,
    mu1: Option<f64>,
    mu2: Option<f64>,
    #[serde(rename = "R")]
    reward: Option<f64>,
    c1: Option<f64>,
    c2: Option<f64>,
}

fn read_model_file(path: Option<&Path>) -> Result<ModelFile, Error> {
    match path {
        None => Ok(ModelFile::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("bad config {}: {e}", p.display())))
        }
    }
}

fn required(name: &str, flag: Option<f64>, file: Option<f64>) -> Result<f64, Error> {
    flag.or(file)
        .ok_or_else(|| Error::Config(format!("missing --{name}")))
}

impl ModelArgs {
    fn resolve(&self) -> Result<ModelParams, Error> {
        let file = read_model_file(self.config.as_deref())?;
        let params = ModelParams::new(
            required("lambda", self.lambda, file.lambda)?,
            required("mu1", self.mu1, file.mu1)?,
            required("mu2", self.mu2, file.mu2)?,
            required("R", self.reward, file.reward)?,
            required("c1", self.c1, file.c1)?,
            required("c2", self.c2, file.c2)?,
        );
        params.checked(self.allow_degenerate)
    }

    /// Rates only; economics are optional and default to zero.
    fn resolve_rates(&self) -> Result<(ModelParams, bool), Error> {
        let file = read_model_file(self.config.as_deref())?;
        let reward = self.reward.or(file.reward);
        let c1 = self.c1.or(file.c1);
        let c2 = self.c2.or(file.c2);
        let has_economics = reward.is_some() && c1.is_some() && c2.is_some();
        let params = ModelParams::new(
            required("lambda", self.lambda, file.lambda)?,
            required("mu1", self.mu1, file.mu1)?,
            required("mu2", self.mu2, file.mu2)?,
            reward.unwrap_or(0.0),
            c1.unwrap_or(0.0),
            c2.unwrap_or(0.0),
        );
        let allow = self.allow_degenerate || !has_economics;
        Ok((params.checked(allow)?, has_economics))
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub parameters: serde_json::Value,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    pub version: &'static str,
    pub duration_secs: f64,
}

struct Run {
    command: &'static str,
    dir: PathBuf,
    started: Instant,
    outputs: Vec<String>,
}

impl Run {
    fn new(command: &'static str, out: &OutArgs) -> Result<Self, Error> {
        fs::create_dir_all(&out.out)?;
        Ok(Self {
            command,
            dir: out.out.clone(),
            started: Instant::now(),
            outputs: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Error> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        log::info!("wrote {}", path.display());
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    fn finish(self, parameters: serde_json::Value, seeds: Vec<u64>) -> Result<(), Error> {
        let manifest = RunManifest {
            command: self.command,
            parameters,
            seeds,
            outputs: self.outputs,
            version: env!("CARGO_PKG_VERSION"),
            duration_secs: self.started.elapsed().as_secs_f64(),
        };
        let path = self.dir.join(format!("{}.manifest.json", self.command));
        fs::write(path, serde_json::to_vec_pretty(&manifest)?)?;
        Ok(())
    }
}

fn to_json_line<T: Serialize>(v: &T) -> Result<Vec<u8>, Error> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn emit(bytes: &[u8]) {
    let mut stdout = std::io::stdout().lock();
    // a closed stdout is not an error for the artifacts already on disk
    let _ = stdout.write_all(bytes);
}

fn cmd_solve(args: &SolveArgs) -> Result<i32, Error> {
    let params = args.model.resolve()?;
    let result = find_threshold_with(
        &params,
        &ThresholdOptions {
            cap: args.cap,
            ..ThresholdOptions::default()
        },
    )?;
    let mut run = Run::new("solve", &args.out)?;
    let bytes = match args.format {
        Format::Json => to_json_line(&result.document())?,
        Format::Csv => {
            let mut buf = Vec::new();
            result.profile.write_csv(&mut buf)?;
            buf
        }
    };
    let name = match args.format {
        Format::Json => "solve.json",
        Format::Csv => "solve.csv",
    };
    run.write(name, &bytes)?;
    emit(&bytes);
    run.finish(
        serde_json::json!({ "model": params, "cap": args.cap, "format": args.format }),
        vec![],
    )?;
    for note in &result.notes {
        log::info!("{note}");
    }
    Ok(match result.outcome {
        Outcome::UnresolvedAtCap(_) => EXIT_RESOURCE,
        _ => EXIT_OK,
    })
}

fn cmd_table(args: &TableArgs) -> Result<i32, Error> {
    let file = read_model_file(args.config.as_deref())?;
    let mu1 = required("mu1", args.mu1, file.mu1)?;
    let mu2 = required("mu2", args.mu2, file.mu2)?;
    let table = build_table(mu1, mu2, args.nmax)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    let mut run = Run::new("table", &args.out)?;
    run.write("table.csv", &buf)?;
    emit(&buf);
    run.finish(
        serde_json::json!({ "mu1": mu1, "mu2": mu2, "nmax": args.nmax }),
        vec![],
    )?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SimulateDocument<'a> {
    #[serde(flatten)]
    estimate: &'a SimEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical_profit: Option<Vec<EmpiricalProfit>>,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32, Error> {
    let (params, has_economics) = args.model.resolve_rates()?;
    let config = SimConfig {
        seed: args.seed,
        warmup_events: args.warmup,
        measured_events: args.events,
        replications: args.reps,
        batches: args.batches,
        trace_limit: 0,
    };
    let estimate = simulate(&params, args.threshold, &config)?;
    let doc = SimulateDocument {
        estimate: &estimate,
        empirical_profit: has_economics.then(|| profit_from_estimate(&params, &estimate, Z_95)),
    };
    let bytes = to_json_line(&doc)?;
    let mut run = Run::new("simulate", &args.out)?;
    run.write("simulate.json", &bytes)?;
    emit(&bytes);
    run.finish(
        serde_json::json!({ "model": params, "K": args.threshold, "config": config }),
        vec![args.seed],
    )?;
    Ok(EXIT_OK)
}

/// Grid `from, from + step, ..., <= to` with a small slack for rounding.
pub fn sweep_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, Error> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) || step <= 0.0 || from > to {
        return Err(Error::Config(format!(
            "invalid sweep grid from={from} to={to} step={step}"
        )));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(Error::Config(format!("sweep grid has {count} points")));
    }
    Ok((0..count).map(|i| from + i as f64 * step).collect())
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32, Error> {
    let grid = sweep_grid(args.from, args.to, args.step)?;
    let key = args.param.key();
    // The swept parameter need not be given elsewhere.
    let mut model = args.model.clone();
    let placeholder = Some(grid[0]);
    match args.param {
        SweepParam::Reward => model.reward = model.reward.or(placeholder),
        SweepParam::C1 => model.c1 = model.c1.or(placeholder),
        SweepParam::C2 => model.c2 = model.c2.or(placeholder),
        SweepParam::Mu1 => model.mu1 = model.mu1.or(placeholder),
        SweepParam::Mu2 => model.mu2 = model.mu2.or(placeholder),
        SweepParam::Lambda => model.lambda = model.lambda.or(placeholder),
    }
    let file = read_model_file(model.config.as_deref())?;
    let base = ModelParams::new(
        required("lambda", model.lambda, file.lambda)?,
        required("mu1", model.mu1, file.mu1)?,
        required("mu2", model.mu2, file.mu2)?,
        required("R", model.reward, file.reward)?,
        required("c1", model.c1, file.c1)?,
        required("c2", model.c2, file.c2)?,
    );

    let mut csv = String::from("value,outcome,K,monotone\n");
    let mut any_unresolved = false;
    for &value in &grid {
        let params = base.with(key, value)?.checked(model.allow_degenerate)?;
        let result = find_threshold_with(
            &params,
            &ThresholdOptions {
                cap: args.cap,
                ..ThresholdOptions::default()
            },
        )?;
        any_unresolved |= matches!(result.outcome, Outcome::UnresolvedAtCap(_));
        let k = result
            .outcome
            .threshold()
            .map(|k| k.to_string())
            .unwrap_or_default();
        csv.push_str(&format!(
            "{value},{},{k},{}\n",
            result.outcome.label(),
            result.conditions.monotone
        ));
    }
    let mut run = Run::new("sweep", &args.out)?;
    run.write("sweep.csv", csv.as_bytes())?;
    emit(csv.as_bytes());
    run.finish(
        serde_json::json!({
            "model": base, "param": key, "from": args.from, "to": args.to,
            "step": args.step, "cap": args.cap,
        }),
        vec![],
    )?;
    if any_unresolved {
        log::warn!("some grid points are unresolved at the cap");
    }
    Ok(EXIT_OK)
}

fn cmd_validate(args: &ValidateArgs) -> Result<i32, Error> {
    let outcomes = run_suite(SuiteOptions {
        quick: args.quick,
        inject_fault: args.self_test_negative,
    });
    let mut report = String::new();
    for o in &outcomes {
        report.push_str(&o.to_string());
        report.push('\n');
    }
    let passed = all_passed(&outcomes);
    let mut run = Run::new("validate", &args.out)?;
    run.write("validate.txt", report.as_bytes())?;
    emit(report.as_bytes());
    if !passed {
        for o in outcomes.iter().filter(|o| !o.passed) {
            eprintln!("check failed: {} (max error {:e})", o.name, o.max_error);
        }
    }
    run.finish(
        serde_json::json!({ "quick": args.quick, "checks": outcomes }),
        vec![],
    )?;
    Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::BudgetExceeded { .. } | Error::ThresholdCap { .. } | Error::Io(_) => EXIT_RESOURCE,
        _ => EXIT_USAGE,
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("TANDEM_LOG", "error");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Table(a) => cmd_table(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
