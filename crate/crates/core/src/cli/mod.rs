//! The `safesim` command line: scenario library, training, simulation,
//! parameter sweeps and evaluation.
//!
//! Every flag can also come from a JSON config file (`--config`) whose keys
//! are the flag names in snake_case; flags override the file. The seed
//! falls back to `SAFESIM_SEED`. Exit codes: 0 success, 1 invalid input,
//! 2 runtime failure, with a JSON error object on stderr.

mod svg;
mod sweep;

pub use svg::render as render_svg;
pub use sweep::{run_sweep, SweepCell, SweepResult, SweepSpec};

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::corpus::{generate, CorpusConfig};
use crate::diffusion::{train, DenoiserModel, TrainConfig};
use crate::guidance::GuidanceConfig;
use crate::library::write_library;
use crate::metrics::{aggregate, DrivingProfileHistogram, ProfileMode};
use crate::planners::PlannerKind;
use crate::scene::ScenarioSpec;
use crate::sim::{run, Overrides, RhoOverride, SimConfig, SimLog};
use crate::Error;

pub const SEED_ENV: &str = "SAFESIM_SEED";

#[derive(Parser, Debug)]
#[command(name = "safesim", version, about = "Closed-loop safety-critical traffic simulation")]
pub struct Cli {
    /// JSON file providing defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the built-in scenario library.
    GenScenarios(GenArgs),
    /// Generate the synthetic corpus and train the denoiser.
    Train(TrainArgs),
    /// Run one closed-loop simulation.
    Simulate(SimulateArgs),
    /// Run a parameter sweep and write a metrics CSV.
    Sweep(SweepArgs),
    /// Aggregate metrics over a directory of logs.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug, Default)]
pub struct GenArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct TrainArgs {
    /// Output model file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f32>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output log (JSON lines).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_planner)]
    pub planner: Option<PlannerKind>,
    #[arg(long, value_parser = parse_rho)]
    pub rho_mode: Option<RhoOverride>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub ttc_weight: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub v_diff: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub proposal_offset: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write an SVG figure of the executed tracks.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Samples per agent per tick.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Run length in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Guidance only: do not seed from proposals.
    #[arg(long)]
    pub no_proposals: bool,
    /// Disable route and Gaussian regularization.
    #[arg(long)]
    pub no_regularization: bool,
}

#[derive(Args, Debug, Default)]
pub struct SweepArgs {
    /// Sweep specification (JSON).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional directory receiving every cell's log.
    #[arg(long)]
    pub log_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct EvaluateArgs {
    /// Directory of `*.jsonl` logs.
    #[arg(long)]
    pub logs: Option<PathBuf>,
    /// Model file or histogram JSON providing the realism reference.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Output prefix; writes `<out>.csv` and `<out>.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_profile)]
    pub profile_mode: Option<ProfileMode>,
    #[arg(long)]
    pub lambda_t: Option<f64>,
    #[arg(long)]
    pub lambda_d: Option<f64>,
}

fn parse_enum<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_planner(s: &str) -> Result<PlannerKind, String> {
    parse_enum(s)
}

fn parse_rho(s: &str) -> Result<RhoOverride, String> {
    parse_enum(s)
}

fn parse_profile(s: &str) -> Result<ProfileMode, String> {
    parse_enum(s)
}

/// Flat config file: any flag name in snake_case.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub episodes: Option<usize>,
    pub iterations: Option<usize>,
    pub hidden: Option<usize>,
    pub layers: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f32>,
    pub seed: Option<u64>,
    pub scenario: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub planner: Option<PlannerKind>,
    pub rho_mode: Option<RhoOverride>,
    pub gamma: Option<f64>,
    pub ttc_weight: Option<f64>,
    pub v_diff: Option<f64>,
    pub proposal_offset: Option<f64>,
    pub svg: Option<PathBuf>,
    pub samples: Option<usize>,
    pub duration: Option<f64>,
    pub no_proposals: Option<bool>,
    pub no_regularization: Option<bool>,
    pub spec: Option<PathBuf>,
    pub log_dir: Option<PathBuf>,
    pub logs: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub profile_mode: Option<ProfileMode>,
    pub lambda_t: Option<f64>,
    pub lambda_d: Option<f64>,
}

/// Failure classified for the exit code.
#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn to_json(&self) -> String {
        let (kind, msg) = match self {
            CliError::Invalid(m) => ("invalid-input", m),
            CliError::Runtime(m) => ("runtime", m),
        };
        serde_json::json!({ "error": kind, "message": msg, "code": self.code() }).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let missing = matches!(&e, Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound);
        if e.is_validation() || missing {
            CliError::Invalid(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Invalid(format!("missing required option --{flag}")))
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Invalid(format!("{SEED_ENV} must be an unsigned integer, got '{s}'"))),
        Err(_) => Ok(None),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = CliError::Invalid(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.code();
        }
    };
    match execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.code()
        }
    }
}

/// Runs a parsed command and returns a JSON summary line.
pub fn execute(cli: Cli) -> Result<String, CliError> {
    let file = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::GenScenarios(a) => gen_scenarios(a, file),
        Command::Train(a) => train_cmd(a, file),
        Command::Simulate(a) => simulate(a, file),
        Command::Sweep(a) => sweep_cmd(a, file),
        Command::Evaluate(a) => evaluate(a, file),
    }
}

fn gen_scenarios(a: GenArgs, f: FileConfig) -> Result<String, CliError> {
    let out = required(a.out.or(f.out), "out")?;
    let paths = write_library(&out).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(serde_json::json!({ "scenarios": paths }).to_string())
}

fn train_cmd(a: TrainArgs, f: FileConfig) -> Result<String, CliError> {
    let out = required(a.out.or(f.out), "out")?;
    let seed = a.seed.or(f.seed).or(env_seed()?).unwrap_or(0);
    let base = TrainConfig::default();
    let cfg = TrainConfig {
        iterations: a.iterations.or(f.iterations).unwrap_or(base.iterations),
        batch_size: a.batch_size.or(f.batch_size).unwrap_or(base.batch_size),
        learning_rate: a.learning_rate.or(f.learning_rate).unwrap_or(base.learning_rate),
        hidden: a.hidden.or(f.hidden).unwrap_or(base.hidden),
        layers: a.layers.or(f.layers).unwrap_or(base.layers),
        seed,
        ..base
    };
    let corpus_cfg = CorpusConfig {
        episodes: a.episodes.or(f.episodes).unwrap_or(CorpusConfig::default().episodes),
        seed,
        ..Default::default()
    };
    let corpus = generate(&corpus_cfg)?;
    log::info!("corpus: {} samples", corpus.samples.len());
    let (mut model, _) = train(&corpus.samples, &cfg)?;
    model.reference = Some(corpus.reference);
    model.save(&out)?;
    Ok(serde_json::json!({
        "model": out,
        "samples": corpus.samples.len(),
        "final_loss": model.final_loss,
    })
    .to_string())
}

fn simulate(a: SimulateArgs, f: FileConfig) -> Result<String, CliError> {
    let scenario = required(a.scenario.or(f.scenario), "scenario")?;
    let model_path = required(a.model.or(f.model), "model")?;
    let out = required(a.out.or(f.out), "out")?;
    let mut spec = ScenarioSpec::load(&scenario)?;
    let model = DenoiserModel::load(&model_path)?;
    let overrides = Overrides {
        planner: a.planner.or(f.planner),
        rho_mode: a.rho_mode.or(f.rho_mode),
        gamma: a.gamma.or(f.gamma),
        w_ttc: a.ttc_weight.or(f.ttc_weight),
        v_diff: a.v_diff.or(f.v_diff),
        proposal_offset: a.proposal_offset.or(f.proposal_offset),
        no_regularization: a.no_regularization || f.no_regularization.unwrap_or(false),
    };
    overrides.apply(&mut spec)?;
    let base = SimConfig::default();
    let cfg = SimConfig {
        num_samples: a.samples.or(f.samples).unwrap_or(base.num_samples),
        max_duration: a.duration.or(f.duration),
        seed: a.seed.or(f.seed).or(env_seed()?),
        use_proposals: !(a.no_proposals || f.no_proposals.unwrap_or(false)),
        ..base
    };
    let log = run(&spec, &cfg, &model)?;
    log.save(&out)?;
    let svg = a.svg.or(f.svg);
    if let Some(svg) = &svg {
        write_file(svg, &render_svg(&log, &spec.map))?;
    }
    let hit = log.ego_adversary_collision();
    Ok(serde_json::json!({
        "log": out,
        "svg": svg,
        "steps": log.steps.len() - 1,
        "termination": log.termination,
        "collision_time": hit.map(|c| c.time),
        "events": log.events.len(),
    })
    .to_string())
}

fn sweep_cmd(a: SweepArgs, f: FileConfig) -> Result<String, CliError> {
    let spec_path = required(a.spec.or(f.spec), "spec")?;
    let model_path = required(a.model.or(f.model), "model")?;
    let out = required(a.out.or(f.out), "out")?;
    let text = std::fs::read_to_string(&spec_path).map_err(|e| CliError::Invalid(format!("{}: {e}", spec_path.display())))?;
    let mut spec: SweepSpec = serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", spec_path.display())))?;
    if spec.seeds.is_empty() {
        spec.seeds = vec![f.seed.or(env_seed()?).unwrap_or(0)];
    }
    let base = spec_path.parent().unwrap_or(Path::new("."));
    let model = DenoiserModel::load(&model_path)?;
    let result = run_sweep(&spec, base, &model)?;
    write_file(&out, &result.to_csv())?;
    if let Some(dir) = a.log_dir.or(f.log_dir) {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
        for c in &result.cells {
            let name = format!("{}-{}-{}.jsonl", c.scenario, c.value, c.seed);
            c.log.save(&dir.join(name))?;
        }
    }
    Ok(serde_json::json!({ "csv": out, "rows": result.row_count() }).to_string())
}

/// Realism reference from a histogram JSON or a model file carrying one.
pub fn load_reference(path: &Path) -> Result<DrivingProfileHistogram, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    if let Ok(h) = serde_json::from_str::<DrivingProfileHistogram>(&text) {
        return Ok(h);
    }
    let model = DenoiserModel::from_json(&text)?;
    model
        .reference
        .ok_or_else(|| CliError::Invalid(format!("{} has no realism reference", path.display())))
}

/// Loads every `*.jsonl` log in `dir`, sorted by file name.
pub fn load_logs(dir: &Path) -> Result<Vec<SimLog>, CliError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    paths.iter().map(|p| SimLog::load(p).map_err(CliError::from)).collect()
}

fn evaluate(a: EvaluateArgs, f: FileConfig) -> Result<String, CliError> {
    let dir = required(a.logs.or(f.logs), "logs")?;
    let out = required(a.out.or(f.out), "out")?;
    let logs = load_logs(&dir)?;
    let reference = a.reference.or(f.reference).map(|p| load_reference(&p)).transpose()?;
    let defaults = GuidanceConfig::default();
    let lt = a.lambda_t.or(f.lambda_t).unwrap_or(defaults.lambda_t);
    let ld = a.lambda_d.or(f.lambda_d).unwrap_or(defaults.lambda_d);
    let mut report = aggregate(&logs, reference.as_ref(), lt, ld)?;
    if let (Some(mode), Some(r)) = (a.profile_mode.or(f.profile_mode), &reference) {
        report.realism = Some(DrivingProfileHistogram::from_logs(&logs, mode).distance(r)?);
    }
    let csv = out.with_extension("csv");
    let json = out.with_extension("json");
    write_file(&csv, &report.to_csv())?;
    write_file(&json, &report.to_json()?)?;
    Ok(serde_json::json!({
        "csv": csv,
        "json": json,
        "runs": report.runs,
        "collision_rate": report.collision_rate,
    })
    .to_string())
}
