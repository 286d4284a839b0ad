use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rampup_core::config::{ConfigFile, BUILTIN_NAME};
use rampup_core::error::{ConfigError, EnvError, EvalError};
use rampup_core::report::{self, PolicyKind};
use rampup_core::tuning::GridSpec;

/// Plasma ramp-up control: run episodes, tune PI gains, compare baselines.
#[derive(Debug, Parser)]
#[command(name = "rampup", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run episodes of one policy and write trajectories and a summary.
    Run(RunArgs),
    /// Grid-search the PI gains and write the return surface.
    Tune(TuneArgs),
    /// Evaluate open-loop, random and PI policies side by side.
    Compare(CompareArgs),
    /// Print the built-in configuration as JSON.
    Config(ConfigArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Config file, or `iter_hybrid` for the built-in scenario.
    #[arg(long, default_value = BUILTIN_NAME)]
    config: String,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// open_loop, random or pi.
    #[arg(long, value_parser = parse_policy)]
    policy: PolicyKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    episodes: usize,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
    kp_range: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
    ki_range: Option<Vec<f64>>,
    /// Number of k_p values.
    #[arg(long)]
    n: Option<usize>,
    /// Number of k_i values.
    #[arg(long)]
    m: Option<usize>,
    /// Lower clip applied to the J_clipped column.
    #[arg(long)]
    clip_floor: Option<f64>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Defaults to `policies.seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    PolicyKind::parse(s).ok_or_else(|| format!("unknown policy {s:?}; expected open_loop, random or pi"))
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Config(c) | EvalError::Env(EnvError::Config(c)) => CliError::Config(c),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn load_config(spec: &str) -> Result<ConfigFile, CliError> {
    let path = Path::new(spec);
    if spec == BUILTIN_NAME && !path.exists() {
        return Ok(ConfigFile::iter_hybrid());
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(ConfigFile::from_json(&text)?)
}

struct Output {
    dir: PathBuf,
}

impl Output {
    fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(io_err(&path))
    }
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.common.config)?;
    let outcome = report::run_policy(&cfg, args.policy, None, args.episodes, args.seed)?;
    let out = Output::create(&args.common.out)?;
    for (k, traj) in outcome.trajectories.iter().enumerate() {
        out.write(&format!("trajectory_ep{k}.jsonl"), &report::trajectory_jsonl(traj))?;
    }
    out.write("summary.json", &report::to_json_pretty(&outcome.summary))?;
    println!(
        "{}: {} episode(s), mean J = {}",
        outcome.summary.policy,
        outcome.summary.episodes.len(),
        outcome.summary.mean_j
    );
    Ok(())
}

fn range(v: Option<Vec<f64>>, default: (f64, f64)) -> (f64, f64) {
    v.map_or(default, |v| (v[0], v[1]))
}

fn cmd_tune(args: TuneArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.common.config)?;
    let d = &cfg.tuning;
    let grid = GridSpec {
        kp_range: range(args.kp_range, d.kp_range),
        ki_range: range(args.ki_range, d.ki_range),
        n: args.n.unwrap_or(d.n),
        m: args.m.unwrap_or(d.m),
    };
    let outcome = report::run_tune(&cfg, &grid, args.clip_floor)?;
    let out = Output::create(&args.common.out)?;
    out.write("surface.csv", &outcome.csv)?;
    out.write("best_gains.json", &report::to_json_pretty(&outcome.best))?;
    println!(
        "best k_p = {}, k_i = {}, J = {} over {}x{} grid",
        outcome.best.k_p, outcome.best.k_i, outcome.best.j, grid.n, grid.m
    );
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.common.config)?;
    let seed = args.seed.unwrap_or(cfg.policies.seed);
    let outcome = report::run_compare(&cfg, seed)?;
    let out = Output::create(&args.common.out)?;
    out.write("compare.csv", &outcome.table_csv)?;
    out.write("compare_ip.csv", &outcome.ip_csv)?;
    out.write("compare_summary.json", &report::to_json_pretty(&outcome.summary))?;
    if let Some(t) = &outcome.tune {
        out.write("surface.csv", &t.csv)?;
        out.write("best_gains.json", &report::to_json_pretty(&t.best))?;
    }
    print!("{}", outcome.table_csv);
    Ok(())
}

fn cmd_config(args: ConfigArgs) -> Result<(), CliError> {
    let mut text = ConfigFile::iter_hybrid().to_json();
    text.push('\n');
    match args.out {
        Some(path) => fs::write(&path, text).map_err(io_err(&path)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Config(a) => cmd_config(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
