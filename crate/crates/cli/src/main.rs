//! `suspense`: benchmark ranges, match scoring and trend tables from the command line.

mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

/// Relative input paths are looked up under this directory when it is set.
pub const DATA_DIR_ENV: &str = "SUSPENSE_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "suspense", version, about = "Suspense and surprise of football matches")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    /// More log output (-v, -vv).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a grid of scoring rates; write the grid, heatmap and benchmark range.
    Benchmark(BenchmarkArgs),
    /// Simulate matches for one pair of scoring rates.
    Simulate(SimulateArgs),
    /// Calibrate rates from odds and compute suspense and surprise per match.
    Score(ScoreArgs),
    /// Fit scoring rates to odds only.
    Calibrate(CalibrateArgs),
    /// Descriptive tables, benchmark tests and trend regressions over scored matches.
    Trends(TrendsArgs),
    /// Estimate per-league minute weights from a matches file.
    Weights(WeightsArgs),
}

#[derive(Debug, Args)]
struct WeightArgs {
    /// Weights CSV (league,minute,weight); default is the bundled profile.
    #[arg(long, conflicts_with = "uniform")]
    weights: Option<PathBuf>,

    /// League to take from --weights when it holds several.
    #[arg(long, requires = "weights")]
    league: Option<String>,

    /// Spread scoring evenly over the 90 minutes.
    #[arg(long)]
    uniform: bool,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda_min: f64,
    #[arg(long, default_value_t = 5.0)]
    lambda_max: f64,
    /// Simulated matches per rate pair.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u32).range(1..))]
    matches: u32,
    #[arg(long, default_value_t = 0.5)]
    lambda_low: f64,
    #[arg(long, default_value_t = 2.5)]
    lambda_high: f64,
    /// Simulate (home, away) and (away, home) separately.
    #[arg(long)]
    ordered: bool,
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    home: f64,
    #[arg(long)]
    away: f64,
    #[arg(long, default_value_t = 1_000, value_parser = clap::value_parser!(u32).range(1..))]
    matches: u32,
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineKind {
    Analytic,
    Mc,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Matches CSV (match_id,league,season,date,home,away,events).
    #[arg(long)]
    matches: PathBuf,
    /// Odds CSV (match_id,odds_h,odds_d,odds_a,threshold,over,under).
    #[arg(long)]
    odds: PathBuf,
    /// Weights CSV; default estimates one profile per league from --matches.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EngineKind::Analytic)]
    engine: EngineKind,
    /// Rollouts per minute for --engine mc.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u32).range(1..))]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    odds: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrendsArgs {
    /// Excitement CSV written by `score`.
    #[arg(long)]
    excitement: PathBuf,
    /// Keep only these leagues (repeat or comma-separate).
    #[arg(long, value_delimiter = ',')]
    league: Vec<String>,
    /// Teams with their own level and season slope.
    #[arg(long, value_delimiter = ',')]
    top_teams: Vec<String>,
    /// Season coded as zero; default is the earliest season.
    #[arg(long)]
    base_season: Option<i32>,
    /// benchmark_range.csv from `benchmark`; computed from the bundled weights when absent.
    #[arg(long)]
    range: Option<PathBuf>,
    /// Seed for the computed benchmark range.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct WeightsArgs {
    #[arg(long, required_unless_present = "reference")]
    matches: Option<PathBuf>,
    /// Write the bundled profile instead.
    #[arg(long, conflicts_with = "matches")]
    reference: bool,
    #[arg(long)]
    out: PathBuf,
}

/// Bad invocation detected after parsing, e.g. a missing input file.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Resolves an input path against the data directory and checks it exists.
pub fn input(path: &Path) -> Result<PathBuf, UsageError> {
    let resolved = match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    };
    if resolved.is_file() {
        Ok(resolved)
    } else {
        Err(UsageError(format!("input file {} not found", resolved.display())))
    }
}

/// `# suspense <version> seed=<seed> <command> --flag=value ...`, every flag of
/// the command including defaults, minus the thread count and output directory.
fn provenance(name: &str, sub: &ArgMatches, seed: Option<u64>) -> String {
    let cmd = Cli::command();
    let def = cmd.find_subcommand(name).expect("known subcommand");
    let mut parts = vec![
        env!("CARGO_PKG_NAME").trim_end_matches("-cli").to_string(),
        env!("CARGO_PKG_VERSION").to_string(),
        format!("seed={}", seed.map_or("none".to_string(), |s| s.to_string())),
        name.to_string(),
    ];
    for arg in def.get_arguments() {
        let id = arg.get_id().as_str();
        if matches!(id, "threads" | "verbose" | "out" | "help" | "version") {
            continue;
        }
        let Ok(Some(raw)) = sub.try_get_raw(id) else { continue };
        let values: Vec<String> = raw.map(|v: &std::ffi::OsStr| v.to_string_lossy().into_owned()).collect();
        if values.is_empty() {
            continue;
        }
        parts.push(format!("--{}={}", arg.get_long().unwrap_or(id), values.join(",")));
    }
    parts.join(" ")
}

fn run(args: impl IntoIterator<Item = impl Into<OsString> + Clone>) -> ExitCode {
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let cli = Cli::from_arg_matches(&matches).expect("matches come from the same definition");
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();

    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.into()).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }

    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let seed = match &cli.command {
        Command::Benchmark(a) => Some(a.seed),
        Command::Simulate(a) => Some(a.seed),
        Command::Score(a) => Some(a.seed),
        Command::Trends(a) => Some(a.seed),
        Command::Calibrate(_) | Command::Weights(_) => None,
    };
    let prov = provenance(name, sub, seed);

    let result = match &cli.command {
        Command::Benchmark(a) => commands::benchmark(a, &prov),
        Command::Simulate(a) => commands::simulate(a, &prov),
        Command::Score(a) => commands::score(a, &prov),
        Command::Calibrate(a) => commands::calibrate(a, &prov),
        Command::Trends(a) => commands::trends(a, &prov),
        Command::Weights(a) => commands::weights(a, &prov),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    run(std::env::args_os())
}
