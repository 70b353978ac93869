mod commands;
mod exit;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Probe-trajectory route choice analysis with virtual gates.
#[derive(Debug, Parser)]
#[command(name = "tripgate", version, about)]
struct Cli {
    /// Worker threads for matching and filtering (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus from a scenario spec or a bundled case study.
    Synth(SynthArgs),
    /// Map-match trips onto the network.
    Match(MatchArgs),
    /// Filter trips with a query document.
    Query(QueryArgs),
    /// Filter, match and fold trips into route sets.
    Fold(FoldArgs),
    /// Full analysis: route sets, shares, travel times and hourly counts.
    Report(ReportArgs),
    /// Correlate probe gate counts with station counts week by week.
    Validate(ValidateArgs),
    /// Compare the route shares of two reports.
    Compare(CompareArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scenario spec (JSON).
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    pub spec: Option<PathBuf>,
    /// Bundled case study.
    #[arg(long, value_parser = ["case-study-1", "case-study-2"])]
    pub fixture: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    /// Network GeoJSON or fixture name.
    #[arg(long)]
    pub network: String,
    #[arg(long)]
    pub trips: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub candidate_radius_m: Option<f64>,
    #[arg(long)]
    pub emission_sigma_m: Option<f64>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub trips: PathBuf,
    #[arg(long)]
    pub query: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the document's time zone.
    #[arg(long)]
    pub tz: Option<String>,
}

#[derive(Debug, Args)]
pub struct FoldArgs {
    #[arg(long)]
    pub network: String,
    #[arg(long)]
    pub trips: PathBuf,
    #[arg(long)]
    pub query: PathBuf,
    /// Pre-matched paths; trips are matched on the fly otherwise.
    #[arg(long)]
    pub matched: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the document's fold threshold.
    #[arg(long)]
    pub theta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub fold: FoldArgs,
    #[arg(long)]
    pub tz: Option<String>,
    /// Local bin starts (HH:MM) for the detour rate; repeatable.
    #[arg(long = "detour-bin", requires = "compliant")]
    pub detour_bins: Vec<String>,
    /// Route labels that do not count as detours; repeatable.
    #[arg(long)]
    pub compliant: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub trips: PathBuf,
    #[arg(long)]
    pub counts: PathBuf,
    #[arg(long)]
    pub station: String,
    /// Gate JSON `{"gate_id", "line"}`.
    #[arg(long, conflicts_with = "segment", required_unless_present = "segment")]
    pub gate: Option<PathBuf>,
    /// Build the gate across this segment instead.
    #[arg(long, requires = "network")]
    pub segment: Option<String>,
    #[arg(long)]
    pub network: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = tripgate::timefmt::DEFAULT_TZ)]
    pub tz: String,
    /// Inclusive class range counted as commercial, e.g. 4-13.
    #[arg(long, default_value = "4-13")]
    pub cmv_classes: String,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Service configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured bind address.
    #[arg(long)]
    pub bind: Option<String>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(exit::UsageError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Match(a) => commands::match_trips(a),
        Command::Query(a) => commands::query(a),
        Command::Fold(a) => commands::fold(a),
        Command::Report(a) => commands::report(a),
        Command::Validate(a) => commands::validate(a),
        Command::Compare(a) => commands::compare(a),
        Command::Serve(a) => commands::serve(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code(&e))
        }
    }
}
