mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand};
use vaoi_core::analytic::Population;
use vaoi_core::io::{emit_results, write_output, Format};
use vaoi_core::sim::{Horizon, DEFAULT_UPDATES};
use vaoi_core::Scheme;

use commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "vaoi", version, about = "Version age of coded updates in gossip networks")]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "csv")]
    format: Format,
    /// Record wall-clock time in the metadata block.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form ages (point values or bounds).
    Analytic(AnalyticArgs),
    /// Simulate a configuration file.
    Simulate(SimulateArgs),
    /// Run a preset or study file.
    Sweep(SweepArgs),
    /// Smallest gossip rate at which memory stops paying off.
    CriticalRate(CriticalArgs),
    /// Check a configuration file and describe the network.
    Validate(ValidateArgs),
    /// Event-by-event log of one run.
    Trace(TraceArgs),
}

#[derive(Debug, Args)]
#[group(id = "grid", multiple = true, conflicts_with = "config")]
struct GridArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    lambda_s: Option<f64>,
    #[arg(long)]
    lambda_e: Option<f64>,
}

#[derive(Debug, Args)]
struct AnalyticArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    scheme: Option<Scheme>,
    /// subscriber, nonsubscriber or graph; all populations when omitted.
    #[arg(long)]
    class: Option<Population>,
}

#[derive(Debug, Args)]
#[group(id = "horizon", multiple = false)]
struct HorizonArgs {
    /// Stop at the arrival of update N + 1.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    updates: Option<u64>,
    /// Stop at simulated time T.
    #[arg(long, value_parser = positive_f64)]
    time: Option<f64>,
}

impl HorizonArgs {
    fn resolve(&self, default_updates: u64) -> Horizon {
        match (self.updates, self.time) {
            (_, Some(t)) => Horizon::Time(t),
            (Some(n), None) => Horizon::Updates(n),
            (None, None) => Horizon::Updates(default_updates),
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[command(flatten)]
    horizon: HorizonArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    replications: u64,
}

#[derive(Debug, Args)]
#[group(skip)]
#[command(group(ArgGroup::new("source").required(true).args(["preset", "spec"])))]
struct SweepArgs {
    /// Built-in preset name, or a preset looked up in AOI_PRESET_DIR.
    #[arg(long)]
    preset: Option<String>,
    /// Path to a preset file.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    updates: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    replications: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip simulation; emit analytic columns only.
    #[arg(long)]
    analytic_only: bool,
}

#[derive(Debug, Args)]
struct CriticalArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    lambda_s: f64,
    /// One or more comma-separated margins.
    #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
    epsilon: Vec<f64>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    scheme: Option<Scheme>,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[command(flatten)]
    horizon: HorizonArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(format!("{s} is not a positive number"))
    }
}

/// Default trace length; traces are meant to be read.
const TRACE_UPDATES: u64 = 100;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = match &cli.command {
        Command::Analytic(a) => commands::analytic(a),
        Command::Simulate(a) => commands::simulate(a, a.horizon.resolve(DEFAULT_UPDATES)),
        Command::Sweep(a) => commands::sweep(a),
        Command::CriticalRate(a) => commands::critical_rate(a),
        Command::Validate(a) => commands::validate(a),
        Command::Trace(a) => commands::trace(a, a.horizon.resolve(TRACE_UPDATES)),
    };
    let (mut envelope, failure) = match result {
        Ok(done) => done,
        Err(e) => return report(&e),
    };
    if cli.timing {
        envelope.metadata.elapsed_seconds = Some(started.elapsed().as_secs_f64());
    }
    let text = emit_results(&envelope, cli.format);
    if let Err(e) = write_output(&text, cli.out.as_deref()) {
        return report(&CliError::Other(e.to_string()));
    }
    match failure {
        Some(e) => report(&e),
        None => ExitCode::SUCCESS,
    }
}

fn report(e: &CliError) -> ExitCode {
    eprintln!("vaoi: {e}");
    ExitCode::from(e.code())
}
