use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod load;

use commands::Failure;

#[derive(Parser)]
#[command(name = "ttrecon", version, about = "Time-triggered schedule reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a schedule from the models and write it with its recovery log.
    Schedule(ScheduleArgs),
    /// Apply context events to a schedule and write the recovered schedule.
    Recover(RecoverArgs),
    /// Check a schedule against the models.
    Validate(ValidateArgs),
    /// Run the scaling benchmark and emit CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Task table (CSV: task_id,parents,children,wcet,message_size).
    #[arg(long)]
    tasks: PathBuf,
    /// Message table (CSV: tx,rx,size); synthesized from the task table if absent.
    #[arg(long)]
    messages: Option<PathBuf>,
    /// Platform file (ES:, ROUTES:, optional ROUTERS:, BANDWIDTH:, FAILED:).
    #[arg(long)]
    platform: PathBuf,
}

#[derive(Args)]
struct ScheduleArgs {
    #[command(flatten)]
    models: ModelArgs,
    /// External priorities (TEMPORAL: / SPATIAL: sections).
    #[arg(long)]
    priorities: Option<PathBuf>,
    /// Mode table (CSV: mode,wcet_mult,active_mult,idle_mult,profile).
    #[arg(long)]
    mode_table: Option<PathBuf>,
    /// Evaluation profile; also applies the first mode of the table that selects it.
    #[arg(long)]
    profile: Option<String>,
    /// Schedule output; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recovery log output.
    #[arg(long)]
    out_log: Option<PathBuf>,
}

#[derive(Args)]
struct RecoverArgs {
    #[command(flatten)]
    models: ModelArgs,
    /// Schedule currently in force.
    #[arg(long)]
    schedule: PathBuf,
    /// Recovery log written alongside that schedule.
    #[arg(long)]
    log: PathBuf,
    /// Context events (CSV: time,kind,payload).
    #[arg(long)]
    context: PathBuf,
    #[arg(long)]
    priorities: Option<PathBuf>,
    #[arg(long)]
    mode_table: Option<PathBuf>,
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    out_log: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    models: ModelArgs,
    #[arg(long)]
    schedule: PathBuf,
    /// Context events to apply to the models before checking.
    #[arg(long)]
    context: Option<PathBuf>,
    #[arg(long)]
    mode_table: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated task counts.
    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 15, 30, 50, 100])]
    counts: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 13)]
    workers: usize,
    /// Restrict to one profile.
    #[arg(long)]
    profile: Option<String>,
    /// CSV output; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Schedule(a) => commands::schedule(a),
        Command::Recover(a) => commands::recover(a),
        Command::Validate(a) => commands::validate(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Load(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(n)) => {
            eprintln!("error: {n} safety violation(s)");
            ExitCode::from(2)
        }
    }
}
