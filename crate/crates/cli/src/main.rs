//! `ddq`: train the dialogue-policy variants, evaluate and chat with
//! trained policies, compare human-eval logs, and export metrics tables.

mod commands;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ddq", version, about = "Dyna-Q dialogue-policy learning with a quality-gated world model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one or more agent variants and write metrics + checkpoints.
    Train(commands::train::TrainArgs),
    /// Greedy evaluation of a policy checkpoint against the user simulator.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Interactive human-as-user session with a trained policy.
    Chat(commands::chat::ChatArgs),
    /// Two-sample permutation test over success/fail logs.
    Compare(commands::compare::CompareArgs),
    /// Re-render metrics tables from a saved experiment.
    Export(commands::export::ExportArgs),
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Train(args) => commands::train::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Chat(args) => commands::chat::run(args),
        Command::Compare(args) => commands::compare::run(args),
        Command::Export(args) => commands::export::run(args),
    }
}
