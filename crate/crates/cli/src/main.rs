use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod bounds;
mod evaluate;
mod inputs;
mod preprocess;
mod run;

#[derive(Parser, Debug)]
#[command(name = "aimsynth", version, about = "Differentially private synthetic tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a mechanism and write synthetic data, a trace, and a manifest.
    Run(run::RunArgs),
    /// Confidence bounds on workload error from a trace.
    Bounds(bounds::BoundsArgs),
    /// Workload error of synthetic data or noisy answers.
    Evaluate(evaluate::EvaluateArgs),
    /// Discretize a raw table and derive its domain file.
    Preprocess(preprocess::PreprocessArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run::run(args),
        Command::Bounds(args) => bounds::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::Preprocess(args) => preprocess::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
