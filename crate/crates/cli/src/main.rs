//! `stylemlc` command-line entry point.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let file = config::FileConfig::load(cli.global.config.as_deref())?;
    let workers = cli.global.workers.or(file.workers);
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| anyhow::anyhow!("cannot set up {n} workers: {e}"))?;
    }
    let seed = cli.global.seed.or(file.seed);
    match cli.command {
        Command::Synth(a) => commands::synth(a, &file, seed),
        Command::Featurize(a) => commands::featurize(a),
        Command::Augment(a) => commands::augment(a, &file, seed),
        Command::Train(a) => commands::train(a, &file, seed),
        Command::Eval(a) => commands::eval(a, &file),
    }
}
