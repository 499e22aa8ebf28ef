mod args;
mod commands;
mod report;

use std::io;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use graphmark::extract::with_workers;

use args::Cli;
use report::{emit, Context, RunReport};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("graphmark: error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Runs the command and prints its report; Ok(false) means "nothing found".
fn run(cli: &Cli) -> anyhow::Result<bool> {
    let g = &cli.global;
    if g.workers == Some(0) {
        anyhow::bail!("--workers must be at least 1");
    }
    let seed = g.seed.unwrap_or_else(rand::random);
    let start = Instant::now();
    let mut ctx = Context::new(seed);
    let outcome = with_workers(g.workers, || commands::run(&cli.command, &mut ctx))??;
    let report = RunReport {
        command: cli.command.name().to_string(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        workers: g.workers,
        parameters: serde_json::to_value(&cli.command)?,
        input_digests: ctx.digests,
        timing_ms: start.elapsed().as_secs_f64() * 1e3,
        result: outcome.result,
    };
    emit(&report, outcome.rows.as_deref(), g.output, g.pretty, io::stdout().lock())?;
    Ok(outcome.found)
}
