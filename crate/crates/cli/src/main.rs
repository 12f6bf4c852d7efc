mod args;
mod commands;
mod error;
mod manifest;

use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;

use args::{Cli, Command};
use error::{CliError, CliResult};
use manifest::{RunManifest, SCHEMA_VERSION};

fn config_of<T: Serialize>(name: &str, args: &T) -> CliResult<(String, serde_json::Value)> {
    Ok((name.to_owned(), serde_json::to_value(args)?))
}

fn run(cli: &Cli) -> CliResult<()> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} worker threads: {e}", cli.threads)))?;
    let threads = pool.current_num_threads();
    let ((subcommand, config), report) = pool.install(|| -> CliResult<_> {
        Ok(match &cli.command {
            Command::Generate(a) => (config_of("generate", a)?, commands::generate_cmd(a)?),
            Command::Estimate(a) => (config_of("estimate", a)?, commands::estimate_cmd(a)?),
            Command::Calibrate(a) => (config_of("calibrate", a)?, commands::calibrate_cmd(a)?),
            Command::Benchmark(a) => (config_of("benchmark", a)?, commands::benchmark_cmd(a)?),
            Command::Pdf(a) => (config_of("pdf", a)?, commands::pdf_cmd(a)?),
            Command::Embed(a) => (config_of("embed", a)?, commands::embed_cmd(a)?),
            Command::Stsep(a) => (config_of("stsep", a)?, commands::stsep_cmd(a)?),
            Command::Profile(a) => (config_of("profile", a)?, commands::profile_cmd(a)?),
        })
    })?;
    if let Some(path) = &report.manifest_path {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand,
            config,
            seeds: report.seeds,
            inputs: report.inputs,
            threads,
            duration_seconds: start.elapsed().as_secs_f64(),
            resolved: report.resolved,
        }
        .write(path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
