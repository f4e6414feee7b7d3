mod commands;
mod config;
mod input;
mod output;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use seqdisc::online::write_trace_jsonl;

use crate::config::{Cli, Command, OutputArgs, RunConfig};
use crate::output::Report;

/// Environment variable capping the worker thread count.
const THREADS_VAR: &str = "SEQDISC_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_VAR}={value} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, bytes).map_err(|e| io_error(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    // Accept either a bare config or a whole report carrying one.
    let config = value.get("config").cloned().unwrap_or(value);
    serde_json::from_value(config).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Side outputs requested next to the main report.
#[derive(Default)]
struct Extras<'a> {
    dump_povm: Option<&'a Path>,
    trace: Option<&'a Path>,
}

fn execute(config: &RunConfig, extras: &Extras) -> Result<Report, CliError> {
    Ok(match config {
        RunConfig::Bounds(args) => Report::Bounds(commands::bounds(args)?),
        RunConfig::Povm(args) => {
            let report = commands::povm(args)?;
            if let Some(path) = extras.dump_povm {
                let mut bytes = serde_json::to_vec_pretty(&report.povm)
                    .map_err(|e| CliError::Io(e.to_string()))?;
                bytes.push(b'\n');
                write_bytes(Some(path), &bytes)?;
            }
            Report::Povm(report)
        }
        RunConfig::Chain(args) => Report::Chain(commands::chain(args)?),
        RunConfig::Simulate(args) => {
            let (report, traces) = commands::simulate_run(args, extras.trace.is_some())?;
            if let Some(path) = extras.trace {
                let file = File::create(path).map_err(|e| io_error(path, e))?;
                let mut writer = BufWriter::new(file);
                write_trace_jsonl(&traces, &mut writer)
                    .and_then(|_| writer.flush())
                    .map_err(|e| io_error(path, e))?;
            }
            Report::Simulate(report)
        }
        RunConfig::Scan(args) => Report::Scan(commands::scan(args)?),
    })
}

fn run(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    let (config, output, extras) = match &cli.command {
        Command::Bounds { config, output } => (RunConfig::Bounds(config.clone()), output, Extras::default()),
        Command::Povm { config, dump_povm, output } => (
            RunConfig::Povm(config.clone()),
            output,
            Extras { dump_povm: dump_povm.as_deref(), trace: None },
        ),
        Command::Chain { config, output } => (RunConfig::Chain(config.clone()), output, Extras::default()),
        Command::Simulate { config, trace, output } => (
            RunConfig::Simulate(config.clone()),
            output,
            Extras { dump_povm: None, trace: trace.as_deref() },
        ),
        Command::Scan { config, output } => (RunConfig::Scan(config.clone()), output, Extras::default()),
        Command::Run { config, output } => (load_config(config)?, output, Extras::default()),
    };
    let report = execute(&config, &extras)?;
    emit(&report, &config, output)?;
    Ok(match &report {
        Report::Simulate(r) => r.misidentified(),
        _ => false,
    })
}

fn emit(report: &Report, config: &RunConfig, output: &OutputArgs) -> Result<(), CliError> {
    let format = output.format.unwrap_or_else(|| config.default_format());
    let bytes = report.render(format)?;
    write_bytes(output.out.as_deref(), &bytes)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("error: zero-error run misidentified a state");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
