//! `polyqubo` command-line entry point.
//!
//! Exit codes: 0 on success, 1 for configuration or input errors, 2 when a
//! solver fails to produce a result.

mod args;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Format, OutputArgs};
use commands::Failure;

/// Default report directory when `--output` is not given.
const OUT_DIR_ENV: &str = "POLYQUBO_OUT_DIR";

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let name = cli.command.name();
    let out = output_args(&cli.command);
    let start = Instant::now();
    let outcome = match commands::run(&cli.command) {
        Ok(o) => o,
        Err(f) => return fail(name, &f),
    };
    let elapsed = start.elapsed().as_secs_f64();

    let mut report = outcome.report;
    if out.timing {
        report["wall_time_s"] = serde_json::json!(elapsed);
    }
    let text = match out.format {
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        Format::Csv => match outcome.csv {
            Some(csv) => csv,
            None => {
                return fail(
                    name,
                    &Failure::Config("this command has no CSV output".into()),
                )
            }
        },
    };
    if let Err(e) = write(name, out, &text) {
        return fail(name, &Failure::Config(e));
    }
    eprintln!("{name}: finished in {elapsed:.3}s");
    match outcome.failure {
        Some(f) => fail(name, &f),
        None => ExitCode::SUCCESS,
    }
}

fn fail(name: &str, f: &Failure) -> ExitCode {
    eprintln!("polyqubo {name}: error: {}", f.message());
    ExitCode::from(f.exit_code() as u8)
}

fn output_args(command: &args::Command) -> &OutputArgs {
    use args::Command::*;
    match command {
        SolvePoly(a) => &a.output,
        SolveLinear(a) => &a.output,
        Regress(a) => &a.output,
        Sweep(a) => &a.output,
        Iterate(a) => &a.output,
    }
}

fn destination(name: &str, out: &OutputArgs) -> Option<PathBuf> {
    if let Some(path) = &out.output {
        return Some(path.clone());
    }
    let dir = std::env::var_os(OUT_DIR_ENV)?;
    let ext = match out.format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    Some(PathBuf::from(dir).join(format!("{name}.{ext}")))
}

fn write(name: &str, out: &OutputArgs, text: &str) -> Result<(), String> {
    match destination(name, out) {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)
                    .map_err(|e| format!("{}: {e}", parent.display()))?;
            }
            std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
            eprintln!("{name}: wrote {}", path.display());
            Ok(())
        }
    }
}
