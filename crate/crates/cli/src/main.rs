mod args;
mod commands;
mod output;
mod sweep;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{json, Map};

use args::{Cli, Command, Format, Params};
use output::{emit, Failure};

fn default_format(command: &Command) -> Format {
    match command {
        Command::Winding(_) | Command::Poles(_) | Command::Spectrum(_) | Command::Moments(_) => Format::Json,
        _ => Format::Csv,
    }
}

fn load_config(path: &std::path::Path) -> Result<Params, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let flags = cli.command.params().clone();
    let params = match &cli.config {
        Some(path) => flags.or(load_config(path)?),
        None => flags,
    };
    let report = commands::run(&cli.command, &params)?;
    let mut header = Map::new();
    header.insert("command".into(), json!(cli.command.name()));
    header.insert("params".into(), serde_json::to_value(&params).expect("params serialise"));
    header.insert("seed".into(), json!(params.seed.unwrap_or(0)));
    header.insert("version".into(), json!(dissipation::VERSION));
    let text = report.render(header, cli.format.unwrap_or_else(|| default_format(&cli.command)));
    emit(&text, cli.output.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let failure = Failure::Usage(e.to_string().trim().to_string());
            eprintln!("{}", failure.to_json_line());
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json_line());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
