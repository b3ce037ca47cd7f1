//! `prosody-probe`: feature extraction, probe training, layer analysis and
//! reporting. Every invocation ends with one JSON summary line on stdout.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::{ConfigArgs, RunConfig, UsageError};

#[derive(Debug, Parser)]
#[command(name = "prosody-probe", version, about = "Probe frozen speech representations for prosody")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cache upstream features and prosody tracks for a manifest.
    Extract(ConfigArgs),
    /// Train and evaluate one task; appends the result to the store.
    Run(ConfigArgs),
    /// Like `run`, always sweeping learning rates and printing the table.
    Sweep(ConfigArgs),
    /// Layerwise contribution of a stored probe.
    Analyze(ConfigArgs),
    /// Early-layer vs best-layer-window feature integration.
    Integrate(ConfigArgs),
    /// Render charts and tables from the stores.
    Report(ConfigArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Extract(_) => "extract",
            Command::Run(_) => "run",
            Command::Sweep(_) => "sweep",
            Command::Analyze(_) => "analyze",
            Command::Integrate(_) => "integrate",
            Command::Report(_) => "report",
        }
    }

    fn args(&self) -> &ConfigArgs {
        match self {
            Command::Extract(a)
            | Command::Run(a)
            | Command::Sweep(a)
            | Command::Analyze(a)
            | Command::Integrate(a)
            | Command::Report(a) => a,
        }
    }
}

fn execute(command: &Command) -> anyhow::Result<commands::Report> {
    let config = RunConfig::resolve(command.args(), |k| std::env::var(k).ok())?;
    match command {
        Command::Extract(_) => commands::extract(&config),
        Command::Run(_) => commands::run(&config, false),
        Command::Sweep(_) => commands::run(&config, true),
        Command::Analyze(_) => commands::analyze(&config),
        Command::Integrate(_) => commands::integrate(&config),
        Command::Report(_) => commands::report(&config),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let name = cli.command.name();
    let (summary, code) = match execute(&cli.command) {
        Ok(report) => {
            let mut fields = report.fields;
            let status = if report.ok { "ok" } else { "failed" };
            fields.insert("command".into(), json!(name));
            fields.insert("status".into(), json!(status));
            (Value::Object(fields), if report.ok { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.downcast_ref::<UsageError>().is_some() { 2 } else { 1 };
            (json!({"command": name, "status": "error", "error": format!("{e:#}")}), code)
        }
    };
    println!("{summary}");
    ExitCode::from(code)
}
