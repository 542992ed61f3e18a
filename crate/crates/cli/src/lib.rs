//! Command-line front end: configuration, checkpoints, run artifacts and
//! the `spamxai` subcommands.

pub mod args;
pub mod artifacts;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;

pub use args::{Cli, Command, MethodArg, ModelKind};
pub use config::RunConfig;
pub use error::{CliError, CliResult};

use artifacts::Recorder;

/// Builds the effective configuration from the file and global flags.
pub fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(w) = &cli.workdir {
        config.workdir = w.clone();
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Command::Prepare { dataset: Some(d), .. } = &cli.command {
        config.dataset = d.clone();
    }
    let config = config.resolved();
    config.validate()?;
    Ok(config)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let config = resolve_config(cli)?;
    let name = match &cli.command {
        Command::Prepare { .. } => "prepare",
        Command::Augment { .. } => "augment",
        Command::Train { .. } => "train",
        Command::Evaluate { .. } => "evaluate",
        Command::Explain { .. } => "explain",
        Command::Compare => "compare",
    };
    let rec = Recorder {
        config: &config,
        command: name,
    };
    match &cli.command {
        Command::Prepare { balanced, .. } => commands::prepare(&config, &rec, *balanced),
        Command::Augment { input, output } => {
            commands::augment(&config, &rec, input.as_deref(), output.as_deref())
        }
        Command::Train { model } => commands::train(&config, &rec, *model),
        Command::Evaluate { model, test } => commands::evaluate(&config, &rec, *model, test.as_deref()),
        Command::Explain { model, method, text } => {
            commands::explain(&config, &rec, *model, method.map(Into::into), text)
        }
        Command::Compare => commands::compare(&config, &rec),
    }
}
