//! Command-line front end: one subcommand per pipeline stage plus a
//! `pipeline` command chaining them over a directory layout.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod views;

use std::ffi::OsString;
use std::path::Path;

use clap::{CommandFactory, FromArgMatches};

pub use args::{Cli, Command};
pub use config::PipelineConfig;
pub use error::CliError;

pub const THREADS_ENV: &str = "MULTIGO_THREADS";

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Sizes the global worker pool from `MULTIGO_THREADS` (unset or 0 = auto).
pub fn init_threads() -> Result<(), CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Err(_) => return Ok(()),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")))?,
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}

/// Parses `argv`, merges flags over the config file and runs the command.
/// Help and version requests print and succeed.
pub fn run<I, T>(argv: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) if !e.use_stderr() => {
            print!("{}", e.render());
            return Ok(());
        }
        Err(e) => return Err(CliError::Clap(e.render().to_string())),
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Clap(e.render().to_string()))?;
    let (_, sub) = matches.subcommand().expect("a subcommand is required");
    let mut cfg = PipelineConfig::load(cli.command.config_path().map(|p| p.as_path()))?;
    cli.command.overlay(&mut cfg, sub);
    cfg.validate()?;
    match &cli.command {
        Command::Sle(a) => commands::sle(a, &cfg),
        Command::Jla(a) => commands::jla(a, &cfg),
        Command::DepthMask(a) => commands::depth_mask(a, &cfg),
        Command::RenderNormals(a) => commands::render_normals(a, &cfg),
        Command::Remesh(a) => commands::remesh(a, &cfg),
        Command::Render(a) => commands::render(a, &cfg),
        Command::Export(a) => commands::export(a, &cfg),
        Command::Metrics(a) => commands::metrics(a, &cfg),
        Command::ImageMetrics(a) => commands::image_metrics(a, &cfg),
        Command::Pipeline(_) => commands::pipeline(&cfg),
    }
}
