//! Experiment runner: TOML configs in, reproducible result directories out.

pub mod config;
pub mod error;
pub mod output;
pub mod plotdata;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::{parse_config, ExperimentConfig, LoadedConfig, Overrides};
pub use error::{CliError, CliResult};

/// Loads and validates a config, returning its hash.
pub fn validate(config: &Path, overrides: &Overrides) -> CliResult<String> {
    Ok(LoadedConfig::load(config, overrides)?.hash())
}

/// Runs an experiment and writes its result directory, which is returned.
/// Without an `out` setting results go next to the config, in a directory
/// named after it.
pub fn run(config: &Path, overrides: &Overrides) -> CliResult<PathBuf> {
    let loaded = LoadedConfig::load(config, overrides)?;
    let dir = match &loaded.config.out {
        Some(out) if overrides.out.is_some() => out.clone(),
        Some(out) => loaded.base_dir.join(out),
        None => config.with_extension("results"),
    };
    let result = run::run_experiment(&loaded)?;
    output::write_run(&dir, &loaded, &result)?;
    Ok(dir)
}
