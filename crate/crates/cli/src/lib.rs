//! Configuration, persistence and command-line plumbing for `kglab`.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;

use std::fs;
use std::path::Path;

pub use config::{parse_config, ExperimentConfig};
pub use error::CliError;
pub use manifest::RunManifest;
pub use run::{Experiment, Outcome};

/// Environment variable naming the output directory when `--out` is absent.
pub const OUT_DIR_ENV: &str = "KGLAB_OUT_DIR";

/// Output directory when neither `--out` nor `KGLAB_OUT_DIR` is set.
pub const DEFAULT_OUT_DIR: &str = "kglab-out";

/// Reads and validates the config at `config_path`, runs `what`, and writes
/// `config.json`, the artifacts and `manifest.json` into `out`.
///
/// A failed post-run check still writes everything; it is reported in
/// `RunManifest::failure` with a nonzero `status`.
pub fn execute(what: Experiment, config_path: &Path, out: &Path) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(config_path).map_err(CliError::io(config_path))?;
    let cfg = parse_config(&text)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(out).map_err(CliError::io(out))?;
    let started = manifest::now();
    let echo = out.join("config.json");
    fs::write(&echo, cfg.to_json() + "\n").map_err(CliError::io(&echo))?;
    let outcome = run::run(what, &cfg, base, out)?;
    let mut outputs = vec!["config.json".to_string()];
    outputs.extend(outcome.files);
    let status = match &outcome.failure {
        Some(why) => CliError::Assertion(why.clone()).exit_code(),
        None => 0,
    };
    let m = RunManifest {
        subcommand: what.name().to_string(),
        config_hash: manifest::config_hash(&cfg),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: manifest::now(),
        outputs,
        summary: outcome.summary,
        warnings: outcome.warnings,
        failure: outcome.failure,
        status,
    };
    let path = out.join("manifest.json");
    let json = serde_json::to_string_pretty(&m).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(CliError::io(&path))?;
    Ok(m)
}
