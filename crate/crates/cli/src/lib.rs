//! Library side of the `gtrace` command: config handling, sweeps and report
//! writing. `main.rs` only parses flags.

pub mod config;
pub mod error;
pub mod range;
pub mod run;

use std::io::Write;
use std::path::{Path, PathBuf};

pub use config::{Command, ScenarioConfig};
pub use error::CliError;
pub use range::RangeSpec;
pub use run::{run, RunOutput};

pub const DEFAULT_OUT: &str = "gtrace-out";

/// Writes each file through a temporary sibling and renames it into place.
pub fn write_outputs(dir: &Path, output: &RunOutput) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(output.files.len());
    for (name, bytes) in &output.files {
        let target = dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
        }
        tmp.as_file().sync_all()?;
        tmp.persist(&target).map_err(|e| CliError::Io(e.error))?;
        written.push(target);
    }
    Ok(written)
}

/// Runs `cfg` and writes its reports under `cfg.out` (or [`DEFAULT_OUT`]).
pub fn execute(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>, CliError> {
    let output = run(cfg)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    write_outputs(&dir, &output)
}
