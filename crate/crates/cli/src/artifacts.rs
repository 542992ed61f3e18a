//! Writers for run outputs. JSON artifacts carry the seed and resolved
//! configuration inline; every other file gets a `<name>.manifest.json`
//! sidecar with its SHA-256.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub struct Recorder<'a> {
    pub config: &'a RunConfig,
    pub command: &'a str,
}

#[derive(Serialize)]
struct JsonArtifact<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    config: &'a RunConfig,
    result: &'a T,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    file: String,
    sha256: String,
    command: &'a str,
    seed: u64,
    config: &'a RunConfig,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

impl Recorder<'_> {
    pub fn json<T: Serialize>(&self, path: &Path, result: &T) -> CliResult<()> {
        let artifact = JsonArtifact {
            command: self.command,
            seed: self.config.seed,
            config: self.config,
            result,
        };
        let mut text = serde_json::to_string_pretty(&artifact)?;
        text.push('\n');
        write_bytes(path, text.as_bytes())
    }

    /// Writes `bytes` to `path` together with its sidecar manifest.
    pub fn file(&self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        write_bytes(path, bytes)?;
        let sidecar = Sidecar {
            file: path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            sha256: sha256_hex(bytes),
            command: self.command,
            seed: self.config.seed,
            config: self.config,
        };
        let mut text = serde_json::to_string_pretty(&sidecar)?;
        text.push('\n');
        write_bytes(&sidecar_path(path), text.as_bytes())
    }
}
