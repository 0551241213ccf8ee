use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const MANIFEST_SCHEMA: &str = "rnnhl.manifest/1";

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub command: String,
    pub tool_version: &'static str,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub config_digest: String,
    pub config: serde_json::Value,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputFile>,
}

/// Collects output files under one directory and writes the manifest last.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<OutputFile>,
    started: Instant,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(OutputFile {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(mut self, command: &str, cfg: &RunConfig, jobs: Option<usize>) -> Result<PathBuf, CliError> {
        let files = std::mem::take(&mut self.files);
        let manifest = RunManifest {
            schema: MANIFEST_SCHEMA,
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            jobs,
            config_digest: cfg.digest(),
            config: serde_json::to_value(cfg).expect("config serializes"),
            wall_time_s: self.started.elapsed().as_secs_f64(),
            outputs: files,
        };
        self.write_json("manifest.json", &manifest)
    }
}
