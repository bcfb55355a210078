//! Run manifests: config snapshot, input/output digests, stage summaries.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn sha256_file(path: &Path) -> Result<FileDigest> {
    let mut file = File::open(path).with_context(|| format!("digesting {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    let mut bytes = 0u64;
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        bytes += n as u64;
        hasher.update(&buf[..n]);
    }
    let digest = hasher.finalize();
    let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(FileDigest {
        path: path.display().to_string(),
        bytes,
        sha256,
    })
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a serde_json::Value,
    inputs: &'a [FileDigest],
    outputs: &'a [FileDigest],
    summary: &'a serde_json::Value,
    duration_ms: u128,
}

/// Collects manifest data over a command run; digests are computed when the
/// manifest is written.
pub struct ManifestBuilder {
    started: Instant,
    command: String,
    config: serde_json::Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    summary: serde_json::Value,
}

impl ManifestBuilder {
    pub fn new(command: impl Into<String>) -> Self {
        ManifestBuilder {
            started: Instant::now(),
            command: command.into(),
            config: serde_json::Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
            summary: serde_json::Value::Null,
        }
    }

    pub fn config(&mut self, config: &impl Serialize) {
        self.config = serde_json::to_value(config).unwrap_or(serde_json::Value::Null);
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn summary(&mut self, summary: &impl Serialize) {
        self.summary = serde_json::to_value(summary).unwrap_or(serde_json::Value::Null);
    }

    /// The collected summary, for embedding into an enclosing manifest.
    pub fn into_summary(self) -> serde_json::Value {
        self.summary
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let digest_all = |paths: &[PathBuf]| -> Result<Vec<FileDigest>> {
            paths.iter().map(|p| sha256_file(p)).collect()
        };
        let inputs = digest_all(&self.inputs)?;
        let outputs = digest_all(&self.outputs)?;
        let manifest = RunManifest {
            tool: "lexiscale",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            config: &self.config,
            inputs: &inputs,
            outputs: &outputs,
            summary: &self.summary,
            duration_ms: self.started.elapsed().as_millis(),
        };
        let json = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(path, json + "\n")
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }
}
