use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{hex_digest, RunConfig};
use crate::error::{LabError, LabResult};
use crate::io::write_json;

pub const MANIFEST_SCHEMA: &str = "calderon-manifest/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub calderon_lab: String,
    pub calderon_core: String,
}

impl Versions {
    pub fn current() -> Self {
        Self { calderon_lab: env!("CARGO_PKG_VERSION").to_owned(), calderon_core: calderon_core::VERSION.to_owned() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Path relative to the output directory.
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub stage: String,
    pub message: String,
}

/// Record of one command run. The embedded config is enough to repeat it:
/// `calderon <command> --config manifest_<command>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub command: String,
    pub status: String,
    pub config: RunConfig,
    pub config_hash: String,
    pub forward_hash: String,
    pub versions: Versions,
    /// Wall-clock times; the only nondeterministic part of a run.
    pub timings: Vec<Timing>,
    pub outputs: Vec<OutputRecord>,
    pub failures: Vec<FailureRecord>,
}

pub fn manifest_path(dir: &Path, command: &str) -> PathBuf {
    dir.join(format!("manifest_{command}.json"))
}

/// Collects timings, outputs and failures while a command runs.
#[derive(Debug)]
pub struct RunRecorder {
    command: &'static str,
    dir: PathBuf,
    timings: Vec<Timing>,
    outputs: Vec<PathBuf>,
    failures: Vec<FailureRecord>,
}

impl RunRecorder {
    pub fn new(config: &RunConfig, command: &'static str) -> LabResult<Self> {
        let dir = config.output.clone();
        std::fs::create_dir_all(&dir).map_err(|e| LabError::io(&dir, e))?;
        Ok(Self { command, dir, timings: Vec::new(), outputs: Vec::new(), failures: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(Timing { stage: stage.to_owned(), seconds: start.elapsed().as_secs_f64() });
        out
    }

    pub fn record_time(&mut self, stage: &str, seconds: f64) {
        self.timings.push(Timing { stage: stage.to_owned(), seconds });
    }

    pub fn output(&mut self, path: PathBuf) {
        if !self.outputs.contains(&path) {
            self.outputs.push(path);
        }
    }

    pub fn outputs(&mut self, paths: Vec<PathBuf>) {
        for p in paths {
            self.output(p);
        }
    }

    pub fn fail(&mut self, stage: &str, message: impl Into<String>) {
        self.failures.push(FailureRecord { stage: stage.to_owned(), message: message.into() });
    }

    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }

    /// Hashes every output and writes `manifest_<command>.json`.
    pub fn finish(self, config: &RunConfig) -> LabResult<Manifest> {
        let mut outputs = Vec::new();
        for p in &self.outputs {
            let bytes = std::fs::read(p).map_err(|e| LabError::io(p, e))?;
            let file = p.strip_prefix(&self.dir).unwrap_or(p).to_string_lossy().into_owned();
            outputs.push(OutputRecord { file, sha256: hex_digest(&bytes) });
        }
        let manifest = Manifest {
            schema: MANIFEST_SCHEMA.to_owned(),
            command: self.command.to_owned(),
            status: if self.failures.is_empty() { "ok" } else { "failed" }.to_owned(),
            config: config.clone(),
            config_hash: config.hash(),
            forward_hash: config.forward_hash(),
            versions: Versions::current(),
            timings: self.timings,
            outputs,
            failures: self.failures,
        };
        write_json(&manifest_path(&self.dir, self.command), &manifest)?;
        Ok(manifest)
    }
}
