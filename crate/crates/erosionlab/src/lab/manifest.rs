//! Run manifests: everything needed to attribute and reproduce a run.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::MetricsRecord;
use crate::error::{Error, Result};
use crate::lab::config::ExperimentConfig;

pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let canonical =
        serde_json::to_string(config).map_err(|e| Error::Serialize(e.to_string()))?;
    let digest = Sha256::digest(canonical.as_bytes());
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub metrics: MetricsRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub software_version: String,
    pub stages: Vec<StageRecord>,
    pub wall_clock_seconds: f64,
    pub status: String,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig) -> Result<RunManifest> {
        Ok(RunManifest {
            config: config.clone(),
            config_hash: config_hash(config)?,
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            stages: Vec::new(),
            wall_clock_seconds: 0.0,
            status: "running".to_string(),
        })
    }

    pub fn record(&mut self, stage: impl Into<String>, metrics: MetricsRecord) {
        self.stages.push(StageRecord {
            stage: stage.into(),
            metrics,
        });
    }

    pub fn finish(&mut self, started: Instant, status: &str) {
        self.wall_clock_seconds = started.elapsed().as_secs_f64();
        self.status = status.to_string();
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
