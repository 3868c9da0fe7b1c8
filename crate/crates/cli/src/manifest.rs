//! Run manifest: inputs, seeds, artifacts, and outcome of a pipeline run.
//!
//! Deliberately contains no timestamps or absolute paths, so a rerun with
//! the same seed lists byte-identical artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub master_seed: u64,
    /// Per-stage seeds fanned out from the master seed.
    pub stage_seeds: BTreeMap<String, u64>,
    /// Input descriptions (presets, file paths as given).
    pub inputs: Vec<String>,
    /// Artifact paths relative to the output directory, in creation order.
    pub artifacts: Vec<String>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Manifest {
    pub fn new(master_seed: u64) -> Self {
        Manifest {
            tool: "tct".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            stage_seeds: BTreeMap::new(),
            inputs: Vec::new(),
            artifacts: Vec::new(),
            status: "ok".to_string(),
            failed_stage: None,
            error: None,
        }
    }

    pub fn record_artifact(&mut self, relative: impl Into<String>) {
        self.artifacts.push(relative.into());
    }

    pub fn mark_failed(&mut self, stage: &str, error: &str) {
        self.status = "failed".to_string();
        self.failed_stage = Some(stage.to_string());
        self.error = Some(error.to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}
