// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::inputs::{checksum_entries, sha256_file};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance record written next to the outputs of every command. Only
/// `timestamp` varies between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    /// sha256 per input file.
    pub inputs: BTreeMap<String, String>,
    /// sha256 per output file.
    pub outputs: BTreeMap<String, String>,
    /// Failures that did not abort the run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gaps: Vec<String>,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize) -> anyhow::Result<Self> {
        Ok(Self {
            command: command.to_string(),
            config: serde_json::to_value(config).context("serializing config snapshot")?,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            gaps: Vec::new(),
            tool_version: TOOL_VERSION.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        })
    }

    pub fn add_input(&mut self, path: &Path) -> anyhow::Result<()> {
        for (k, v) in checksum_entries(path)? {
            self.inputs.insert(k, v);
        }
        Ok(())
    }

    pub fn add_outputs(&mut self, paths: &[PathBuf]) -> anyhow::Result<()> {
        for p in paths {
            self.outputs.insert(p.display().to_string(), sha256_file(p)?);
        }
        Ok(())
    }

    /// Write as `<out_dir>/<command>.manifest.json`.
    pub fn write(&self, out_dir: &Path) -> anyhow::Result<PathBuf> {
        let path = out_dir.join(format!("{}.manifest.json", self.command));
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn read_manifest(path: &Path) -> anyhow::Result<RunManifest> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}
