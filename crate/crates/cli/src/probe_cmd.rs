// SPDX-License-Identifier: MIT OR Apache-2.0

//! `probe`: cross-validated probes for every unit of every archive.

use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use lprobe_core::archive::{read_archive, validate_archive, ActivationArchive, ArchiveKind, UnitId};
use lprobe_core::probe::{run_probe_with_checksum, ProbeConfig, ProbeResult};

use crate::config::{required, Settings};
use crate::error::DataError;
use crate::inputs::{expand_inputs, strip_suffix, thread_pool};
use crate::manifest::RunManifest;

pub const ARCHIVE_SUFFIX: &str = ".lpa";
pub const RESULTS_SUFFIX: &str = ".probe.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitFailure {
    pub unit: UnitId,
    pub error: String,
}

/// All probe results for one archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeFile {
    pub archive: String,
    pub archive_sha256: String,
    pub model_name: String,
    pub kind: ArchiveKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paradigm_id: Option<String>,
    /// Sorted by unit.
    pub results: Vec<ProbeResult>,
    #[serde(default)]
    pub failures: Vec<UnitFailure>,
}

/// Probe every unit of `archive` on the current rayon pool.
pub fn probe_archive(archive: &ActivationArchive, name: &str, config: &ProbeConfig) -> anyhow::Result<ProbeFile> {
    let violations = validate_archive(archive);
    if !violations.is_empty() {
        let listed: Vec<String> = violations.iter().take(5).map(ToString::to_string).collect();
        return Err(DataError(format!(
            "archive {name} fails validation ({} violation(s)): {}",
            violations.len(),
            listed.join("; ")
        ))
        .into());
    }
    let sha = archive.checksum()?;
    let mut units: Vec<UnitId> = archive.units.iter().map(|u| u.id).collect();
    units.sort();
    let outcomes: Vec<(UnitId, lprobe_core::Result<ProbeResult>)> = units
        .par_iter()
        .map(|&u| (u, run_probe_with_checksum(archive, u, config, &sha)))
        .collect();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (unit, outcome) in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => {
                log::warn!("{name}: unit {unit} failed: {e}");
                failures.push(UnitFailure { unit, error: e.to_string() });
            }
        }
    }
    Ok(ProbeFile {
        archive: name.to_string(),
        archive_sha256: sha,
        model_name: archive.model_name.clone(),
        kind: archive.kind,
        paradigm_id: archive.paradigm_id.clone(),
        results,
        failures,
    })
}

pub fn read_probe_file(path: &Path) -> anyhow::Result<ProbeFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Debug, Serialize)]
struct ProbeSnapshot<'a> {
    inputs: &'a [PathBuf],
    out: &'a Path,
    probe: &'a ProbeConfig,
}

pub fn cmd_probe(settings: &Settings, inputs: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let out = required(&settings.out, "out", "probe")?;
    let config = settings.probe_config()?;
    let archives = expand_inputs(inputs, ARCHIVE_SUFFIX)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let pool = thread_pool(settings.jobs())?;

    let mut manifest = RunManifest::new(
        "probe",
        &ProbeSnapshot { inputs, out, probe: &config },
    )?;
    let mut written = Vec::new();
    let mut succeeded = 0usize;
    for path in &archives {
        let archive = read_archive(path).with_context(|| format!("reading {}", path.display()))?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let file = pool.install(|| probe_archive(&archive, &name, &config))?;
        succeeded += file.results.len();
        for f in &file.failures {
            manifest.gaps.push(format!("{name} {}: {}", f.unit, f.error));
        }
        let dest = out.join(format!("{}{RESULTS_SUFFIX}", strip_suffix(path, ARCHIVE_SUFFIX)));
        let text = serde_json::to_string_pretty(&file)?;
        std::fs::write(&dest, text + "\n").with_context(|| format!("writing {}", dest.display()))?;
        log::info!("wrote {} ({} units, {} failed)", dest.display(), file.results.len(), file.failures.len());
        manifest.add_input(path)?;
        written.push(dest);
    }
    manifest.add_outputs(&written)?;
    manifest.write(out)?;
    if succeeded == 0 {
        return Err(DataError("every probe failed; see the manifest gaps".into()).into());
    }
    Ok(written)
}
