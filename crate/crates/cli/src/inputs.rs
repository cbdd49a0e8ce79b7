// SPDX-License-Identifier: MIT OR Apache-2.0

//! Input discovery and hashing helpers.

use std::collections::BTreeSet;
use std::fs::File;
use std::io;
use std::path::{Path, PathBuf};

use anyhow::Context;
use sha2::{Digest, Sha256};

use lprobe_core::corpus::{load_blimp, ParadigmSet};

use crate::error::DataError;

/// Expand each path: files are kept, directories contribute their direct
/// children whose names end with `suffix`. The result is sorted.
pub fn expand_inputs(paths: &[PathBuf], suffix: &str) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = BTreeSet::new();
    for p in paths {
        if p.is_dir() {
            let entries = std::fs::read_dir(p).with_context(|| format!("listing {}", p.display()))?;
            for entry in entries {
                let path = entry?.path();
                let matches = path
                    .file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.ends_with(suffix));
                if matches && path.is_file() {
                    out.insert(path);
                }
            }
        } else if p.is_file() {
            out.insert(p.clone());
        } else {
            return Err(DataError(format!("input {} does not exist", p.display())).into());
        }
    }
    if out.is_empty() {
        return Err(DataError(format!("no *{suffix} inputs found in {paths:?}")).into());
    }
    Ok(out.into_iter().collect())
}

/// Load one paradigm file or every `.jsonl` file of a directory, sorted
/// by paradigm id.
pub fn load_corpus(path: &Path) -> anyhow::Result<Vec<ParadigmSet>> {
    let files = expand_inputs(&[path.to_path_buf()], ".jsonl")?;
    let mut sets = Vec::with_capacity(files.len());
    for f in &files {
        sets.push(load_blimp(f).with_context(|| format!("loading corpus {}", f.display()))?);
    }
    sets.sort_by(|a, b| a.paradigm_id.cmp(&b.paradigm_id));
    for w in sets.windows(2) {
        if w[0].paradigm_id == w[1].paradigm_id {
            return Err(DataError(format!(
                "paradigm {} appears in both {} and {}",
                w[0].paradigm_id,
                w[0].source_path.display(),
                w[1].source_path.display()
            ))
            .into());
        }
    }
    Ok(sets)
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let mut file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    io::copy(&mut file, &mut hasher).with_context(|| format!("hashing {}", path.display()))?;
    Ok(format!("{:x}", hasher.finalize()))
}

/// Hash `path`, or every regular file directly inside it when it is a
/// directory. Keys are display paths.
pub fn checksum_entries(path: &Path) -> anyhow::Result<Vec<(String, String)>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<io::Result<_>>()?;
        files.retain(|p| p.is_file());
        files.sort();
        files
            .iter()
            .map(|f| Ok((f.display().to_string(), sha256_file(f)?)))
            .collect()
    } else {
        Ok(vec![(path.display().to_string(), sha256_file(path)?)])
    }
}

pub fn thread_pool(jobs: usize) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("starting worker pool")
}

/// File name with `suffix` removed: `foo.embedding.lpa` → `foo.embedding`.
pub fn strip_suffix(path: &Path, suffix: &str) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("input");
    name.strip_suffix(suffix).unwrap_or(name).to_string()
}
