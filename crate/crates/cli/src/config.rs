// SPDX-License-Identifier: MIT OR Apache-2.0

//! Settings shared by every subcommand. Values come from command-line
//! flags, optionally layered over a TOML file passed with `--config`;
//! the file uses the flag names as keys (`pad-to = 12`).

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};

use lprobe_core::archive::ArchiveKind;
use lprobe_core::probe::ProbeConfig;

use crate::error::UsageError;

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// Model directory (model.safetensors, config.json, vocab.json, merges.txt)
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Corpus file or directory of paradigm .jsonl files
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Word-vector text table for the bag-of-words baseline
    #[arg(long, global = true)]
    pub vectors: Option<PathBuf>,
    /// Sentence complexity metadata (JSON)
    #[arg(long, global = true)]
    pub complexity: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Archive kinds to extract: embedding, attention_head, attention_concat
    #[arg(long, global = true, value_delimiter = ',')]
    pub kinds: Option<Vec<String>>,
    /// Attention padding size (default: longest tokenized sentence of the paradigm)
    #[arg(long, global = true)]
    pub pad_to: Option<usize>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// L2 penalty strength
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true, action = clap::ArgAction::Set)]
    pub standardize: Option<bool>,
    /// Keep both members of a pair in the same fold
    #[arg(long, global = true, action = clap::ArgAction::Set)]
    pub group_folds: Option<bool>,
    /// Capture-depth fraction of the best layer score
    #[arg(long, global = true)]
    pub fraction: Option<f64>,
    /// Paradigms whose baseline score is above this are excluded
    #[arg(long, global = true)]
    pub baseline_threshold: Option<f64>,
    /// Report format: csv, json-lines or svg
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($f:ident),*) => {
        Settings { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Settings {
    pub fn from_toml_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text)
            .map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
    }

    /// Values in `top` win over values in `self`.
    pub fn overlay(self, top: Settings) -> Settings {
        let base = self;
        overlay_fields!(base, top; model, corpus, vectors, complexity, out, kinds, pad_to,
            folds, seed, lambda, standardize, group_folds, fraction, baseline_threshold,
            format, jobs)
    }

    pub fn jobs(&self) -> usize {
        self.jobs.unwrap_or(0)
    }

    pub fn fraction(&self) -> anyhow::Result<f64> {
        let f = self.fraction.unwrap_or(0.99);
        if !(f > 0.0 && f <= 1.0) {
            return Err(UsageError(format!("--fraction must be in (0, 1], got {f}")).into());
        }
        Ok(f)
    }

    pub fn baseline_threshold(&self) -> f64 {
        self.baseline_threshold.unwrap_or(0.9)
    }

    pub fn kinds(&self) -> anyhow::Result<Vec<ArchiveKind>> {
        let Some(names) = &self.kinds else {
            return Ok(vec![ArchiveKind::Embedding]);
        };
        let mut kinds = Vec::new();
        for name in names {
            let kind: ArchiveKind = name.trim().parse().map_err(UsageError)?;
            if kind == ArchiveKind::StaticBow {
                return Err(UsageError("static_bow archives come from `extract-static`".into()).into());
            }
            if !kinds.contains(&kind) {
                kinds.push(kind);
            }
        }
        if kinds.is_empty() {
            return Err(UsageError("--kinds is empty".into()).into());
        }
        Ok(kinds)
    }

    pub fn probe_config(&self) -> anyhow::Result<ProbeConfig> {
        let d = ProbeConfig::default();
        let cfg = ProbeConfig {
            n_folds: self.folds.unwrap_or(d.n_folds),
            seed: self.seed.unwrap_or(d.seed),
            l2_lambda: self.lambda.unwrap_or(d.l2_lambda),
            standardize: self.standardize.unwrap_or(d.standardize),
            group_folds: self.group_folds.unwrap_or(d.group_folds),
            ..d
        };
        cfg.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(cfg)
    }
}

/// Fetch a required path setting or fail with a usage error naming the flag.
pub fn required<'a>(value: &'a Option<PathBuf>, flag: &str, command: &str) -> anyhow::Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| UsageError(format!("`{command}` needs --{flag}")).into())
}
