// SPDX-License-Identifier: MIT OR Apache-2.0

//! `extract` and `extract-static`: corpus sentences → activation archives.

use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;

use lprobe_core::archive::{write_archive, ActivationArchive, ArchiveKind, Record, UnitId, UnitSpec};
use lprobe_core::corpus::{Member, ParadigmSet};
use lprobe_core::static_embed::{load_word_vectors, sentence_bow, WordVectorTable};
use lprobe_core::transformer::{load_model, BpeTokenizer, ForwardTrace, Gpt2Model, TokenSequence};
use lprobe_core::{Error, Result};

use crate::config::{required, Settings};
use crate::inputs::{load_corpus, thread_pool};
use crate::manifest::RunManifest;

/// Records of a paradigm in file order, good member first.
pub fn paradigm_records(set: &ParadigmSet) -> Vec<(Record, &str)> {
    set.pairs
        .iter()
        .flat_map(|p| {
            [Member::Good, Member::Bad].map(|m| (Record::new(p.pair_uid.clone(), m), p.sentence(m)))
        })
        .collect()
}

/// Units of one archive kind for a model with `n_layers` blocks.
pub fn unit_specs(kind: ArchiveKind, n_layers: usize, n_heads: usize, d_model: usize, pad_to: usize) -> Vec<UnitSpec> {
    match kind {
        ArchiveKind::Embedding => (0..=n_layers)
            .map(|l| UnitSpec { id: UnitId::layer(l), dim: d_model })
            .collect(),
        ArchiveKind::AttentionHead => (1..=n_layers)
            .flat_map(|l| (0..n_heads).map(move |h| UnitSpec { id: UnitId::head(l, h), dim: pad_to * pad_to }))
            .collect(),
        ArchiveKind::AttentionConcat => (1..=n_layers)
            .map(|l| UnitSpec { id: UnitId::layer(l), dim: n_heads * pad_to * pad_to })
            .collect(),
        ArchiveKind::StaticBow => Vec::new(),
    }
}

fn unit_features(trace: &ForwardTrace, kind: ArchiveKind, unit: UnitId, pad_to: usize) -> Result<Vec<f32>> {
    match (kind, unit.head) {
        (ArchiveKind::Embedding, _) => Ok(trace.sentence_embedding(unit.layer)?.to_vec()),
        (ArchiveKind::AttentionHead, Some(h)) => trace.attention_features(unit.layer, h, pad_to),
        (ArchiveKind::AttentionConcat, _) => trace.concat_attention(unit.layer, pad_to),
        _ => Err(Error::Archive(format!("unit {unit} does not belong to a {kind} archive"))),
    }
}

/// Run the model over every sentence of one paradigm and build one
/// archive per requested kind. `pad_to` defaults to the longest tokenized
/// sentence of the paradigm.
pub fn extract_paradigm(
    model: &Gpt2Model,
    tokenizer: &BpeTokenizer,
    model_name: &str,
    set: &ParadigmSet,
    kinds: &[ArchiveKind],
    pad_to: Option<usize>,
) -> Result<Vec<ActivationArchive>> {
    let records = paradigm_records(set);
    let sequences: Vec<TokenSequence> = records.iter().map(|(_, s)| tokenizer.encode(s)).collect();
    let longest = sequences.iter().map(TokenSequence::len).max().unwrap_or(0);
    let pad = pad_to.unwrap_or(longest).max(1);
    if let Some(p) = pad_to {
        if longest > p {
            return Err(Error::PadTooSmall { len: longest, pad_to: p });
        }
    }

    let cfg = model.config();
    let specs: Vec<(ArchiveKind, Vec<UnitSpec>)> = kinds
        .iter()
        .map(|&k| (k, unit_specs(k, cfg.n_layers, cfg.n_heads, cfg.d_model, pad)))
        .collect();

    // Per record: features for every (kind, unit) in `specs` order.
    let per_record: Vec<Vec<Vec<f32>>> = sequences
        .par_iter()
        .map(|ids| {
            let trace = model.forward(ids)?;
            let mut out = Vec::new();
            for (kind, units) in &specs {
                for u in units {
                    out.push(unit_features(&trace, *kind, u.id, pad)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let recs: Vec<Record> = records.into_iter().map(|(r, _)| r).collect();
    let mut archives = Vec::with_capacity(specs.len());
    let mut column = 0;
    for (kind, units) in specs {
        let n_units = units.len();
        let mut archive = ActivationArchive::new(model_name, kind, units, recs.clone()).with_paradigm(&set.paradigm_id);
        for u in 0..n_units {
            for (r, feats) in per_record.iter().enumerate() {
                archive.features_mut(u, r).copy_from_slice(&feats[column + u]);
            }
        }
        column += n_units;
        archives.push(archive);
    }
    Ok(archives)
}

/// Mean bag-of-words vector per sentence; returns the archive and the
/// mean token coverage.
pub fn static_archive(table: &WordVectorTable, model_name: &str, set: &ParadigmSet) -> (ActivationArchive, f64) {
    let records = paradigm_records(set);
    let units = vec![UnitSpec { id: UnitId::layer(0), dim: table.dim() }];
    let recs: Vec<Record> = records.iter().map(|(r, _)| r.clone()).collect();
    let mut archive = ActivationArchive::new(model_name, ArchiveKind::StaticBow, units, recs).with_paradigm(&set.paradigm_id);
    let mut coverage = 0.0;
    for (i, (_, sentence)) in records.iter().enumerate() {
        let (v, c) = sentence_bow(table, sentence);
        archive.features_mut(0, i).copy_from_slice(&v);
        coverage += c;
    }
    let n = records.len().max(1) as f64;
    (archive, coverage / n)
}

pub fn archive_path(out: &Path, paradigm_id: &str, kind: ArchiveKind) -> PathBuf {
    out.join(format!("{paradigm_id}.{kind}.lpa"))
}

fn dir_name(path: &Path) -> String {
    path.canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| path.display().to_string())
}

#[derive(Debug, Serialize)]
struct ExtractSnapshot<'a> {
    model: &'a Path,
    corpus: &'a Path,
    out: &'a Path,
    kinds: Vec<ArchiveKind>,
    pad_to: Option<usize>,
}

pub fn cmd_extract(settings: &Settings) -> anyhow::Result<Vec<PathBuf>> {
    let model_dir = required(&settings.model, "model", "extract")?;
    let corpus = required(&settings.corpus, "corpus", "extract")?;
    let out = required(&settings.out, "out", "extract")?;
    let kinds = settings.kinds()?;

    let model = load_model(model_dir).with_context(|| format!("loading model from {}", model_dir.display()))?;
    let tokenizer = BpeTokenizer::from_dir(model_dir)?;
    let sets = load_corpus(corpus)?;
    let model_name = dir_name(model_dir);
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let pool = thread_pool(settings.jobs())?;
    let mut written = Vec::new();
    for set in &sets {
        let archives = pool
            .install(|| extract_paradigm(&model, &tokenizer, &model_name, set, &kinds, settings.pad_to))
            .with_context(|| format!("extracting paradigm {}", set.paradigm_id))?;
        for a in &archives {
            let path = archive_path(out, &set.paradigm_id, a.kind);
            write_archive(a, &path)?;
            log::info!("wrote {} ({} units, {} records)", path.display(), a.units.len(), a.n_records());
            written.push(path);
        }
    }

    let snapshot = ExtractSnapshot { model: model_dir, corpus, out, kinds, pad_to: settings.pad_to };
    let mut manifest = RunManifest::new("extract", &snapshot)?;
    manifest.add_input(model_dir)?;
    manifest.add_input(corpus)?;
    manifest.add_outputs(&written)?;
    manifest.write(out)?;
    Ok(written)
}

#[derive(Debug, Serialize)]
struct StaticSnapshot<'a> {
    vectors: &'a Path,
    corpus: &'a Path,
    out: &'a Path,
}

pub fn cmd_extract_static(settings: &Settings) -> anyhow::Result<Vec<PathBuf>> {
    let vectors = required(&settings.vectors, "vectors", "extract-static")?;
    let corpus = required(&settings.corpus, "corpus", "extract-static")?;
    let out = required(&settings.out, "out", "extract-static")?;

    let table = load_word_vectors(vectors).with_context(|| format!("loading {}", vectors.display()))?;
    let sets = load_corpus(corpus)?;
    let stem = vectors.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let model_name = format!("static_bow:{stem}");
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut written = Vec::new();
    for set in &sets {
        let (archive, coverage) = static_archive(&table, &model_name, set);
        log::info!("paradigm {}: vector coverage {coverage:.4}", set.paradigm_id);
        let path = archive_path(out, &set.paradigm_id, ArchiveKind::StaticBow);
        write_archive(&archive, &path)?;
        written.push(path);
    }

    let mut manifest = RunManifest::new("extract-static", &StaticSnapshot { vectors, corpus, out })?;
    manifest.add_input(vectors)?;
    manifest.add_input(corpus)?;
    manifest.add_outputs(&written)?;
    manifest.write(out)?;
    Ok(written)
}
