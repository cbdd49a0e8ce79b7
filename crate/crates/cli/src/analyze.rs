// SPDX-License-Identifier: MIT OR Apache-2.0

//! `analyze`: probe result files → one `summary.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use lprobe_core::analysis::{
    capture_depth, compare_models, filter_by_baseline, linear_fit, model_score, pearson, rank_heads,
    task_complexity, threshold_depth_curve, BaselineFilter, Correlation, DepthReport, HeadRanking,
    LayerCurve, LinearFit, PairedComparison, UnitFamily,
};
use lprobe_core::archive::ArchiveKind;
use lprobe_core::corpus::{load_complexity, ComplexityMap, Level, ParadigmSet, Phenomenon};

use crate::config::{required, Settings};
use crate::error::DataError;
use crate::inputs::{expand_inputs, load_corpus};
use crate::manifest::RunManifest;
use crate::probe_cmd::{read_probe_file, ProbeFile, RESULTS_SUFFIX};

pub const SUMMARY_FILE: &str = "summary.json";
pub const DEPTH_CONVENTION: &str = "layer 0 is the embedding output; layer l is the output of block l";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub paradigm_id: String,
    pub family: UnitFamily,
    pub score: f64,
    /// Layer number (not curve index).
    pub capture_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: Level,
    pub n_paradigms: usize,
    pub mean_capture_depth: f64,
    pub mean_score: f64,
    pub mean_complexity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityFit {
    pub n: usize,
    pub correlation: Option<Correlation>,
    pub fit: Option<LinearFit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_name: String,
    pub curves: Vec<LayerCurve>,
    pub scores: Vec<ScoreRow>,
    pub baseline_filter: Option<BaselineFilter>,
    /// Embedding-family depths of the retained paradigms.
    pub depth_reports: Vec<DepthReport>,
    pub level_table: Vec<LevelRow>,
    pub complexity: ComplexityFit,
    /// Mean capture depth per level at each of `Summary::thresholds`.
    pub threshold_depths: BTreeMap<Level, Vec<f64>>,
    pub head_rankings: Vec<HeadRanking>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineScores {
    pub model_name: String,
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub phenomenon: Phenomenon,
    pub comparison: Option<PairedComparison>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub model_a: String,
    pub model_b: String,
    /// Scores compared: embedding-family model score per paradigm.
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub depth_convention: String,
    pub fraction: f64,
    pub baseline_threshold: f64,
    pub thresholds: Vec<f64>,
    pub baseline: Option<BaselineScores>,
    pub models: Vec<ModelSummary>,
    pub comparisons: Vec<ModelComparison>,
    /// Per-unit probe failures carried over from the result files.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gaps: Vec<String>,
}

/// Thresholds for the depth-vs-threshold table: 0.50, 0.55, ..., 1.00.
pub fn default_thresholds() -> Vec<f64> {
    (10..=20).map(|i| f64::from(i) / 20.0).collect()
}

fn family_of(kind: ArchiveKind, head: Option<usize>) -> UnitFamily {
    match (kind, head) {
        (ArchiveKind::AttentionHead, Some(h)) => UnitFamily::AttentionHead(h),
        (ArchiveKind::AttentionConcat, _) => UnitFamily::AttentionConcat,
        (ArchiveKind::StaticBow, _) => UnitFamily::StaticBow,
        _ => UnitFamily::Embedding,
    }
}

/// Build layer curves from probe files of one model. Layers with no
/// result (failed units) make the curve invalid, reported as an error.
pub fn build_curves(files: &[&ProbeFile]) -> anyhow::Result<Vec<LayerCurve>> {
    let mut points: BTreeMap<(String, UnitFamily), BTreeMap<usize, f64>> = BTreeMap::new();
    for file in files {
        let paradigm = file
            .paradigm_id
            .clone()
            .ok_or_else(|| DataError(format!("{}: results carry no paradigm id", file.archive)))?;
        for r in &file.results {
            let fam = family_of(file.kind, r.unit.head);
            let prev = points
                .entry((paradigm.clone(), fam))
                .or_default()
                .insert(r.unit.layer, r.mean_f1);
            if prev.is_some() {
                return Err(DataError(format!(
                    "{}: duplicate result for paradigm {paradigm} unit {}",
                    file.model_name, r.unit
                ))
                .into());
            }
        }
    }
    let mut curves = Vec::new();
    for ((paradigm, family), by_layer) in points {
        let first = *by_layer.keys().next().expect("non-empty");
        let last = *by_layer.keys().next_back().expect("non-empty");
        if by_layer.len() != last - first + 1 {
            let missing: Vec<usize> = (first..=last).filter(|l| !by_layer.contains_key(l)).collect();
            return Err(DataError(format!("paradigm {paradigm} {family:?}: no result for layers {missing:?}")).into());
        }
        let mut curve = LayerCurve::new(paradigm, family, by_layer.into_values().collect());
        curve.first_layer = first;
        curves.push(curve);
    }
    Ok(curves)
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Inputs needed beyond the probe results.
pub struct AnalysisInputs<'a> {
    pub corpus: &'a [ParadigmSet],
    pub complexity: Option<&'a ComplexityMap>,
    pub fraction: f64,
    pub baseline_threshold: f64,
    pub thresholds: Vec<f64>,
}

fn summarize_model(
    model_name: &str,
    files: &[&ProbeFile],
    baseline: Option<&BaselineScores>,
    inputs: &AnalysisInputs<'_>,
) -> anyhow::Result<ModelSummary> {
    let curves = build_curves(files)?;
    let by_id: BTreeMap<&str, &ParadigmSet> = inputs.corpus.iter().map(|s| (s.paradigm_id.as_str(), s)).collect();
    let paradigm_set = |id: &str| -> anyhow::Result<&ParadigmSet> {
        by_id
            .get(id)
            .copied()
            .ok_or_else(|| DataError(format!("paradigm {id} (model {model_name}) is not in the corpus")).into())
    };

    let mut scores = Vec::new();
    for c in &curves {
        paradigm_set(&c.paradigm_id)?;
        scores.push(ScoreRow {
            paradigm_id: c.paradigm_id.clone(),
            family: c.family,
            score: model_score(&c.f1_by_layer),
            capture_depth: c.first_layer + capture_depth(&c.f1_by_layer, inputs.fraction),
        });
    }

    let embedding: BTreeMap<&str, &LayerCurve> = curves
        .iter()
        .filter(|c| c.family == UnitFamily::Embedding)
        .map(|c| (c.paradigm_id.as_str(), c))
        .collect();
    let emb_scores: BTreeMap<String, f64> =
        embedding.iter().map(|(p, c)| (p.to_string(), model_score(&c.f1_by_layer))).collect();

    let baseline_filter = match baseline {
        Some(b) if !emb_scores.is_empty() => Some(
            filter_by_baseline(&emb_scores, &b.scores, inputs.baseline_threshold)
                .with_context(|| format!("baseline filter for {model_name}"))?,
        ),
        _ => None,
    };
    let retained: Vec<&str> = match &baseline_filter {
        Some(f) => f.retained.iter().map(String::as_str).collect(),
        None => embedding.keys().copied().collect(),
    };

    let mut depth_reports = Vec::new();
    for p in &retained {
        let set = paradigm_set(p)?;
        let curve = embedding[p];
        let complexity = match inputs.complexity {
            Some(meta) => Some(task_complexity(&set.pairs, meta).with_context(|| format!("paradigm {p}"))?),
            None => None,
        };
        depth_reports.push(DepthReport {
            paradigm_id: p.to_string(),
            capture_depth: curve.first_layer + capture_depth(&curve.f1_by_layer, inputs.fraction),
            mean_complexity: complexity,
            level: set.level(),
        });
    }

    let mut level_table = Vec::new();
    for level in Level::ALL {
        let rows: Vec<&DepthReport> = depth_reports.iter().filter(|d| d.level == level).collect();
        if rows.is_empty() {
            continue;
        }
        level_table.push(LevelRow {
            level,
            n_paradigms: rows.len(),
            mean_capture_depth: mean(rows.iter().map(|d| d.capture_depth as f64)).expect("non-empty"),
            mean_score: mean(rows.iter().map(|d| emb_scores[&d.paradigm_id])).expect("non-empty"),
            mean_complexity: if rows.iter().all(|d| d.mean_complexity.is_some()) {
                mean(rows.iter().filter_map(|d| d.mean_complexity))
            } else {
                None
            },
        });
    }

    let complexity = complexity_fit(&depth_reports);

    let mut by_level: BTreeMap<Level, Vec<Vec<f64>>> = BTreeMap::new();
    for d in &depth_reports {
        by_level.entry(d.level).or_default().push(embedding[d.paradigm_id.as_str()].f1_by_layer.clone());
    }
    let threshold_depths = threshold_depth_curve(&by_level, &inputs.thresholds)?;

    let head_rankings = head_rankings(&curves, &paradigm_set)?;

    Ok(ModelSummary {
        model_name: model_name.to_string(),
        curves,
        scores,
        baseline_filter,
        depth_reports,
        level_table,
        complexity,
        threshold_depths,
        head_rankings,
    })
}

fn complexity_fit(reports: &[DepthReport]) -> ComplexityFit {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter_map(|d| d.mean_complexity.map(|c| (c, d.capture_depth as f64)))
        .collect();
    let mut out = ComplexityFit { n: pts.len(), correlation: None, fit: None, notes: Vec::new() };
    if pts.is_empty() {
        out.notes.push("no complexity metadata".into());
        return out;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    match pearson(&x, &y) {
        Ok(c) => out.correlation = Some(c),
        Err(e) => out.notes.push(format!("correlation: {e}")),
    }
    match linear_fit(&x, &y) {
        Ok(f) => out.fit = Some(f),
        Err(e) => out.notes.push(format!("fit: {e}")),
    }
    out
}

/// Per phenomenon, average each head's curve over the phenomenon's
/// paradigms, then rank heads by the best layer of that mean curve.
fn head_rankings<'a>(
    curves: &[LayerCurve],
    paradigm_set: &dyn Fn(&str) -> anyhow::Result<&'a ParadigmSet>,
) -> anyhow::Result<Vec<HeadRanking>> {
    let mut grouped: BTreeMap<Phenomenon, BTreeMap<usize, Vec<&[f64]>>> = BTreeMap::new();
    for c in curves {
        if let UnitFamily::AttentionHead(h) = c.family {
            let phen = paradigm_set(&c.paradigm_id)?.phenomenon();
            grouped.entry(phen).or_default().entry(h).or_default().push(&c.f1_by_layer);
        }
    }
    let mut out = Vec::new();
    for (phen, heads) in grouped {
        let mut per_head = BTreeMap::new();
        for (h, list) in heads {
            let len = list[0].len();
            if list.iter().any(|c| c.len() != len) {
                return Err(DataError(format!("{}: head {h} curves differ in length", phen.as_str())).into());
            }
            let avg: Vec<f64> = (0..len)
                .map(|i| list.iter().map(|c| c[i]).sum::<f64>() / list.len() as f64)
                .collect();
            per_head.insert(h, avg);
        }
        out.push(rank_heads(phen.as_str(), &per_head));
    }
    Ok(out)
}

/// Run every analysis over already-loaded probe files.
pub fn analyze(files: &[ProbeFile], inputs: &AnalysisInputs<'_>) -> anyhow::Result<Summary> {
    let mut by_model: BTreeMap<&str, Vec<&ProbeFile>> = BTreeMap::new();
    let mut baseline_models: BTreeMap<&str, Vec<&ProbeFile>> = BTreeMap::new();
    let mut gaps = Vec::new();
    for f in files {
        for fail in &f.failures {
            gaps.push(format!("{} {}: {}", f.archive, fail.unit, fail.error));
        }
        if f.kind == ArchiveKind::StaticBow {
            baseline_models.entry(&f.model_name).or_default().push(f);
        } else {
            by_model.entry(&f.model_name).or_default().push(f);
        }
    }
    if baseline_models.len() > 1 {
        let names: Vec<&&str> = baseline_models.keys().collect();
        return Err(DataError(format!("expected one static baseline, found {names:?}")).into());
    }
    let baseline = match baseline_models.into_iter().next() {
        Some((name, bfiles)) => {
            let curves = build_curves(&bfiles)?;
            Some(BaselineScores {
                model_name: name.to_string(),
                scores: curves
                    .iter()
                    .map(|c| (c.paradigm_id.clone(), model_score(&c.f1_by_layer)))
                    .collect(),
            })
        }
        None => None,
    };
    if by_model.is_empty() {
        return Err(DataError("no language-model probe results among the inputs".into()).into());
    }

    let models = by_model
        .iter()
        .map(|(name, fs)| summarize_model(name, fs, baseline.as_ref(), inputs))
        .collect::<anyhow::Result<Vec<_>>>()?;

    let phen_of: BTreeMap<String, Phenomenon> =
        inputs.corpus.iter().map(|s| (s.paradigm_id.clone(), s.phenomenon())).collect();
    let mut comparisons = Vec::new();
    for (i, a) in models.iter().enumerate() {
        for b in &models[i + 1..] {
            let sa = embedding_scores(a);
            let sb = embedding_scores(b);
            if sa.is_empty() || sb.is_empty() {
                continue;
            }
            let rows = compare_models(&phen_of, &sa, &sb)
                .into_iter()
                .map(|(phenomenon, r)| match r {
                    Ok(c) => ComparisonRow { phenomenon, comparison: Some(c), error: None },
                    Err(e) => ComparisonRow { phenomenon, comparison: None, error: Some(e) },
                })
                .collect();
            comparisons.push(ModelComparison { model_a: a.model_name.clone(), model_b: b.model_name.clone(), rows });
        }
    }

    Ok(Summary {
        depth_convention: DEPTH_CONVENTION.to_string(),
        fraction: inputs.fraction,
        baseline_threshold: inputs.baseline_threshold,
        thresholds: inputs.thresholds.clone(),
        baseline,
        models,
        comparisons,
        gaps,
    })
}

fn embedding_scores(m: &ModelSummary) -> BTreeMap<String, f64> {
    m.scores
        .iter()
        .filter(|s| s.family == UnitFamily::Embedding)
        .map(|s| (s.paradigm_id.clone(), s.score))
        .collect()
}

pub fn read_summary(path: &Path) -> anyhow::Result<Summary> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Debug, Serialize)]
struct AnalyzeSnapshot<'a> {
    inputs: &'a [PathBuf],
    corpus: &'a Path,
    complexity: Option<&'a Path>,
    out: &'a Path,
    fraction: f64,
    baseline_threshold: f64,
    thresholds: &'a [f64],
}

pub fn cmd_analyze(settings: &Settings, inputs: &[PathBuf]) -> anyhow::Result<PathBuf> {
    let out = required(&settings.out, "out", "analyze")?;
    let corpus_path = required(&settings.corpus, "corpus", "analyze")?;
    let fraction = settings.fraction()?;
    let files = expand_inputs(inputs, RESULTS_SUFFIX)?;
    let probe_files = files.iter().map(|p| read_probe_file(p)).collect::<anyhow::Result<Vec<_>>>()?;
    let corpus = load_corpus(corpus_path)?;
    let complexity = match &settings.complexity {
        Some(p) => Some(load_complexity(p).with_context(|| format!("loading {}", p.display()))?),
        None => None,
    };
    let analysis_inputs = AnalysisInputs {
        corpus: &corpus,
        complexity: complexity.as_ref(),
        fraction,
        baseline_threshold: settings.baseline_threshold(),
        thresholds: default_thresholds(),
    };
    let summary = analyze(&probe_files, &analysis_inputs)?;

    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let dest = out.join(SUMMARY_FILE);
    std::fs::write(&dest, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("writing {}", dest.display()))?;

    let snapshot = AnalyzeSnapshot {
        inputs,
        corpus: corpus_path,
        complexity: settings.complexity.as_deref(),
        out,
        fraction,
        baseline_threshold: analysis_inputs.baseline_threshold,
        thresholds: &analysis_inputs.thresholds,
    };
    let mut manifest = RunManifest::new("analyze", &snapshot)?;
    for f in &files {
        manifest.add_input(f)?;
    }
    manifest.add_input(corpus_path)?;
    if let Some(p) = &settings.complexity {
        manifest.add_input(p)?;
    }
    manifest.gaps = summary.gaps.clone();
    manifest.add_outputs(std::slice::from_ref(&dest))?;
    manifest.write(out)?;
    let paradigms: BTreeSet<&str> = summary
        .models
        .iter()
        .flat_map(|m| m.curves.iter().map(|c| c.paradigm_id.as_str()))
        .collect();
    log::info!("analyzed {} model(s) over {} paradigm(s)", summary.models.len(), paradigms.len());
    Ok(dest)
}
