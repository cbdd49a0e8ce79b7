// SPDX-License-Identifier: MIT OR Apache-2.0

//! `report`: summary → csv tables, a json-lines stream, or svg charts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use serde::Serialize;

use lprobe_core::analysis::{LayerCurve, UnitFamily};
use lprobe_core::corpus::Level;

use crate::analyze::{read_summary, ModelSummary, Summary};
use crate::config::{required, Settings};
use crate::error::UsageError;
use crate::manifest::RunManifest;
use crate::svg::{bar_chart, line_chart, scatter_chart, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Csv,
    JsonLines,
    Svg,
}

impl FromStr for ReportFormat {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json-lines" | "jsonl" => Ok(Self::JsonLines),
            "svg" => Ok(Self::Svg),
            other => Err(UsageError(format!("unknown report format {other:?} (csv, json-lines, svg)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(usize),
    Num(f64),
    Bool(bool),
    Empty,
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::Text(s) => s.clone().into(),
            Cell::Int(v) => (*v).into(),
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into),
            Cell::Bool(b) => (*b).into(),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

pub struct Table {
    pub name: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$(Cell::from($v)),*] };
}

fn family_parts(f: UnitFamily) -> (&'static str, Option<usize>) {
    match f {
        UnitFamily::Embedding => ("embedding", None),
        UnitFamily::AttentionConcat => ("attention_concat", None),
        UnitFamily::AttentionHead(h) => ("attention_head", Some(h)),
        UnitFamily::StaticBow => ("static_bow", None),
    }
}

/// Flatten a summary into named tables, in a fixed order.
pub fn tables(summary: &Summary) -> Vec<Table> {
    let mut scores = Vec::new();
    let mut curves = Vec::new();
    let mut depths = Vec::new();
    let mut levels = Vec::new();
    let mut thresholds = Vec::new();
    let mut heads = Vec::new();
    let mut correlations = Vec::new();
    let mut filter = Vec::new();
    for m in &summary.models {
        let name = m.model_name.as_str();
        for s in &m.scores {
            let (fam, head) = family_parts(s.family);
            scores.push(row![name, s.paradigm_id.as_str(), fam, head, s.score, s.capture_depth]);
        }
        for c in &m.curves {
            let (fam, head) = family_parts(c.family);
            for (i, f1) in c.f1_by_layer.iter().enumerate() {
                curves.push(row![name, c.paradigm_id.as_str(), fam, head, c.first_layer + i, *f1]);
            }
        }
        for d in &m.depth_reports {
            depths.push(row![name, d.paradigm_id.as_str(), d.level.as_str(), d.capture_depth, d.mean_complexity]);
        }
        for l in &m.level_table {
            levels.push(row![
                name,
                l.level.as_str(),
                l.n_paradigms,
                l.mean_capture_depth,
                l.mean_score,
                l.mean_complexity
            ]);
        }
        for (level, means) in &m.threshold_depths {
            for (t, d) in summary.thresholds.iter().zip(means) {
                thresholds.push(row![name, level.as_str(), *t, *d]);
            }
        }
        for r in &m.head_rankings {
            for (rank, (head, score)) in r.ranking.iter().enumerate() {
                heads.push(row![name, r.phenomenon.as_str(), rank + 1, *head, *score]);
            }
        }
        let c = &m.complexity;
        correlations.push(row![
            name,
            c.n,
            c.correlation.map(|x| x.r),
            c.correlation.map(|x| x.p),
            c.fit.map(|f| f.slope),
            c.fit.map(|f| f.intercept),
            c.notes.join("; "),
        ]);
        if let (Some(f), Some(b)) = (&m.baseline_filter, &summary.baseline) {
            for p in f.retained.iter().chain(&f.excluded) {
                let status = if f.retained.contains(p) { "retained" } else { "excluded" };
                filter.push(row![name, p.as_str(), b.scores.get(p).copied(), status]);
            }
        }
    }
    let mut comparisons = Vec::new();
    for c in &summary.comparisons {
        for r in &c.rows {
            let p = r.comparison.as_ref();
            comparisons.push(row![
                c.model_a.as_str(),
                c.model_b.as_str(),
                r.phenomenon.as_str(),
                p.map(|x| x.n_tasks),
                p.map(|x| x.mean_difference),
                p.map(|x| x.t),
                p.map(|x| x.p),
                p.map(|x| x.degenerate_variance),
                p.map(|x| x.test.clone()),
                r.error.clone(),
            ]);
        }
    }
    vec![
        Table {
            name: "scores",
            header: &["model", "paradigm_id", "family", "head", "score", "capture_depth"],
            rows: scores,
        },
        Table {
            name: "curves",
            header: &["model", "paradigm_id", "family", "head", "layer", "f1"],
            rows: curves,
        },
        Table {
            name: "depth_reports",
            header: &["model", "paradigm_id", "level", "capture_depth", "mean_complexity"],
            rows: depths,
        },
        Table {
            name: "levels",
            header: &["model", "level", "n_paradigms", "mean_capture_depth", "mean_score", "mean_complexity"],
            rows: levels,
        },
        Table {
            name: "threshold_depths",
            header: &["model", "level", "threshold", "mean_depth"],
            rows: thresholds,
        },
        Table {
            name: "head_rankings",
            header: &["model", "phenomenon", "rank", "head", "score"],
            rows: heads,
        },
        Table {
            name: "correlations",
            header: &["model", "n", "r", "p", "slope", "intercept", "notes"],
            rows: correlations,
        },
        Table {
            name: "baseline_filter",
            header: &["model", "paradigm_id", "baseline_score", "status"],
            rows: filter,
        },
        Table {
            name: "comparisons",
            header: &[
                "model_a",
                "model_b",
                "phenomenon",
                "n_tasks",
                "mean_difference",
                "t",
                "p",
                "degenerate_variance",
                "test",
                "error",
            ],
            rows: comparisons,
        },
    ]
}

pub fn table_csv(table: &Table) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(table.header)?;
    for r in &table.rows {
        w.write_record(r.iter().map(Cell::to_csv))?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))
}

pub fn json_lines(tables: &[Table]) -> anyhow::Result<String> {
    let mut out = String::new();
    for t in tables {
        for r in &t.rows {
            let mut obj = serde_json::Map::new();
            obj.insert("table".into(), t.name.into());
            for (k, v) in t.header.iter().zip(r) {
                obj.insert((*k).to_string(), v.to_json());
            }
            out.push_str(&serde_json::to_string(&obj)?);
            out.push('\n');
        }
    }
    Ok(out)
}

/// File-name-safe version of an identifier.
pub fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

fn family_label(f: UnitFamily) -> String {
    match family_parts(f) {
        (name, Some(h)) => format!("{name} {h}"),
        (name, None) => name.to_string(),
    }
}

fn curve_points(c: &LayerCurve) -> Vec<(f64, f64)> {
    c.f1_by_layer
        .iter()
        .enumerate()
        .map(|(i, &v)| ((c.first_layer + i) as f64, v))
        .collect()
}

/// All charts for one model, as (file name, svg text).
pub fn model_charts(m: &ModelSummary, thresholds: &[f64]) -> Vec<(String, String)> {
    let model = slug(&m.model_name);
    let mut out = Vec::new();

    let mut by_paradigm: BTreeMap<&str, Vec<&LayerCurve>> = BTreeMap::new();
    for c in &m.curves {
        if !matches!(c.family, UnitFamily::AttentionHead(_)) {
            by_paradigm.entry(&c.paradigm_id).or_default().push(c);
        }
    }
    for (paradigm, curves) in &by_paradigm {
        let series: Vec<Series> = curves
            .iter()
            .map(|c| Series { label: family_label(c.family), points: curve_points(c) })
            .collect();
        let title = format!("{} / {paradigm}", m.model_name);
        out.push((
            format!("layers_{model}_{}.svg", slug(paradigm)),
            line_chart(&title, "layer", "macro-F1", &series, true),
        ));
    }

    // Level and threshold charts summarize several paradigms.
    if m.depth_reports.len() >= 2 {
        let emb: BTreeMap<&str, &LayerCurve> = m
            .curves
            .iter()
            .filter(|c| c.family == UnitFamily::Embedding)
            .map(|c| (c.paradigm_id.as_str(), c))
            .collect();
        let mut series = Vec::new();
        for level in Level::ALL {
            let curves: Vec<&LayerCurve> = m
                .depth_reports
                .iter()
                .filter(|d| d.level == level)
                .filter_map(|d| emb.get(d.paradigm_id.as_str()).copied())
                .collect();
            let Some(first) = curves.first() else { continue };
            let len = first.f1_by_layer.len();
            if curves.iter().any(|c| c.f1_by_layer.len() != len) {
                continue;
            }
            let pts = (0..len)
                .map(|i| {
                    let avg = curves.iter().map(|c| c.f1_by_layer[i]).sum::<f64>() / curves.len() as f64;
                    ((first.first_layer + i) as f64, avg)
                })
                .collect();
            series.push(Series { label: level.as_str().to_string(), points: pts });
        }
        if !series.is_empty() {
            out.push((
                format!("levels_{model}.svg"),
                line_chart(&format!("{} by linguistic level", m.model_name), "layer", "mean macro-F1", &series, true),
            ));
        }
        if !m.threshold_depths.is_empty() {
            let series: Vec<Series> = m
                .threshold_depths
                .iter()
                .map(|(level, depths)| Series {
                    label: level.as_str().to_string(),
                    points: thresholds.iter().copied().zip(depths.iter().copied()).collect(),
                })
                .collect();
            out.push((
                format!("thresholds_{model}.svg"),
                line_chart(&format!("{} capture depth by threshold", m.model_name), "threshold", "mean depth", &series, false),
            ));
        }
    }

    let pts: Vec<(String, f64, f64)> = m
        .depth_reports
        .iter()
        .filter_map(|d| d.mean_complexity.map(|c| (d.paradigm_id.clone(), c, d.capture_depth as f64)))
        .collect();
    if pts.len() >= 2 {
        let fit = m.complexity.fit.map(|f| (f.slope, f.intercept));
        out.push((
            format!("complexity_{model}.svg"),
            scatter_chart(&format!("{}: complexity vs capture depth", m.model_name), "sentence complexity", "capture depth", &pts, fit),
        ));
    }

    for r in &m.head_rankings {
        let bars: Vec<(String, f64)> = r.ranking.iter().map(|(h, s)| (format!("h{h}"), *s)).collect();
        out.push((
            format!("heads_{model}_{}.svg", slug(&r.phenomenon)),
            bar_chart(&format!("{} heads: {}", m.model_name, r.phenomenon), "head (ranked)", "best-layer macro-F1", &bars),
        ));
    }
    out
}

/// Render `summary` in `format` into `out`; returns the written paths.
pub fn write_report(summary: &Summary, format: ReportFormat, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    match format {
        ReportFormat::Csv => {
            for t in tables(summary) {
                files.push((format!("{}.csv", t.name), table_csv(&t)?));
            }
        }
        ReportFormat::JsonLines => files.push(("report.jsonl".into(), json_lines(&tables(summary))?.into_bytes())),
        ReportFormat::Svg => {
            for m in &summary.models {
                files.extend(model_charts(m, &summary.thresholds).into_iter().map(|(n, s)| (n, s.into_bytes())));
            }
        }
    }
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = out.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Serialize)]
struct ReportSnapshot<'a> {
    summary: &'a Path,
    out: &'a Path,
    format: ReportFormat,
}

pub fn cmd_report(settings: &Settings, summary_path: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let out = required(&settings.out, "out", "report")?;
    let format: ReportFormat = settings.format.as_deref().unwrap_or("csv").parse()?;
    let summary = read_summary(summary_path)?;
    let written = write_report(&summary, format, out)?;
    let mut manifest = RunManifest::new("report", &ReportSnapshot { summary: summary_path, out, format })?;
    manifest.add_input(summary_path)?;
    manifest.add_outputs(&written)?;
    manifest.write(out)?;
    Ok(written)
}
