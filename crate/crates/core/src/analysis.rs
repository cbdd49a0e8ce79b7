// SPDX-License-Identifier: MIT OR Apache-2.0

//! Analytics over probe scores: layer curves, max-over-layer model scores,
//! feature capture depth, baseline filtering, Pearson correlation with
//! t-test p values, OLS fits, threshold-depth curves, head rankings and
//! paired model comparisons.
//!
//! Layer indices count the embedding output as layer 0.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{ComplexityMap, Level, Member, MinimalPair, Phenomenon};
use crate::error::{Error, Result};

/// Which probing units a curve was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family", content = "head")]
pub enum UnitFamily {
    Embedding,
    AttentionConcat,
    AttentionHead(usize),
    StaticBow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCurve {
    pub paradigm_id: String,
    pub family: UnitFamily,
    /// Index 0 is the lowest layer present for the family.
    pub f1_by_layer: Vec<f64>,
    /// Layer number of `f1_by_layer[0]` (0 for embeddings, 1 for attention).
    #[serde(default)]
    pub first_layer: usize,
}

impl LayerCurve {
    pub fn new(paradigm_id: impl Into<String>, family: UnitFamily, f1_by_layer: Vec<f64>) -> Self {
        Self {
            paradigm_id: paradigm_id.into(),
            family,
            f1_by_layer,
            first_layer: 0,
        }
    }
}

/// Highest score over layers.
pub fn model_score(f1_by_layer: &[f64]) -> f64 {
    assert!(!f1_by_layer.is_empty(), "empty layer curve");
    f1_by_layer.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// First index whose score reaches `fraction` of the curve maximum.
pub fn capture_depth(f1_by_layer: &[f64], fraction: f64) -> usize {
    assert!(fraction > 0.0 && fraction <= 1.0, "fraction must be in (0, 1]");
    let threshold = fraction * model_score(f1_by_layer);
    f1_by_layer
        .iter()
        .position(|&v| v >= threshold)
        .expect("the maximum always reaches the threshold")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFilter {
    pub threshold: f64,
    pub retained: BTreeSet<String>,
    pub excluded: BTreeSet<String>,
}

/// Keep paradigms whose baseline score is at most `threshold` (strictly
/// higher scores are excluded).
pub fn filter_by_baseline(
    paradigms: &BTreeMap<String, f64>,
    baseline: &BTreeMap<String, f64>,
    threshold: f64,
) -> Result<BaselineFilter> {
    let mut retained = BTreeSet::new();
    let mut excluded = BTreeSet::new();
    let missing: Vec<&String> = paradigms.keys().filter(|p| !baseline.contains_key(*p)).collect();
    if !missing.is_empty() {
        return Err(Error::Analysis(format!("missing baseline score for {missing:?}")));
    }
    for p in paradigms.keys() {
        if baseline[p] > threshold {
            excluded.insert(p.clone());
        } else {
            retained.insert(p.clone());
        }
    }
    Ok(BaselineFilter {
        threshold,
        retained,
        excluded,
    })
}

/// Two-sided p value of a t statistic with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    statrs::function::beta::beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample Pearson correlation with a two-sided t-test p value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Analysis(format!("pearson: lengths {n} and {}", y.len())));
    }
    if n < 3 {
        return Err(Error::Analysis(format!("pearson needs n >= 3, got {n}")));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Analysis("pearson: zero variance".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(Correlation {
        r,
        p: pearson_p(r, n),
        n,
    })
}

/// p value of a correlation coefficient `r` over `n` points.
pub fn pearson_p(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    t_two_sided_p(r * (df / (1.0 - r * r)).sqrt(), df)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Analysis(format!(
            "linear_fit needs two equal-length series with n >= 2 (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Analysis("linear_fit: x has zero variance".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Capture depth of one paradigm joined with its sentence complexity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    pub paradigm_id: String,
    pub capture_depth: usize,
    /// Absent when no complexity metadata was supplied.
    pub mean_complexity: Option<f64>,
    pub level: Level,
}

/// Mean capture depth per level at every threshold.
pub fn threshold_depth_curve(
    curves_by_level: &BTreeMap<Level, Vec<Vec<f64>>>,
    thresholds: &[f64],
) -> Result<BTreeMap<Level, Vec<f64>>> {
    let mut out = BTreeMap::new();
    for (level, curves) in curves_by_level {
        if curves.is_empty() {
            return Err(Error::Analysis(format!("no curves for level {level}")));
        }
        let depths = thresholds
            .iter()
            .map(|&th| {
                curves.iter().map(|c| capture_depth(c, th) as f64).sum::<f64>() / curves.len() as f64
            })
            .collect();
        out.insert(*level, depths);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadRanking {
    pub phenomenon: String,
    /// `(head, score)`, best first; ties by ascending head index.
    pub ranking: Vec<(usize, f64)>,
}

/// Rank heads by their best score over layers.
pub fn rank_heads(phenomenon: impl Into<String>, per_head: &BTreeMap<usize, Vec<f64>>) -> HeadRanking {
    let mut ranking: Vec<(usize, f64)> =
        per_head.iter().map(|(&h, curve)| (h, model_score(curve))).collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    HeadRanking {
        phenomenon: phenomenon.into(),
        ranking,
    }
}

/// Mean sentence complexity over both members of every pair.
pub fn task_complexity(pairs: &[MinimalPair], meta: &ComplexityMap) -> Result<f64> {
    let mut sum = 0.0;
    let mut missing = Vec::new();
    for pair in pairs {
        for member in [Member::Good, Member::Bad] {
            match meta.get(&(pair.pair_uid.clone(), member)) {
                Some(m) => sum += m.complexity,
                None => missing.push(format!("{}/{}", pair.pair_uid, member.as_str())),
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Analysis(format!(
            "missing complexity metadata for {} sentence(s): {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    if pairs.is_empty() {
        return Err(Error::Analysis("task_complexity: no pairs".into()));
    }
    Ok(sum / (2 * pairs.len()) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub n_tasks: usize,
    /// Mean of `a - b` over tasks.
    pub mean_difference: f64,
    pub t: f64,
    pub p: f64,
    /// Set when every difference is identical and non-zero, so the t
    /// statistic is unbounded; `p` is then reported as 0.
    pub degenerate_variance: bool,
    pub test: String,
}

/// Two-sided paired t-test over per-task scores of two models.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedComparison> {
    if a.len() != b.len() {
        return Err(Error::Analysis(format!("paired test: lengths {} and {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Analysis(format!("paired test needs >= 2 tasks, got {n}")));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let md = mean(&diffs);
    let var = diffs.iter().map(|d| (d - md) * (d - md)).sum::<f64>() / (n - 1) as f64;
    let test = "paired two-sided t".to_string();
    // Differences equal up to rounding count as zero variance.
    if var == 0.0 || var.sqrt() <= 1e-12 * md.abs() {
        let zero = md == 0.0;
        return Ok(PairedComparison {
            n_tasks: n,
            mean_difference: md,
            t: if zero { 0.0 } else { md.signum() * f64::INFINITY },
            p: if zero { 1.0 } else { 0.0 },
            degenerate_variance: !zero,
            test,
        });
    }
    let t = md / (var / n as f64).sqrt();
    Ok(PairedComparison {
        n_tasks: n,
        mean_difference: md,
        t,
        p: t_two_sided_p(t, (n - 1) as f64),
        degenerate_variance: false,
        test,
    })
}

/// Per-phenomenon paired comparison of two models' task scores.
///
/// Tasks present in only one model are ignored; phenomena with fewer than
/// two shared tasks are reported as errors in the returned map.
pub fn compare_models(
    tasks: &BTreeMap<String, Phenomenon>,
    model_a: &BTreeMap<String, f64>,
    model_b: &BTreeMap<String, f64>,
) -> BTreeMap<Phenomenon, std::result::Result<PairedComparison, String>> {
    let mut grouped: BTreeMap<Phenomenon, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (task, phen) in tasks {
        if let (Some(a), Some(b)) = (model_a.get(task), model_b.get(task)) {
            let e = grouped.entry(*phen).or_default();
            e.0.push(*a);
            e.1.push(*b);
        }
    }
    grouped
        .into_iter()
        .map(|(p, (a, b))| (p, paired_t_test(&a, &b).map_err(|e| e.to_string())))
        .collect()
}
