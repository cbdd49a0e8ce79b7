// SPDX-License-Identifier: MIT OR Apache-2.0

//! The decoder: pair-grouped k-fold cross-validated L2 logistic regression
//! over archive features, scored by macro-F1.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::archive::{ActivationArchive, ArchiveKind, UnitId};
use crate::corpus::Member;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub n_folds: usize,
    pub seed: u64,
    pub l2_lambda: f64,
    /// Stop when the gradient max-norm falls to this value.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub standardize: bool,
    /// Keep both members of a pair in the same fold.
    pub group_folds: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            n_folds: 10,
            seed: 0,
            l2_lambda: 1.0,
            tolerance: 1e-6,
            max_iterations: 1000,
            standardize: true,
            group_folds: true,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_folds < 2 {
            return Err(Error::Probe(format!("n_folds must be >= 2, got {}", self.n_folds)));
        }
        if !self.l2_lambda.is_finite() || self.l2_lambda < 0.0 {
            return Err(Error::Probe(format!("l2_lambda must be non-negative, got {}", self.l2_lambda)));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Probe(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Probe("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Fold index per pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    folds: BTreeMap<String, usize>,
    n_folds: usize,
}

impl FoldAssignment {
    pub fn fold_of(&self, pair_uid: &str) -> Option<usize> {
        self.folds.get(pair_uid).copied()
    }

    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in self.folds.values() {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.folds.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

fn seeded_round_robin<T: Ord + Clone>(mut keys: Vec<T>, n_folds: usize, seed: u64) -> Vec<(T, usize)> {
    keys.sort();
    keys.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    keys.shuffle(&mut rng);
    keys.into_iter()
        .enumerate()
        .map(|(i, k)| (k, i % n_folds))
        .collect()
}

/// Seeded shuffle of the (sorted, de-duplicated) pair ids followed by
/// round-robin assignment. Independent of the input order.
pub fn assign_folds(pair_uids: &[String], config: &ProbeConfig) -> Result<FoldAssignment> {
    config.validate()?;
    let keys: Vec<String> = pair_uids.to_vec();
    let unique: HashSet<&String> = pair_uids.iter().collect();
    if unique.len() < config.n_folds {
        return Err(Error::Probe(format!(
            "{} pairs cannot fill {} folds",
            unique.len(),
            config.n_folds
        )));
    }
    let folds = seeded_round_robin(keys, config.n_folds, config.seed)
        .into_iter()
        .collect();
    Ok(FoldAssignment {
        folds,
        n_folds: config.n_folds,
    })
}

/// Fold index per archive record: grouped by pair (default) or per
/// sentence when `group_folds` is off.
pub fn record_folds(archive: &ActivationArchive, config: &ProbeConfig) -> Result<Vec<usize>> {
    if config.group_folds {
        let uids: Vec<String> = archive.records.iter().map(|r| r.pair_uid.clone()).collect();
        let fa = assign_folds(&uids, config)?;
        Ok(archive
            .records
            .iter()
            .map(|r| fa.fold_of(&r.pair_uid).expect("every uid assigned"))
            .collect())
    } else {
        config.validate()?;
        let keys: Vec<(String, Member)> = archive
            .records
            .iter()
            .map(|r| (r.pair_uid.clone(), r.member))
            .collect();
        if keys.len() < config.n_folds {
            return Err(Error::Probe(format!(
                "{} records cannot fill {} folds",
                keys.len(),
                config.n_folds
            )));
        }
        let map: BTreeMap<(String, Member), usize> =
            seeded_round_robin(keys, config.n_folds, config.seed).into_iter().collect();
        Ok(archive
            .records
            .iter()
            .map(|r| map[&(r.pair_uid.clone(), r.member)])
            .collect())
    }
}

/// Dense row-major matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }
}

/// z-score every column with statistics from `train`; columns whose train
/// standard deviation is below 1e-12 become 0 in both sets.
pub fn standardize_features(train: &Matrix, eval: &Matrix) -> (Matrix, Matrix) {
    assert_eq!(train.cols, eval.cols, "feature dimensions differ");
    let d = train.cols;
    let n = train.rows as f64;
    let mut mean = vec![0f64; d];
    for row in train.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0f64; d];
    for row in train.iter_rows() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale: Vec<f64> = var
        .iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd < 1e-12 {
                0.0
            } else {
                1.0 / sd
            }
        })
        .collect();
    let apply = |m: &Matrix| {
        let mut data = m.data.clone();
        for row in data.chunks_exact_mut(d.max(1)) {
            for ((v, mu), sc) in row.iter_mut().zip(&mean).zip(&scale) {
                *v = (*v - mu) * sc;
            }
        }
        Matrix::new(m.rows, d, data)
    };
    (apply(train), apply(eval))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.bias
    }

    pub fn negated(&self) -> Self {
        Self {
            weights: self.weights.iter().map(|w| -w).collect(),
            bias: -self.bias,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: LogisticModel,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Loss after every accepted iteration, starting with the initial point.
    pub loss_trace: Vec<f64>,
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Regularized mean logistic loss and its gradient at `params = [w..., b]`:
/// `mean(log(1 + exp(-s_i (x_i·w + b)))) + λ/(2n) ‖w‖²`, `s_i = ±1`.
pub fn logistic_objective(x: &Matrix, y: &[u8], lambda: f64, params: &[f64]) -> (f64, Vec<f64>) {
    let d = x.cols;
    let n = x.rows as f64;
    let (w, b) = params.split_at(d);
    let b = b[0];
    let mut loss = 0.0;
    let mut grad = vec![0f64; d + 1];
    for (row, &label) in x.iter_rows().zip(y) {
        let s = if label == 1 { 1.0 } else { -1.0 };
        let m = row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b;
        loss += softplus(-s * m);
        let c = -s * sigmoid(-s * m);
        for (g, v) in grad[..d].iter_mut().zip(row) {
            *g += c * v;
        }
        grad[d] += c;
    }
    let reg: f64 = w.iter().map(|v| v * v).sum();
    loss = loss / n + lambda / (2.0 * n) * reg;
    for (g, wv) in grad[..d].iter_mut().zip(w) {
        *g = *g / n + lambda / n * wv;
    }
    grad[d] /= n;
    (loss, grad)
}

fn dotf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

const LBFGS_MEMORY: usize = 10;

/// Fit the regularized logistic model from zero initialization with
/// L-BFGS and Armijo backtracking.
pub fn train_logistic(x: &Matrix, y: &[u8], config: &ProbeConfig) -> Result<TrainOutcome> {
    if x.rows != y.len() {
        return Err(Error::Probe(format!("{} rows but {} labels", x.rows, y.len())));
    }
    if x.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Probe("non-finite feature value".into()));
    }
    let positives = y.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::Probe("training data contains a single class".into()));
    }
    let lambda = config.l2_lambda;
    let dim = x.cols + 1;
    let mut params = vec![0f64; dim];
    let (mut loss, mut grad) = logistic_objective(x, y, lambda, &params);
    let mut history: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> =
        std::collections::VecDeque::new();
    let mut loss_trace = vec![loss];
    let mut iterations = 0;
    let mut converged = max_abs(&grad) <= config.tolerance;

    while !converged && iterations < config.max_iterations {
        // two-loop recursion
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, yv, rho) in history.iter().rev() {
            let a = rho * dotf(s, &q);
            q.iter_mut().zip(yv).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = history
            .back()
            .map_or(1.0 / max_abs(&grad).max(1.0), |(s, yv, _)| dotf(s, yv) / dotf(yv, yv));
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, yv, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dotf(yv, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dotf(&grad, &dir);
        if slope.is_nan() || slope >= 0.0 {
            history.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = dotf(&grad, &dir);
        }

        let mut step = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = params.iter().zip(&dir).map(|(p, d)| p + step * d).collect();
            let (tl, tg) = logistic_objective(x, y, lambda, &trial);
            if tl.is_finite() && tl <= loss + 1e-4 * step * slope {
                break Some((trial, tl, tg));
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        let Some((next, next_loss, next_grad)) = accepted else {
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        };
        let s: Vec<f64> = next.iter().zip(&params).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dotf(&s, &yv);
        if sy > 1e-16 * dotf(&yv, &yv).sqrt() * dotf(&s, &s).sqrt() && sy > 0.0 {
            if history.len() == LBFGS_MEMORY {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        params = next;
        loss = next_loss;
        grad = next_grad;
        iterations += 1;
        loss_trace.push(loss);
        converged = max_abs(&grad) <= config.tolerance;
    }
    if !converged {
        log::debug!(
            "logistic solver stopped after {iterations} iterations, gradient {:.3e}",
            max_abs(&grad)
        );
    }
    let bias = params.pop().expect("bias entry");
    Ok(TrainOutcome {
        model: LogisticModel {
            weights: params,
            bias,
        },
        loss,
        iterations,
        converged,
        loss_trace,
    })
}

/// Label 1 iff `w·x + b >= 0`.
pub fn predict(model: &LogisticModel, x: &Matrix) -> Vec<u8> {
    x.iter_rows().map(|row| u8::from(model.score(row) >= 0.0)).collect()
}

/// Unweighted mean of the two per-class F1 scores. A class absent from
/// both predictions and truth scores 1; present in truth but never
/// predicted (or vice versa) scores 0.
pub fn macro_f1(predicted: &[u8], actual: &[u8]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != actual.len() {
        return Err(Error::Probe(format!(
            "macro_f1 needs equal non-empty inputs, got {} and {}",
            predicted.len(),
            actual.len()
        )));
    }
    let class_f1 = |c: u8| {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fneg = 0usize;
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p == c, a == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                (false, false) => {}
            }
        }
        if tp + fp + fneg == 0 {
            1.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
        }
    };
    Ok((class_f1(0) + class_f1(1)) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub model_name: String,
    pub kind: ArchiveKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paradigm_id: Option<String>,
    pub unit: UnitId,
    pub fold_f1: Vec<f64>,
    pub mean_f1: f64,
    pub fold_converged: Vec<bool>,
    /// Pairs whose members ended up on both sides of a split (0 when grouped).
    pub straddling_pairs: usize,
    pub config: ProbeConfig,
    pub archive_sha256: String,
}

fn unit_rows(archive: &ActivationArchive, unit: usize, records: &[usize]) -> Matrix {
    let dim = archive.units[unit].dim;
    let mut data = Vec::with_capacity(records.len() * dim);
    for &r in records {
        data.extend(archive.features(unit, r).iter().map(|&v| f64::from(v)));
    }
    Matrix::new(records.len(), dim, data)
}

/// Cross-validated macro-F1 for one unit, with a precomputed checksum.
pub fn run_probe_with_checksum(
    archive: &ActivationArchive,
    unit: UnitId,
    config: &ProbeConfig,
    archive_sha256: &str,
) -> Result<ProbeResult> {
    config.validate()?;
    let ui = archive
        .unit_index(unit)
        .ok_or_else(|| Error::Probe(format!("unit {unit} not in archive")))?;
    let folds = record_folds(archive, config)?;

    // Canonical record order so results do not depend on archive order.
    let mut order: Vec<usize> = (0..archive.n_records()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&archive.records[a], &archive.records[b]);
        (&ra.pair_uid, ra.member).cmp(&(&rb.pair_uid, rb.member))
    });

    let mut fold_f1 = Vec::with_capacity(config.n_folds);
    let mut fold_converged = Vec::with_capacity(config.n_folds);
    let mut straddling = HashSet::new();
    for fold in 0..config.n_folds {
        let (held, train): (Vec<usize>, Vec<usize>) =
            order.iter().partition(|&&r| folds[r] == fold);
        let held_pairs: HashSet<&str> =
            held.iter().map(|&r| archive.records[r].pair_uid.as_str()).collect();
        for &r in &train {
            let uid = archive.records[r].pair_uid.as_str();
            if held_pairs.contains(uid) {
                straddling.insert(uid.to_string());
            }
        }
        if config.group_folds && !straddling.is_empty() {
            return Err(Error::Fold {
                fold,
                source: Box::new(Error::Probe(format!(
                    "pair leakage across the split: {:?}",
                    straddling.iter().next()
                ))),
            });
        }
        let train_x = unit_rows(archive, ui, &train);
        let held_x = unit_rows(archive, ui, &held);
        let (train_x, held_x) = if config.standardize {
            standardize_features(&train_x, &held_x)
        } else {
            (train_x, held_x)
        };
        let train_y: Vec<u8> = train.iter().map(|&r| archive.records[r].label).collect();
        let held_y: Vec<u8> = held.iter().map(|&r| archive.records[r].label).collect();
        let fit = train_logistic(&train_x, &train_y, config).map_err(|e| Error::Fold {
            fold,
            source: Box::new(e),
        })?;
        let pred = predict(&fit.model, &held_x);
        let f1 = macro_f1(&pred, &held_y).map_err(|e| Error::Fold {
            fold,
            source: Box::new(e),
        })?;
        fold_f1.push(f1);
        fold_converged.push(fit.converged);
    }
    let mean_f1 = fold_f1.iter().sum::<f64>() / fold_f1.len() as f64;
    Ok(ProbeResult {
        model_name: archive.model_name.clone(),
        kind: archive.kind,
        paradigm_id: archive.paradigm_id.clone(),
        unit,
        fold_f1,
        mean_f1,
        fold_converged,
        straddling_pairs: straddling.len(),
        config: config.clone(),
        archive_sha256: archive_sha256.to_string(),
    })
}

pub fn run_probe(archive: &ActivationArchive, unit: UnitId, config: &ProbeConfig) -> Result<ProbeResult> {
    let checksum = archive.checksum()?;
    run_probe_with_checksum(archive, unit, config, &checksum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i:04}")).collect()
    }

    #[test]
    fn ten_pairs_ten_folds() {
        let fa = assign_folds(&uids(10), &ProbeConfig::default()).unwrap();
        assert_eq!(fa.fold_sizes(), vec![1; 10]);
    }

    #[test]
    fn folds_deterministic_and_balanced() {
        let cfg = ProbeConfig::default();
        let a = assign_folds(&uids(1000), &cfg).unwrap();
        let mut rev = uids(1000);
        rev.reverse();
        assert_eq!(a, assign_folds(&rev, &cfg).unwrap());
        assert_eq!(a.fold_sizes(), vec![100; 10]);
        let other = assign_folds(&uids(1000), &ProbeConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, other);
        let b = assign_folds(&uids(13), &ProbeConfig::default()).unwrap();
        let sizes = b.fold_sizes();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn too_few_pairs() {
        assert!(assign_folds(&uids(9), &ProbeConfig::default()).is_err());
        let cfg = ProbeConfig { n_folds: 1, ..Default::default() };
        assert!(assign_folds(&uids(9), &cfg).is_err());
    }

    #[test]
    fn standardize_rules() {
        let train = Matrix::from_rows(&[vec![5.0, -1.0], vec![5.0, 1.0]]);
        let eval = Matrix::from_rows(&[vec![7.0, 3.0]]);
        let (t, e) = standardize_features(&train, &eval);
        assert_eq!(t.row(0), &[0.0, -1.0]);
        assert_eq!(t.row(1), &[0.0, 1.0]);
        assert_eq!(e.row(0), &[0.0, 3.0]);
    }

    #[test]
    fn separated_1d_data() {
        let x = Matrix::new(4, 1, vec![-10.0, -9.0, 9.0, 10.0]);
        let cfg = ProbeConfig { l2_lambda: 1e-3, ..Default::default() };
        let fit = train_logistic(&x, &[0, 0, 1, 1], &cfg).unwrap();
        assert!(fit.model.weights[0] > 0.0);
        let boundary = -fit.model.bias / fit.model.weights[0];
        assert!(boundary.abs() < 1.0, "{boundary}");
    }

    #[test]
    fn heavy_regularization_limit() {
        let x = Matrix::new(4, 1, vec![-2.0, -1.0, 1.0, 3.0]);
        let cfg = ProbeConfig { l2_lambda: 1e9, ..Default::default() };
        let fit = train_logistic(&x, &[0, 1, 0, 1], &cfg).unwrap();
        assert!(fit.model.weights[0].abs() < 1e-6);
        assert!(fit.model.bias.abs() < 1e-5);
        let fit = train_logistic(&x, &[0, 1, 1, 1], &cfg).unwrap();
        assert!((fit.model.bias - 3f64.ln()).abs() < 1e-4, "{}", fit.model.bias);
    }

    #[test]
    fn single_class_is_an_error() {
        let x = Matrix::new(2, 1, vec![1.0, 2.0]);
        assert!(train_logistic(&x, &[1, 1], &ProbeConfig::default()).is_err());
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let x = Matrix::new(4, 2, vec![1.0, 0.3, -1.0, 0.2, 0.5, -0.7, -0.2, 0.9]);
        let cfg = ProbeConfig { max_iterations: 1, tolerance: 1e-14, ..Default::default() };
        let fit = train_logistic(&x, &[1, 0, 1, 0], &cfg).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 1);
        assert!(fit.loss < 2f64.ln());
    }

    #[test]
    fn predict_ties_and_negation() {
        let m = LogisticModel { weights: vec![1.0, -1.0], bias: 0.0 };
        let x = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 0.0], vec![0.0, 3.0]]);
        assert_eq!(predict(&m, &x), vec![1, 1, 0]);
        assert_eq!(predict(&m.negated(), &x), vec![1, 0, 1]);
    }

    #[test]
    fn macro_f1_examples() {
        assert_eq!(macro_f1(&[1, 0, 1, 0], &[1, 0, 1, 0]).unwrap(), 1.0);
        let f = macro_f1(&[1, 1, 1, 1], &[1, 0, 1, 0]).unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(macro_f1(&[1, 1], &[1, 1]).unwrap(), 1.0);
        assert!(macro_f1(&[], &[]).is_err());
        assert!(macro_f1(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn macro_f1_hand_confusion_matrix() {
        // actual:    1 1 1 1 1 0 0 0 0 0
        // predicted: 1 1 1 0 0 1 0 0 0 0
        // class 1: tp 3, fp 1, fn 2 -> 6/9; class 0: tp 4, fp 2, fn 1 -> 8/11
        let actual = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        let pred = [1, 1, 1, 0, 0, 1, 0, 0, 0, 0];
        let expected = (6.0 / 9.0 + 8.0 / 11.0) / 2.0;
        assert!((macro_f1(&pred, &actual).unwrap() - expected).abs() < 1e-15);
    }
}
