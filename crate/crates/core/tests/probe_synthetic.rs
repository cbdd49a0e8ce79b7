// SPDX-License-Identifier: MIT OR Apache-2.0

use lprobe_core::archive::{ActivationArchive, ArchiveKind, Record, UnitId, UnitSpec};
use lprobe_core::corpus::Member;
use lprobe_core::probe::{record_folds, run_probe, ProbeConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const DIM: usize = 16;

/// Synthetic single-unit archive with `n_pairs` pairs. Good members are
/// shifted by `separation` along the first coordinate.
fn synthetic(n_pairs: usize, separation: f32, seed: u64) -> ActivationArchive {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0f32, 1.0).unwrap();
    let records: Vec<Record> = (0..n_pairs)
        .flat_map(|p| {
            let uid = format!("syn_{p:04}");
            [Record::new(uid.clone(), Member::Good), Record::new(uid, Member::Bad)]
        })
        .collect();
    let mut data = Vec::with_capacity(records.len() * DIM);
    for r in &records {
        let mut row: Vec<f32> = (0..DIM).map(|_| noise.sample(&mut rng)).collect();
        if r.member == Member::Good {
            row[0] += separation;
        }
        data.extend(row);
    }
    let units = vec![UnitSpec { id: UnitId::layer(0), dim: DIM }];
    ActivationArchive::from_data("synthetic", ArchiveKind::Embedding, units, records, data).unwrap()
}

#[test]
fn separable_features_score_one() {
    let a = synthetic(100, 20.0, 1);
    let r = run_probe(&a, UnitId::layer(0), &ProbeConfig::default()).unwrap();
    assert_eq!(r.fold_f1.len(), 10);
    assert_eq!(r.mean_f1, 1.0);
    assert_eq!(r.straddling_pairs, 0);
}

#[test]
fn label_free_features_score_chance() {
    let a = synthetic(100, 0.0, 2);
    let r = run_probe(&a, UnitId::layer(0), &ProbeConfig::default()).unwrap();
    assert!((0.4..=0.6).contains(&r.mean_f1), "mean F1 {}", r.mean_f1);

    let mean: f64 = (0..20u64)
        .map(|seed| {
            let a = synthetic(100, 0.0, 100 + seed);
            let cfg = ProbeConfig { seed, ..ProbeConfig::default() };
            run_probe(&a, UnitId::layer(0), &cfg).unwrap().mean_f1
        })
        .sum::<f64>()
        / 20.0;
    assert!((mean - 0.5).abs() <= 0.05, "mean over seeds {mean}");
}

#[test]
fn reruns_are_identical() {
    let a = synthetic(60, 1.0, 3);
    let cfg = ProbeConfig { seed: 7, ..ProbeConfig::default() };
    let r1 = run_probe(&a, UnitId::layer(0), &cfg).unwrap();
    let r2 = run_probe(&a, UnitId::layer(0), &cfg).unwrap();
    assert_eq!(r1, r2);
}

#[test]
fn record_order_does_not_matter() {
    let a = synthetic(60, 1.0, 4);
    let mut order: Vec<usize> = (0..a.n_records()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(99));
    let records: Vec<Record> = order.iter().map(|&i| a.records[i].clone()).collect();
    let data: Vec<f32> = order.iter().flat_map(|&i| a.features(0, i).to_vec()).collect();
    let b = ActivationArchive::from_data("synthetic", ArchiveKind::Embedding, a.units.clone(), records, data)
        .unwrap();
    let cfg = ProbeConfig::default();
    let ra = run_probe(&a, UnitId::layer(0), &cfg).unwrap();
    let rb = run_probe(&b, UnitId::layer(0), &cfg).unwrap();
    assert_eq!(ra.fold_f1, rb.fold_f1);
}

#[test]
fn pair_members_share_a_fold() {
    let a = synthetic(57, 1.0, 5);
    let folds = record_folds(&a, &ProbeConfig::default()).unwrap();
    for pair in folds.chunks_exact(2) {
        assert_eq!(pair[0], pair[1]);
    }
    let mut sizes = [0usize; 10];
    folds.iter().for_each(|&f| sizes[f] += 1);
    let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
    assert!(hi - lo <= 2, "fold sizes {sizes:?}");
}

#[test]
fn ungrouped_folds_can_split_pairs() {
    let a = synthetic(60, 1.0, 6);
    let cfg = ProbeConfig { group_folds: false, ..ProbeConfig::default() };
    let r = run_probe(&a, UnitId::layer(0), &cfg).unwrap();
    assert!(r.straddling_pairs > 0);
}

#[test]
fn missing_unit_and_bad_config() {
    let a = synthetic(20, 1.0, 7);
    assert!(run_probe(&a, UnitId::layer(3), &ProbeConfig::default()).is_err());
    let cfg = ProbeConfig { n_folds: 1, ..ProbeConfig::default() };
    assert!(run_probe(&a, UnitId::layer(0), &cfg).is_err());
    let cfg = ProbeConfig { n_folds: 30, ..ProbeConfig::default() };
    assert!(run_probe(&a, UnitId::layer(0), &cfg).is_err());
}
