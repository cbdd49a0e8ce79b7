// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use common::{f64s, read_json};
use lprobe_core::probe::{logistic_objective, predict, train_logistic, Matrix, ProbeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matrix(v: &serde_json::Value) -> Matrix {
    let rows: Vec<Vec<f64>> = v.as_array().unwrap().iter().map(f64s).collect();
    Matrix::from_rows(&rows)
}

fn labels(v: &serde_json::Value) -> Vec<u8> {
    v.as_array().unwrap().iter().map(|l| l.as_u64().unwrap() as u8).collect()
}

#[test]
fn matches_reference_optimum() {
    let r = read_json("numeric_reference.json");
    let r = &r["logistic"];
    let x = matrix(&r["x"]);
    let y = labels(&r["y"]);
    let config = ProbeConfig {
        l2_lambda: r["lambda"].as_f64().unwrap(),
        ..ProbeConfig::default()
    };
    let out = train_logistic(&x, &y, &config).unwrap();
    assert!(out.converged);

    let mut got = out.model.weights.clone();
    got.push(out.model.bias);
    let mut want = f64s(&r["weights"]);
    want.push(r["bias"].as_f64().unwrap());
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-4, "param {g} vs {w}");
    }
    assert!((out.loss - r["loss"].as_f64().unwrap()).abs() <= 1e-6, "loss {}", out.loss);

    assert_eq!(predict(&out.model, &x), labels(&r["train_predictions"]));
    assert_eq!(predict(&out.model, &matrix(&r["x_eval"])), labels(&r["eval_predictions"]));
}

#[test]
fn loss_decreases_monotonically() {
    let r = read_json("numeric_reference.json");
    let out = train_logistic(
        &matrix(&r["logistic"]["x"]),
        &labels(&r["logistic"]["y"]),
        &ProbeConfig::default(),
    )
    .unwrap();
    assert!(out.loss_trace.len() > 1);
    for w in out.loss_trace.windows(2) {
        assert!(w[1] <= w[0], "loss rose from {} to {}", w[0], w[1]);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = rng.gen_range(5..40);
        let d = rng.gen_range(1..8);
        let data: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let x = Matrix::new(n, d, data);
        let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let lambda = rng.gen_range(0.0..3.0);
        let params: Vec<f64> = (0..=d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, grad) = logistic_objective(&x, &y, lambda, &params);
        let h = 1e-6;
        for k in 0..=d {
            let mut up = params.clone();
            let mut down = params.clone();
            up[k] += h;
            down[k] -= h;
            let fd = (logistic_objective(&x, &y, lambda, &up).0 - logistic_objective(&x, &y, lambda, &down).0)
                / (2.0 * h);
            let rel = (fd - grad[k]).abs() / grad[k].abs().max(1e-3);
            assert!(rel <= 1e-5, "coordinate {k}: analytic {} numeric {fd}", grad[k]);
        }
    }
}
