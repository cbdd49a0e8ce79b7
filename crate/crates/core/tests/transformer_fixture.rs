// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use std::collections::HashMap;

use common::{fixture, flat_f64, max_abs_diff, read_json};
use lprobe_core::transformer::{load_model, BpeTokenizer, Gpt2Model, TokenSequence};
use lprobe_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny() -> Gpt2Model {
    load_model(fixture("tiny_model")).expect("tiny fixture loads")
}

fn as_f64(xs: &[f32]) -> Vec<f64> {
    xs.iter().map(|&v| f64::from(v)).collect()
}

#[test]
fn tiny_config_read_from_files() {
    let m = tiny();
    let c = m.config();
    assert_eq!((c.n_layers, c.n_heads, c.d_model), (2, 2, 8));
    assert_eq!((c.vocab_size, c.max_positions), (320, 16));
    assert!((c.ln_epsilon - 1e-5).abs() < 1e-12);
}

#[test]
fn missing_weights_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("tiny_model/config.json"), dir.path().join("config.json")).unwrap();
    match load_model(dir.path()) {
        Err(Error::Io { path, .. }) => assert!(path.ends_with("model.safetensors")),
        other => panic!("unexpected {other:?}"),
    }
}

/// Rewrite the fixture weights through `edit` into a temp model dir.
fn edited_model(
    edit: impl FnOnce(&mut HashMap<String, (safetensors::Dtype, Vec<usize>, Vec<u8>)>),
) -> tempfile::TempDir {
    let bytes = std::fs::read(fixture("tiny_model/model.safetensors")).unwrap();
    let st = safetensors::SafeTensors::deserialize(&bytes).unwrap();
    let mut tensors: HashMap<String, (safetensors::Dtype, Vec<usize>, Vec<u8>)> = st
        .tensors()
        .into_iter()
        .map(|(k, v)| (k, (v.dtype(), v.shape().to_vec(), v.data().to_vec())))
        .collect();
    edit(&mut tensors);
    let views: Vec<(String, safetensors::tensor::TensorView<'_>)> = tensors
        .iter()
        .map(|(k, (dt, shape, data))| {
            (k.clone(), safetensors::tensor::TensorView::new(*dt, shape.clone(), data).unwrap())
        })
        .collect();
    let out = safetensors::serialize(views, &None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("model.safetensors"), out).unwrap();
    std::fs::copy(fixture("tiny_model/config.json"), dir.path().join("config.json")).unwrap();
    dir
}

#[test]
fn missing_tensor_and_bad_shape() {
    let dir = edited_model(|t| {
        t.remove("h.1.mlp.c_proj.bias");
    });
    let err = load_model(dir.path()).unwrap_err();
    assert!(err.to_string().contains("missing tensor h.1.mlp.c_proj.bias"), "{err}");

    let dir = edited_model(|t| {
        let e = t.get_mut("h.0.attn.c_proj.bias").unwrap();
        e.1 = vec![4];
        e.2.truncate(16);
    });
    let err = load_model(dir.path()).unwrap_err();
    assert!(err.to_string().contains("shape"), "{err}");

    let dir = edited_model(|t| {
        let e = t.get_mut("ln_f.bias").unwrap();
        e.0 = safetensors::Dtype::I32;
    });
    let err = load_model(dir.path()).unwrap_err();
    assert!(err.to_string().contains("unsupported dtype"), "{err}");
}

#[test]
fn layer_count_must_agree_with_config() {
    let dir = edited_model(|_| {});
    let cfg = r#"{"n_head": 2, "n_layer": 3, "layer_norm_epsilon": 1e-5}"#;
    std::fs::write(dir.path().join("config.json"), cfg).unwrap();
    let err = load_model(dir.path()).unwrap_err();
    assert!(err.to_string().contains("3 layers"), "{err}");
}

#[test]
fn half_precision_weights_run_in_f32() {
    let dir = edited_model(|t| {
        for (dt, _, data) in t.values_mut() {
            let halfs: Vec<u8> = data
                .chunks_exact(4)
                .flat_map(|b| {
                    half::f16::from_f32(f32::from_le_bytes([b[0], b[1], b[2], b[3]])).to_le_bytes()
                })
                .collect();
            *dt = safetensors::Dtype::F16;
            *data = halfs;
        }
    });
    let m16 = load_model(dir.path()).unwrap();
    let ids = TokenSequence::new(vec![40, 257, 99, 3, 300]);
    let a = m16.forward(&ids).unwrap();
    let b = tiny().forward(&ids).unwrap();
    let diff = max_abs_diff(&as_f64(a.sentence_embedding(2).unwrap()), &as_f64(b.sentence_embedding(2).unwrap()));
    assert!(diff < 0.05, "f16 rounding drift {diff}");
}

#[test]
fn traces_match_reference_implementation() {
    let m = tiny();
    let refs = read_json("tiny_model_traces.json");
    for tr in refs["traces"].as_array().unwrap() {
        let ids: Vec<u32> = tr["ids"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as u32).collect();
        let t = ids.len();
        let trace = m.forward(&TokenSequence::new(ids)).unwrap();

        let mut hidden = Vec::new();
        for layer in 0..=2 {
            for pos in 0..t {
                hidden.extend(as_f64(trace.hidden(layer, pos)));
            }
        }
        let dh = max_abs_diff(&hidden, &flat_f64(&tr["hidden"]));
        assert!(dh < 1e-4, "hidden max-abs {dh} (T={t})");

        let mut attn = Vec::new();
        for layer in 1..=2 {
            for head in 0..2 {
                attn.extend(as_f64(trace.attention(layer, head)));
            }
        }
        let da = max_abs_diff(&attn, &flat_f64(&tr["attention"]));
        assert!(da < 1e-4, "attention max-abs {da} (T={t})");

        let dl = max_abs_diff(&as_f64(&m.logits(&trace)), &flat_f64(&tr["logits"]));
        assert!(dl < 1e-4, "logits max-abs {dl} (T={t})");

        let emb = as_f64(trace.sentence_embedding(2).unwrap());
        assert!(max_abs_diff(&emb, &flat_f64(&tr["sentence_embedding_layer2"])) < 1e-4);

        let feats = as_f64(&trace.attention_features(1, 0, 16).unwrap());
        assert!(max_abs_diff(&feats, &flat_f64(&tr["attention_features_l1_h0_pad16"])) < 1e-4);

        let cat = as_f64(&trace.concat_attention(1, 16).unwrap());
        assert_eq!(cat.len(), 2 * 16 * 16);
        assert!(max_abs_diff(&cat, &flat_f64(&tr["concat_attention_l1_pad16"])) < 1e-4);

        if let Some(r) = tr.get("attention_features_l2_h0_pad4") {
            let f = as_f64(&trace.attention_features(2, 0, 4).unwrap());
            assert!(max_abs_diff(&f, &flat_f64(r)) < 1e-4);
        }
    }
}

#[test]
fn single_token_attention_is_one() {
    let m = tiny();
    let trace = m.forward(&TokenSequence::new(vec![17])).unwrap();
    for layer in 1..=2 {
        for head in 0..2 {
            assert_eq!(trace.attention(layer, head), &[1.0]);
        }
    }
    let emb = trace.sentence_embedding(0).unwrap();
    let bytes = std::fs::read(fixture("tiny_model/model.safetensors")).unwrap();
    let st = safetensors::SafeTensors::deserialize(&bytes).unwrap();
    let row = |name: &str, idx: usize| -> Vec<f32> {
        let v = st.tensor(name).unwrap();
        v.data()[idx * 32..(idx + 1) * 32]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect()
    };
    let expected: Vec<f32> = row("wte.weight", 17).iter().zip(row("wpe.weight", 0)).map(|(a, b)| a + b).collect();
    assert_eq!(emb, expected.as_slice());
}

fn random_ids(rng: &mut ChaCha8Rng, len: usize) -> Vec<u32> {
    (0..len).map(|_| rng.gen_range(0..320)).collect()
}

#[test]
fn attention_rows_are_causal_distributions() {
    let m = tiny();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let len = rng.gen_range(1..=16);
        let trace = m.forward(&TokenSequence::new(random_ids(&mut rng, len))).unwrap();
        for layer in 1..=2 {
            for head in 0..2 {
                let a = trace.attention(layer, head);
                for (i, row) in a.chunks_exact(len).enumerate() {
                    let sum: f32 = row.iter().sum();
                    assert!((sum - 1.0).abs() <= 1e-5, "row sum {sum}");
                    assert!(row.iter().all(|&v| v >= 0.0 && v.is_finite()));
                    assert!(row[i + 1..].iter().all(|&v| v == 0.0), "non-causal weight");
                }
            }
        }
    }
}

#[test]
fn appending_tokens_leaves_prefix_unchanged() {
    let m = tiny();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let len = rng.gen_range(1..=15);
        let ids = random_ids(&mut rng, len);
        let mut longer = ids.clone();
        longer.push(rng.gen_range(0..320));
        let a = m.forward(&TokenSequence::new(ids)).unwrap();
        let b = m.forward(&TokenSequence::new(longer)).unwrap();
        for layer in 0..=2 {
            for pos in 0..len {
                let d = max_abs_diff(&as_f64(a.hidden(layer, pos)), &as_f64(b.hidden(layer, pos)));
                assert!(d < 1e-5, "position {pos} of layer {layer} moved by {d}");
            }
        }
    }
}

#[test]
fn forward_is_bit_deterministic() {
    let m = tiny();
    let ids = TokenSequence::new(vec![5, 258, 61, 200, 11, 319, 0, 72]);
    assert_eq!(m.forward(&ids).unwrap(), m.forward(&ids).unwrap());
}

#[test]
fn sequence_limits() {
    let m = tiny();
    let err = m.forward(&TokenSequence::new(vec![1; 17])).unwrap_err();
    assert!(matches!(err, Error::SequenceTooLong { len: 17, max: 16 }));
    assert!(m.forward(&TokenSequence::new(vec![])).is_err());
    assert!(m.forward(&TokenSequence::new(vec![320])).is_err());
    let trace = m.forward(&TokenSequence::new(vec![1, 2, 3])).unwrap();
    assert!(trace.attention_features(1, 0, 2).is_err());
    assert!(trace.sentence_embedding(3).is_err());
}

#[test]
fn tiny_tokenizer_round_trip_through_model() {
    let tok = BpeTokenizer::from_dir(fixture("tiny_model")).unwrap();
    let ids = tok.encode("The cats annoy Tim.");
    assert!(ids.ids().iter().all(|&i| i < 320));
    assert!(tiny().forward(&ids).is_ok());
}

/// Public GPT-2 small release; runs only when LPROBE_GPT2_DIR points at it.
#[test]
fn gpt2_small_config_when_available() {
    let Ok(dir) = std::env::var("LPROBE_GPT2_DIR") else {
        eprintln!("LPROBE_GPT2_DIR not set; skipping GPT-2 small header check");
        return;
    };
    let m = load_model(&dir).unwrap();
    let c = m.config();
    assert_eq!((c.n_layers, c.n_heads, c.d_model), (12, 12, 768));
    assert_eq!((c.vocab_size, c.max_positions), (50257, 1024));
}
