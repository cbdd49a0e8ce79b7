// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;

use safetensors::{Dtype, SafeTensors};
use serde::Deserialize;

use super::{ForwardTrace, ModelConfig, TokenSequence};
use crate::error::{io_err, Error, Result};

pub const WEIGHTS_FILE: &str = "model.safetensors";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Deserialize)]
struct RawConfig {
    #[serde(alias = "num_attention_heads")]
    n_head: usize,
    #[serde(default, alias = "num_hidden_layers")]
    n_layer: Option<usize>,
    #[serde(default)]
    layer_norm_epsilon: Option<f32>,
    #[serde(default)]
    activation_function: Option<String>,
}

#[derive(Debug)]
struct Block {
    ln1_w: Vec<f32>,
    ln1_b: Vec<f32>,
    qkv_w: Vec<f32>,
    qkv_b: Vec<f32>,
    out_w: Vec<f32>,
    out_b: Vec<f32>,
    ln2_w: Vec<f32>,
    ln2_b: Vec<f32>,
    fc_w: Vec<f32>,
    fc_b: Vec<f32>,
    proj_w: Vec<f32>,
    proj_b: Vec<f32>,
    d_inner: usize,
}

/// GPT-2 weights, read-only after loading.
#[derive(Debug)]
pub struct Gpt2Model {
    config: ModelConfig,
    wte: Vec<f32>,
    wpe: Vec<f32>,
    blocks: Vec<Block>,
    lnf_w: Vec<f32>,
    lnf_b: Vec<f32>,
}

struct TensorSource<'a> {
    st: SafeTensors<'a>,
    prefix: &'static str,
}

impl TensorSource<'_> {
    fn get(&self, name: &str, shape: &[usize]) -> Result<Vec<f32>> {
        let full = format!("{}{name}", self.prefix);
        let view = self
            .st
            .tensor(&full)
            .map_err(|_| Error::Model(format!("missing tensor {full}")))?;
        if view.shape() != shape {
            return Err(Error::Model(format!(
                "tensor {full} has shape {:?}, expected {shape:?}",
                view.shape()
            )));
        }
        to_f32(view.dtype(), view.data(), &full)
    }

    fn shape(&self, name: &str) -> Result<Vec<usize>> {
        let full = format!("{}{name}", self.prefix);
        self.st
            .tensor(&full)
            .map(|v| v.shape().to_vec())
            .map_err(|_| Error::Model(format!("missing tensor {full}")))
    }
}

fn to_f32(dtype: Dtype, bytes: &[u8], name: &str) -> Result<Vec<f32>> {
    let out = match dtype {
        Dtype::F32 => bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect(),
        Dtype::F16 => bytes
            .chunks_exact(2)
            .map(|b| half::f16::from_le_bytes([b[0], b[1]]).to_f32())
            .collect(),
        Dtype::BF16 => bytes
            .chunks_exact(2)
            .map(|b| half::bf16::from_le_bytes([b[0], b[1]]).to_f32())
            .collect(),
        Dtype::F64 => bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")) as f32)
            .collect(),
        other => {
            return Err(Error::Model(format!("tensor {name}: unsupported dtype {other:?}")));
        }
    };
    Ok(out)
}

/// Load `config.json` and `model.safetensors` from `dir`.
///
/// Layer count, width, vocabulary and context length are read from the
/// tensor shapes; the head count and layer-norm epsilon from the config.
pub fn load_model(dir: impl AsRef<Path>) -> Result<Gpt2Model> {
    let dir = dir.as_ref();
    let cfg_path = dir.join(CONFIG_FILE);
    let cfg_text = std::fs::read_to_string(&cfg_path).map_err(io_err(&cfg_path))?;
    let raw: RawConfig = serde_json::from_str(&cfg_text)
        .map_err(|e| Error::Model(format!("{}: {e}", cfg_path.display())))?;
    let weights_path = dir.join(WEIGHTS_FILE);
    let bytes = std::fs::read(&weights_path).map_err(io_err(&weights_path))?;
    Gpt2Model::from_safetensors(&bytes, &raw)
}

impl Gpt2Model {
    fn from_safetensors(bytes: &[u8], raw: &RawConfig) -> Result<Self> {
        if let Some(act) = raw.activation_function.as_deref() {
            if !matches!(act, "gelu_new" | "gelu_pytorch_tanh") {
                return Err(Error::Model(format!("unsupported activation {act:?}")));
            }
        }
        let st = SafeTensors::deserialize(bytes)
            .map_err(|e| Error::Model(format!("safetensors header: {e}")))?;
        let prefix = if st.tensor("wte.weight").is_ok() {
            ""
        } else {
            "transformer."
        };
        let src = TensorSource { st, prefix };

        let wte_shape = src.shape("wte.weight")?;
        let wpe_shape = src.shape("wpe.weight")?;
        if wte_shape.len() != 2 || wpe_shape.len() != 2 || wte_shape[1] != wpe_shape[1] {
            return Err(Error::Model(format!(
                "embedding shapes {wte_shape:?} / {wpe_shape:?} are inconsistent"
            )));
        }
        let (vocab_size, d_model) = (wte_shape[0], wte_shape[1]);
        let max_positions = wpe_shape[0];
        let n_layers = (0..)
            .take_while(|i| src.shape(&format!("h.{i}.ln_1.weight")).is_ok())
            .count();
        if n_layers == 0 {
            return Err(Error::Model("no transformer blocks (missing h.0.*)".into()));
        }
        if let Some(n) = raw.n_layer {
            if n != n_layers {
                return Err(Error::Model(format!(
                    "config declares {n} layers but the weight file has {n_layers}"
                )));
            }
        }
        let n_heads = raw.n_head;
        if n_heads == 0 || d_model % n_heads != 0 {
            return Err(Error::Model(format!(
                "d_model {d_model} is not divisible by n_heads {n_heads}"
            )));
        }
        let config = ModelConfig {
            n_layers,
            n_heads,
            d_model,
            vocab_size,
            max_positions,
            ln_epsilon: raw.layer_norm_epsilon.unwrap_or(1e-5),
        };

        let d = d_model;
        let mut blocks = Vec::with_capacity(n_layers);
        for i in 0..n_layers {
            let p = |s: &str| format!("h.{i}.{s}");
            let fc_shape = src.shape(&p("mlp.c_fc.weight"))?;
            let d_inner = *fc_shape.get(1).unwrap_or(&0);
            blocks.push(Block {
                ln1_w: src.get(&p("ln_1.weight"), &[d])?,
                ln1_b: src.get(&p("ln_1.bias"), &[d])?,
                qkv_w: src.get(&p("attn.c_attn.weight"), &[d, 3 * d])?,
                qkv_b: src.get(&p("attn.c_attn.bias"), &[3 * d])?,
                out_w: src.get(&p("attn.c_proj.weight"), &[d, d])?,
                out_b: src.get(&p("attn.c_proj.bias"), &[d])?,
                ln2_w: src.get(&p("ln_2.weight"), &[d])?,
                ln2_b: src.get(&p("ln_2.bias"), &[d])?,
                fc_w: src.get(&p("mlp.c_fc.weight"), &[d, d_inner])?,
                fc_b: src.get(&p("mlp.c_fc.bias"), &[d_inner])?,
                proj_w: src.get(&p("mlp.c_proj.weight"), &[d_inner, d])?,
                proj_b: src.get(&p("mlp.c_proj.bias"), &[d])?,
                d_inner,
            });
        }
        Ok(Self {
            wte: src.get("wte.weight", &[vocab_size, d])?,
            wpe: src.get("wpe.weight", &[max_positions, d])?,
            lnf_w: src.get("ln_f.weight", &[d])?,
            lnf_b: src.get("ln_f.bias", &[d])?,
            blocks,
            config,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Run the model over one sequence, keeping all activations.
    pub fn forward(&self, tokens: &TokenSequence) -> Result<ForwardTrace> {
        let cfg = &self.config;
        let t = tokens.len();
        if t == 0 {
            return Err(Error::Model("empty token sequence".into()));
        }
        if t > cfg.max_positions {
            return Err(Error::SequenceTooLong {
                len: t,
                max: cfg.max_positions,
            });
        }
        let d = cfg.d_model;
        let (n_heads, hd) = (cfg.n_heads, cfg.head_dim());
        let mut hidden = Vec::with_capacity((cfg.n_layers + 1) * t * d);
        let mut attention = Vec::with_capacity(cfg.n_layers * n_heads * t * t);

        let mut x = vec![0f32; t * d];
        for (pos, &id) in tokens.ids().iter().enumerate() {
            let id = id as usize;
            if id >= cfg.vocab_size {
                return Err(Error::OutOfRange {
                    what: "token id",
                    index: id,
                    bound: cfg.vocab_size,
                });
            }
            let row = &mut x[pos * d..(pos + 1) * d];
            let tok = &self.wte[id * d..(id + 1) * d];
            let posv = &self.wpe[pos * d..(pos + 1) * d];
            for ((r, a), b) in row.iter_mut().zip(tok).zip(posv) {
                *r = a + b;
            }
        }
        check_finite(&x, "embeddings")?;
        hidden.extend_from_slice(&x);

        let scale = 1.0 / (hd as f32).sqrt();
        let mut h = vec![0f32; t * d];
        for (li, blk) in self.blocks.iter().enumerate() {
            layer_norm(&x, &blk.ln1_w, &blk.ln1_b, cfg.ln_epsilon, d, &mut h);
            let qkv = linear(&h, &blk.qkv_w, &blk.qkv_b, d, 3 * d);
            let mut ctx = vec![0f32; t * d];
            for head in 0..n_heads {
                let (qo, ko, vo) = (head * hd, d + head * hd, 2 * d + head * hd);
                let mut weights = vec![0f32; t * t];
                for i in 0..t {
                    let q = &qkv[i * 3 * d + qo..i * 3 * d + qo + hd];
                    let row = &mut weights[i * t..(i + 1) * t];
                    let mut max = f32::NEG_INFINITY;
                    for j in 0..=i {
                        let k = &qkv[j * 3 * d + ko..j * 3 * d + ko + hd];
                        let s = dot(q, k) * scale;
                        row[j] = s;
                        max = max.max(s);
                    }
                    let mut sum = 0f32;
                    for w in &mut row[..=i] {
                        *w = (*w - max).exp();
                        sum += *w;
                    }
                    for w in &mut row[..=i] {
                        *w /= sum;
                    }
                    let out = &mut ctx[i * d + head * hd..i * d + (head + 1) * hd];
                    for (j, &w) in row[..=i].iter().enumerate() {
                        let v = &qkv[j * 3 * d + vo..j * 3 * d + vo + hd];
                        for (o, &vv) in out.iter_mut().zip(v) {
                            *o += w * vv;
                        }
                    }
                }
                attention.extend_from_slice(&weights);
            }
            let attn_out = linear(&ctx, &blk.out_w, &blk.out_b, d, d);
            for (a, b) in x.iter_mut().zip(&attn_out) {
                *a += b;
            }
            layer_norm(&x, &blk.ln2_w, &blk.ln2_b, cfg.ln_epsilon, d, &mut h);
            let mut inner = linear(&h, &blk.fc_w, &blk.fc_b, d, blk.d_inner);
            inner.iter_mut().for_each(|v| *v = gelu(*v));
            let mlp_out = linear(&inner, &blk.proj_w, &blk.proj_b, blk.d_inner, d);
            for (a, b) in x.iter_mut().zip(&mlp_out) {
                *a += b;
            }
            check_finite(&x, &format!("block {}", li + 1))?;
            hidden.extend_from_slice(&x);
        }
        check_finite(&attention, "attention")?;
        Ok(ForwardTrace::from_parts(
            cfg.n_layers,
            n_heads,
            d,
            t,
            hidden,
            attention,
        ))
    }

    /// Next-token logits `[T][vocab_size]`: final layer norm on the last
    /// block output, then the tied token embedding.
    pub fn logits(&self, trace: &ForwardTrace) -> Vec<f32> {
        let cfg = &self.config;
        let (t, d) = (trace.seq_len(), cfg.d_model);
        let last: Vec<f32> = (0..t)
            .flat_map(|p| trace.hidden(cfg.n_layers, p).iter().copied())
            .collect();
        let mut normed = vec![0f32; t * d];
        layer_norm(&last, &self.lnf_w, &self.lnf_b, cfg.ln_epsilon, d, &mut normed);
        let mut out = Vec::with_capacity(t * cfg.vocab_size);
        for row in normed.chunks_exact(d) {
            out.extend(self.wte.chunks_exact(d).map(|e| dot(row, e)));
        }
        out
    }
}

fn check_finite(xs: &[f32], stage: &str) -> Result<()> {
    if xs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(stage.to_string()))
    }
}

fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn layer_norm(x: &[f32], w: &[f32], b: &[f32], eps: f32, d: usize, out: &mut [f32]) {
    for (row, o) in x.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
        let mean = row.iter().sum::<f32>() / d as f32;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / d as f32;
        let inv = 1.0 / (var + eps).sqrt();
        for i in 0..d {
            o[i] = (row[i] - mean) * inv * w[i] + b[i];
        }
    }
}

/// `x [n × k] · w [k × m] + bias`, GPT-2 Conv1D layout.
fn linear(x: &[f32], w: &[f32], bias: &[f32], k: usize, m: usize) -> Vec<f32> {
    let n = x.len() / k;
    let mut out = Vec::with_capacity(n * m);
    for row in x.chunks_exact(k) {
        let start = out.len();
        out.extend_from_slice(bias);
        let acc = &mut out[start..start + m];
        for (&xv, wrow) in row.iter().zip(w.chunks_exact(m)) {
            for (a, &wv) in acc.iter_mut().zip(wrow) {
                *a += xv * wv;
            }
        }
    }
    out
}

fn gelu(x: f32) -> f32 {
    const C: f32 = 0.797_884_6; // sqrt(2 / pi)
    0.5 * x * (1.0 + (C * (x + 0.044_715 * x * x * x)).tanh())
}
