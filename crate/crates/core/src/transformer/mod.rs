// SPDX-License-Identifier: MIT OR Apache-2.0

//! GPT-2 family inference that keeps every layer's hidden states and every
//! head's attention weights.
//!
//! Layer indexing: hidden layer 0 is the token + position embedding, layers
//! `1..=n_layers` are the outputs of the transformer blocks (before the final
//! layer norm). Attention layers are numbered `1..=n_layers` as well.

mod model;
mod tokenizer;

use serde::{Deserialize, Serialize};

pub use model::{load_model, Gpt2Model};
pub use tokenizer::BpeTokenizer;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_model: usize,
    pub vocab_size: usize,
    pub max_positions: usize,
    pub ln_epsilon: f32,
}

impl ModelConfig {
    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence(Vec<u32>);

impl TokenSequence {
    pub fn new(ids: Vec<u32>) -> Self {
        Self(ids)
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_ids(self) -> Vec<u32> {
        self.0
    }
}

impl From<Vec<u32>> for TokenSequence {
    fn from(ids: Vec<u32>) -> Self {
        Self(ids)
    }
}

/// Activations of one forward pass.
///
/// `hidden` is laid out `[n_layers + 1][T][d_model]`, `attention`
/// `[n_layers][n_heads][T][T]` (post-softmax).
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    n_layers: usize,
    n_heads: usize,
    d_model: usize,
    seq_len: usize,
    hidden: Vec<f32>,
    attention: Vec<f32>,
}

impl ForwardTrace {
    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn n_heads(&self) -> usize {
        self.n_heads
    }

    pub fn d_model(&self) -> usize {
        self.d_model
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    /// Hidden state of token `pos` at `layer` (0 = embeddings).
    pub fn hidden(&self, layer: usize, pos: usize) -> &[f32] {
        let d = self.d_model;
        let start = (layer * self.seq_len + pos) * d;
        &self.hidden[start..start + d]
    }

    /// The `T × T` attention matrix of `head` in block `layer` (1-based).
    pub fn attention(&self, layer: usize, head: usize) -> &[f32] {
        let t2 = self.seq_len * self.seq_len;
        let start = ((layer - 1) * self.n_heads + head) * t2;
        &self.attention[start..start + t2]
    }

    /// Last-token representation at `layer`.
    pub fn sentence_embedding(&self, layer: usize) -> Result<&[f32]> {
        if layer > self.n_layers {
            return Err(Error::OutOfRange {
                what: "layer",
                index: layer,
                bound: self.n_layers + 1,
            });
        }
        Ok(self.hidden(layer, self.seq_len - 1))
    }

    /// Attention matrix of one head, zero-padded to `pad_to × pad_to` and
    /// flattened row-major.
    pub fn attention_features(&self, layer: usize, head: usize, pad_to: usize) -> Result<Vec<f32>> {
        let mut out = vec![0f32; pad_to * pad_to];
        self.write_attention_features(layer, head, pad_to, &mut out)?;
        Ok(out)
    }

    /// All heads of `layer`, each padded as in [`Self::attention_features`],
    /// concatenated in head order.
    pub fn concat_attention(&self, layer: usize, pad_to: usize) -> Result<Vec<f32>> {
        let block = pad_to * pad_to;
        let mut out = vec![0f32; self.n_heads * block];
        for (head, chunk) in out.chunks_exact_mut(block).enumerate() {
            self.write_attention_features(layer, head, pad_to, chunk)?;
        }
        Ok(out)
    }

    fn write_attention_features(
        &self,
        layer: usize,
        head: usize,
        pad_to: usize,
        out: &mut [f32],
    ) -> Result<()> {
        if layer == 0 || layer > self.n_layers {
            return Err(Error::OutOfRange {
                what: "attention layer",
                index: layer,
                bound: self.n_layers + 1,
            });
        }
        if head >= self.n_heads {
            return Err(Error::OutOfRange {
                what: "head",
                index: head,
                bound: self.n_heads,
            });
        }
        let t = self.seq_len;
        if t > pad_to {
            return Err(Error::PadTooSmall { len: t, pad_to });
        }
        let attn = self.attention(layer, head);
        for (i, row) in attn.chunks_exact(t).enumerate() {
            out[i * pad_to..i * pad_to + t].copy_from_slice(row);
        }
        Ok(())
    }

    pub(crate) fn from_parts(
        n_layers: usize,
        n_heads: usize,
        d_model: usize,
        seq_len: usize,
        hidden: Vec<f32>,
        attention: Vec<f32>,
    ) -> Self {
        debug_assert_eq!(hidden.len(), (n_layers + 1) * seq_len * d_model);
        debug_assert_eq!(attention.len(), n_layers * n_heads * seq_len * seq_len);
        Self {
            n_layers,
            n_heads,
            d_model,
            seq_len,
            hidden,
            attention,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_token_trace() -> ForwardTrace {
        // 1 layer, 2 heads, d_model 2, T = 1
        ForwardTrace::from_parts(1, 2, 2, 1, vec![0.1, 0.2, 0.3, 0.4], vec![1.0, 1.0])
    }

    #[test]
    fn padding_layout() {
        let tr = one_token_trace();
        assert_eq!(tr.attention_features(1, 0, 2).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(tr.attention_features(1, 1, 1).unwrap(), vec![1.0]);
        let cat = tr.concat_attention(1, 2).unwrap();
        assert_eq!(cat, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn range_checks() {
        let tr = one_token_trace();
        assert!(matches!(tr.sentence_embedding(2), Err(Error::OutOfRange { .. })));
        assert_eq!(tr.sentence_embedding(0).unwrap(), &[0.1, 0.2]);
        assert_eq!(tr.sentence_embedding(1).unwrap(), &[0.3, 0.4]);
        assert!(tr.attention_features(0, 0, 2).is_err());
        assert!(tr.attention_features(1, 2, 2).is_err());
        let t3 = ForwardTrace::from_parts(1, 1, 1, 3, vec![0.0; 6], vec![0.0; 9]);
        assert!(matches!(
            t3.attention_features(1, 0, 2),
            Err(Error::PadTooSmall { len: 3, pad_to: 2 })
        ));
    }

    #[test]
    fn unpadded_is_plain_flatten() {
        let attn = vec![1.0, 0.0, 0.25, 0.75];
        let tr = ForwardTrace::from_parts(1, 1, 1, 2, vec![0.0; 4], attn.clone());
        assert_eq!(tr.attention_features(1, 0, 2).unwrap(), attn);
    }
}
