// SPDX-License-Identifier: MIT OR Apache-2.0

//! Decoding probes for grammaticality information inside language models.
//!
//! Minimal sentence pairs are fed through a model, per-layer activations
//! (last-token hidden states, per-head attention matrices, or a static
//! bag-of-words baseline) are stored in an activation archive, and a
//! cross-validated logistic-regression decoder is trained on every probing
//! unit. The analysis module turns the per-unit scores into layer curves,
//! feature capture depths, complexity correlations and head rankings.
//!
//! ```text
//! corpus ──► transformer / static_embed ──► archive ──► probe ──► analysis
//! ```

pub mod analysis;
pub mod archive;
pub mod corpus;
mod error;
pub mod probe;
pub mod static_embed;
pub mod transformer;

pub use error::{Error, Result};
