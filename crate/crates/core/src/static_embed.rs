// SPDX-License-Identifier: MIT OR Apache-2.0

//! Static word-vector baseline: bag-of-words sentence embeddings.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone)]
pub struct WordVectorTable {
    dim: usize,
    entries: HashMap<String, Vec<f32>>,
}

impl WordVectorTable {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dim must be positive");
        Self {
            dim,
            entries: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    /// Insert or replace a word vector. Returns the previous vector if any.
    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f32>) -> Result<Option<Vec<f32>>> {
        if vector.len() != self.dim {
            return Err(Error::WordVectors(format!(
                "vector of length {} in a table of dim {}",
                vector.len(),
                self.dim
            )));
        }
        Ok(self.entries.insert(word.into(), vector))
    }

    pub fn remove(&mut self, word: &str) -> Option<Vec<f32>> {
        self.entries.remove(word)
    }
}

pub fn load_word_vectors(path: impl AsRef<Path>) -> Result<WordVectorTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_word_vectors(file).map_err(|e| match e {
        Error::WordVectors(msg) => Error::WordVectors(format!("{}: {msg}", path.display())),
        e => e,
    })
}

/// Parse the plain-text format: `word v1 v2 ... vd` per line. A first line
/// of exactly two integers is a count/dim header and is skipped.
pub fn read_word_vectors(reader: impl Read) -> Result<WordVectorTable> {
    let reader = BufReader::new(reader);
    let mut table: Option<WordVectorTable> = None;
    let mut duplicates = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::WordVectors(format!("line {line_no}: {e}")))?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let rest: Vec<&str> = parts.collect();
        if line_no == 1
            && rest.len() == 1
            && word.parse::<u64>().is_ok()
            && rest[0].parse::<u64>().is_ok()
        {
            continue;
        }
        let vector = rest
            .iter()
            .map(|s| {
                s.parse::<f32>()
                    .map_err(|_| Error::WordVectors(format!("line {line_no}: unparseable value {s:?}")))
            })
            .collect::<Result<Vec<f32>>>()?;
        if vector.is_empty() {
            return Err(Error::WordVectors(format!("line {line_no}: no values for {word:?}")));
        }
        let table = table.get_or_insert_with(|| WordVectorTable::new(vector.len()));
        if vector.len() != table.dim {
            return Err(Error::WordVectors(format!(
                "line {line_no}: dimension {} differs from {}",
                vector.len(),
                table.dim
            )));
        }
        if table.insert(word, vector)?.is_some() {
            duplicates += 1;
            log::warn!("duplicate word vector for {word:?} at line {line_no}; keeping the last");
        }
    }
    if duplicates > 0 {
        log::warn!("{duplicates} duplicate word entries replaced");
    }
    table.ok_or_else(|| Error::WordVectors("empty file".into()))
}

/// Lowercased whitespace tokens with leading/trailing punctuation removed.
/// Tokens that are pure punctuation disappear.
pub fn bow_tokens(sentence: &str) -> Vec<String> {
    sentence
        .split_whitespace()
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

/// Mean of the in-vocabulary token vectors, plus the fraction of tokens
/// found in the table. All-OOV sentences give the zero vector, coverage 0.
pub fn sentence_bow(table: &WordVectorTable, sentence: &str) -> (Vec<f32>, f64) {
    let tokens = bow_tokens(sentence);
    let mut sum = vec![0f64; table.dim];
    let mut hits = 0usize;
    for tok in &tokens {
        if let Some(v) = table.get(tok) {
            hits += 1;
            for (s, &x) in sum.iter_mut().zip(v) {
                *s += f64::from(x);
            }
        }
    }
    if hits == 0 {
        return (vec![0.0; table.dim], 0.0);
    }
    let mean = sum.iter().map(|s| (s / hits as f64) as f32).collect();
    (mean, hits as f64 / tokens.len() as f64)
}
