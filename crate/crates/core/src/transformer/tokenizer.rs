// SPDX-License-Identifier: MIT OR Apache-2.0

//! Byte-level BPE, compatible with the GPT-2 `vocab.json` / `merges.txt`
//! release files.

use std::collections::HashMap;
use std::path::Path;

use fancy_regex::Regex;

use super::TokenSequence;
use crate::error::{io_err, Error, Result};

const PRETOKENIZE: &str =
    r"'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+";

/// GPT-2's reversible byte → printable-char table.
fn byte_to_char() -> [char; 256] {
    let mut table = ['\0'; 256];
    let mut next = 0u32;
    for b in 0..=255u8 {
        let printable = matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF);
        table[b as usize] = if printable {
            char::from(b)
        } else {
            let c = char::from_u32(256 + next).expect("valid code point");
            next += 1;
            c
        };
    }
    table
}

#[derive(Debug)]
pub struct BpeTokenizer {
    encoder: HashMap<String, u32>,
    ranks: HashMap<(String, String), usize>,
    byte_chars: [char; 256],
    pattern: Regex,
}

impl BpeTokenizer {
    /// Load `vocab.json` and `merges.txt` from a directory.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        Self::from_files(dir.join("vocab.json"), dir.join("merges.txt"))
    }

    pub fn from_files(vocab: impl AsRef<Path>, merges: impl AsRef<Path>) -> Result<Self> {
        let vocab = vocab.as_ref();
        let merges = merges.as_ref();
        let vocab_text = std::fs::read_to_string(vocab).map_err(io_err(vocab))?;
        let merges_text = std::fs::read_to_string(merges).map_err(io_err(merges))?;
        Self::from_strs(&vocab_text, &merges_text)
    }

    pub fn from_strs(vocab_json: &str, merges_txt: &str) -> Result<Self> {
        let encoder: HashMap<String, u32> = serde_json::from_str(vocab_json)
            .map_err(|e| Error::Tokenizer(format!("vocab: {e}")))?;
        let byte_chars = byte_to_char();
        for c in byte_chars {
            if !encoder.contains_key(c.to_string().as_str()) {
                return Err(Error::Tokenizer(format!("vocab lacks byte symbol {c:?}")));
            }
        }
        let mut ranks = HashMap::new();
        for (idx, line) in merges_txt.lines().enumerate() {
            if line.starts_with("#version") || line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Tokenizer(format!("merges line {}: {line:?}", idx + 1)));
            };
            let merged = format!("{a}{b}");
            if !encoder.contains_key(&merged) {
                return Err(Error::Tokenizer(format!(
                    "merge result {merged:?} (line {}) missing from vocab",
                    idx + 1
                )));
            }
            let rank = ranks.len();
            ranks.entry((a.to_string(), b.to_string())).or_insert(rank);
        }
        let pattern = Regex::new(PRETOKENIZE).expect("static pattern compiles");
        Ok(Self {
            encoder,
            ranks,
            byte_chars,
            pattern,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.encoder.len()
    }

    pub fn max_id(&self) -> u32 {
        self.encoder.values().copied().max().unwrap_or(0)
    }

    pub fn encode(&self, text: &str) -> TokenSequence {
        let mut ids = Vec::new();
        for piece in self.pattern.find_iter(text) {
            // Backtracking limits are not reachable with this pattern.
            let piece = piece.expect("pre-tokenizer match").as_str();
            let symbols: Vec<String> = piece
                .bytes()
                .map(|b| self.byte_chars[b as usize].to_string())
                .collect();
            for sym in self.bpe(symbols) {
                ids.push(self.encoder[&sym]);
            }
        }
        TokenSequence::new(ids)
    }

    fn bpe(&self, mut word: Vec<String>) -> Vec<String> {
        while word.len() > 1 {
            let best = word
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied())
                .min();
            let Some(rank) = best else { break };
            let (first, second) = word
                .windows(2)
                .find(|w| self.ranks.get(&(w[0].clone(), w[1].clone())) == Some(&rank))
                .map(|w| (w[0].clone(), w[1].clone()))
                .expect("pair with best rank exists");
            let mut merged = Vec::with_capacity(word.len());
            let mut i = 0;
            while i < word.len() {
                if i + 1 < word.len() && word[i] == first && word[i + 1] == second {
                    merged.push(format!("{first}{second}"));
                    i += 2;
                } else {
                    merged.push(std::mem::take(&mut word[i]));
                    i += 1;
                }
            }
            word = merged;
        }
        word
    }
}
