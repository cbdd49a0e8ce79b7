// SPDX-License-Identifier: MIT OR Apache-2.0

//! BLiMP-format minimal-pair corpora and per-sentence complexity metadata.
//!
//! A corpus file holds one paradigm: one JSON object per line with the
//! fields `sentence_good`, `sentence_bad`, `UID`, `linguistics_term` and
//! `field`, as in the public BLiMP release. Pair identifiers come from an
//! explicit `pair_uid` field when present, otherwise `UID:pairID`, otherwise
//! `UID:<line number>`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

/// Number of pairs in every paradigm of the full benchmark.
pub const FULL_PARADIGM_SIZE: usize = 1000;

/// Linguistic level of a phenomenon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Morphology,
    Semantics,
    SemanticsSyntax,
    Syntax,
}

impl Level {
    pub const ALL: [Level; 4] = [
        Level::Morphology,
        Level::Semantics,
        Level::SemanticsSyntax,
        Level::Syntax,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Morphology => "morphology",
            Level::Semantics => "semantics",
            Level::SemanticsSyntax => "semantics_syntax",
            Level::Syntax => "syntax",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The twelve grammatical phenomena of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phenomenon {
    AnaphorAgreement,
    DeterminerNounAgreement,
    IrregularForms,
    SubjectVerbAgreement,
    Quantifiers,
    NpiLicensing,
    Binding,
    ControlRaising,
    ArgumentStructure,
    Ellipsis,
    FillerGapDependency,
    IslandEffects,
}

impl Phenomenon {
    pub const ALL: [Phenomenon; 12] = [
        Phenomenon::AnaphorAgreement,
        Phenomenon::DeterminerNounAgreement,
        Phenomenon::IrregularForms,
        Phenomenon::SubjectVerbAgreement,
        Phenomenon::Quantifiers,
        Phenomenon::NpiLicensing,
        Phenomenon::Binding,
        Phenomenon::ControlRaising,
        Phenomenon::ArgumentStructure,
        Phenomenon::Ellipsis,
        Phenomenon::FillerGapDependency,
        Phenomenon::IslandEffects,
    ];

    /// Canonical snake_case name, as written in corpus files.
    pub fn as_str(self) -> &'static str {
        match self {
            Phenomenon::AnaphorAgreement => "anaphor_agreement",
            Phenomenon::DeterminerNounAgreement => "determiner_noun_agreement",
            Phenomenon::IrregularForms => "irregular_forms",
            Phenomenon::SubjectVerbAgreement => "subject_verb_agreement",
            Phenomenon::Quantifiers => "quantifiers",
            Phenomenon::NpiLicensing => "npi_licensing",
            Phenomenon::Binding => "binding",
            Phenomenon::ControlRaising => "control_raising",
            Phenomenon::ArgumentStructure => "argument_structure",
            Phenomenon::Ellipsis => "ellipsis",
            Phenomenon::FillerGapDependency => "filler_gap_dependency",
            Phenomenon::IslandEffects => "island_effects",
        }
    }

    /// Map a raw `linguistics_term` value onto a phenomenon.
    ///
    /// Case, hyphens, spaces and slashes are normalized to snake_case first.
    pub fn from_term(term: &str) -> Option<Phenomenon> {
        let norm: String = term
            .trim()
            .chars()
            .map(|c| match c {
                '-' | ' ' | '/' => '_',
                c => c.to_ascii_lowercase(),
            })
            .collect();
        let p = match norm.as_str() {
            "anaphor_agreement" => Phenomenon::AnaphorAgreement,
            "determiner_noun_agreement" => Phenomenon::DeterminerNounAgreement,
            "irregular_forms" => Phenomenon::IrregularForms,
            "subject_verb_agreement" => Phenomenon::SubjectVerbAgreement,
            "quantifiers" => Phenomenon::Quantifiers,
            "npi_licensing" => Phenomenon::NpiLicensing,
            "binding" => Phenomenon::Binding,
            "control_raising" => Phenomenon::ControlRaising,
            "argument_structure" | "s_selection" | "c_selection" => Phenomenon::ArgumentStructure,
            "ellipsis" => Phenomenon::Ellipsis,
            "filler_gap_dependency" | "filler_gap" => Phenomenon::FillerGapDependency,
            "island_effects" => Phenomenon::IslandEffects,
            _ => return None,
        };
        Some(p)
    }

    pub fn level(self) -> Level {
        level_of(self)
    }
}

impl fmt::Display for Phenomenon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Linguistic level of each phenomenon (4 morphology, 1 semantics,
/// 3 semantics/syntax interface, 4 syntax).
pub fn level_of(phenomenon: Phenomenon) -> Level {
    use Phenomenon::*;
    match phenomenon {
        AnaphorAgreement | DeterminerNounAgreement | IrregularForms | SubjectVerbAgreement => {
            Level::Morphology
        }
        Quantifiers => Level::Semantics,
        NpiLicensing | Binding | ControlRaising => Level::SemanticsSyntax,
        ArgumentStructure | Ellipsis | FillerGapDependency | IslandEffects => Level::Syntax,
    }
}

/// Which member of a minimal pair a sentence is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Member {
    Good,
    Bad,
}

impl Member {
    pub fn label(self) -> u8 {
        match self {
            Member::Good => 1,
            Member::Bad => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Member::Good => "good",
            Member::Bad => "bad",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimalPair {
    pub pair_uid: String,
    pub good_sentence: String,
    pub bad_sentence: String,
    pub paradigm_id: String,
    pub phenomenon: Phenomenon,
}

impl MinimalPair {
    pub fn level(&self) -> Level {
        self.phenomenon.level()
    }

    pub fn sentence(&self, member: Member) -> &str {
        match member {
            Member::Good => &self.good_sentence,
            Member::Bad => &self.bad_sentence,
        }
    }
}

/// All pairs of one paradigm, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParadigmSet {
    pub paradigm_id: String,
    pub pairs: Vec<MinimalPair>,
    pub source_path: PathBuf,
}

impl ParadigmSet {
    pub fn phenomenon(&self) -> Phenomenon {
        self.pairs[0].phenomenon
    }

    pub fn level(&self) -> Level {
        self.phenomenon().level()
    }

    /// Warning text when the set is not full benchmark size.
    pub fn size_warning(&self) -> Option<String> {
        (self.pairs.len() != FULL_PARADIGM_SIZE).then(|| {
            format!(
                "paradigm {} has {} pairs (expected {}); treating as a subset",
                self.paradigm_id,
                self.pairs.len(),
                FULL_PARADIGM_SIZE
            )
        })
    }

    /// Serialize back to the line format read by [`load_blimp`].
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for pair in &self.pairs {
            let line = RawRecord {
                sentence_good: Some(pair.good_sentence.clone()),
                sentence_bad: Some(pair.bad_sentence.clone()),
                uid: Some(pair.paradigm_id.clone()),
                linguistics_term: Some(pair.phenomenon.as_str().to_string()),
                field: Some(pair.level().as_str().to_string()),
                pair_id: None,
                pair_uid: Some(pair.pair_uid.clone()),
            };
            out.push_str(&serde_json::to_string(&line).expect("string fields serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    sentence_good: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sentence_bad: Option<String>,
    #[serde(rename = "UID", skip_serializing_if = "Option::is_none")]
    uid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    linguistics_term: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<String>,
    #[serde(rename = "pairID", default, skip_serializing_if = "Option::is_none")]
    pair_id: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pair_uid: Option<String>,
}

/// Load one paradigm file.
pub fn load_blimp(path: impl AsRef<Path>) -> Result<ParadigmSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let set = parse_blimp(&text, path)?;
    if let Some(w) = set.size_warning() {
        log::warn!("{w}");
    }
    Ok(set)
}

/// Parse the line format; `source` is used for error messages and
/// recorded as the set's source path.
pub fn parse_blimp(text: &str, source: &Path) -> Result<ParadigmSet> {
    let malformed = |line: usize, reason: String| Error::MalformedRecord {
        path: source.to_path_buf(),
        line,
        reason,
    };
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    let mut paradigm: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: RawRecord =
            serde_json::from_str(raw).map_err(|e| malformed(line_no, e.to_string()))?;
        let need = |v: Option<String>, name: &str| {
            v.ok_or_else(|| malformed(line_no, format!("missing field {name}")))
        };
        let good = need(rec.sentence_good, "sentence_good")?;
        let bad = need(rec.sentence_bad, "sentence_bad")?;
        let uid = need(rec.uid, "UID")?;
        let term = need(rec.linguistics_term, "linguistics_term")?;
        need(rec.field, "field")?;

        if good.trim().is_empty() || bad.trim().is_empty() {
            return Err(malformed(line_no, "empty sentence".into()));
        }
        if good == bad {
            return Err(malformed(line_no, "good and bad sentences are identical".into()));
        }
        let phenomenon = Phenomenon::from_term(&term).ok_or_else(|| Error::UnknownPhenomenon {
            path: source.to_path_buf(),
            line: line_no,
            term: term.clone(),
        })?;
        match &paradigm {
            None => paradigm = Some(uid.clone()),
            Some(p) if *p != uid => {
                return Err(malformed(
                    line_no,
                    format!("UID {uid:?} differs from the file's paradigm {p:?}"),
                ))
            }
            Some(_) => {}
        }
        let pair_uid = match (rec.pair_uid, rec.pair_id) {
            (Some(u), _) => u,
            (None, Some(serde_json::Value::String(s))) => format!("{uid}:{s}"),
            (None, Some(v)) => format!("{uid}:{v}"),
            (None, None) => format!("{uid}:{line_no}"),
        };
        if !seen.insert(pair_uid.clone()) {
            return Err(Error::DuplicatePair(pair_uid));
        }
        pairs.push(MinimalPair {
            pair_uid,
            good_sentence: good,
            bad_sentence: bad,
            paradigm_id: uid,
            phenomenon,
        });
    }

    let paradigm_id = paradigm.ok_or_else(|| Error::NoRecords {
        path: source.to_path_buf(),
    })?;
    Ok(ParadigmSet {
        paradigm_id,
        pairs,
        source_path: source.to_path_buf(),
    })
}

/// Complexity metadata of one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceMeta {
    pub pair_uid: String,
    pub member: Member,
    /// Tree depth divided by word count.
    pub complexity: f64,
    pub word_length: u32,
}

#[derive(Debug, Deserialize)]
struct RawMeta {
    pair_uid: String,
    member: Member,
    tree_depth: f64,
    word_length: i64,
}

pub type ComplexityMap = BTreeMap<(String, Member), SentenceMeta>;

/// Load a complexity metadata file: a JSON array of
/// `{pair_uid, member, tree_depth, word_length}` records.
pub fn load_complexity(path: impl AsRef<Path>) -> Result<ComplexityMap> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_complexity(&text)
}

pub fn parse_complexity(text: &str) -> Result<ComplexityMap> {
    let raw: Vec<RawMeta> = serde_json::from_str(text)?;
    let mut out = BTreeMap::new();
    for r in raw {
        let invalid = |reason: String| Error::InvalidMetadata {
            pair_uid: r.pair_uid.clone(),
            reason,
        };
        if r.word_length <= 0 {
            return Err(invalid(format!("word_length must be positive, got {}", r.word_length)));
        }
        if !r.tree_depth.is_finite() || r.tree_depth < 0.0 {
            return Err(invalid(format!("negative complexity (tree_depth {})", r.tree_depth)));
        }
        let word_length = u32::try_from(r.word_length)
            .map_err(|_| invalid(format!("word_length {} too large", r.word_length)))?;
        let complexity = r.tree_depth / f64::from(word_length);
        if complexity > f64::from(word_length) {
            return Err(invalid(format!(
                "complexity {complexity} exceeds word_length {word_length}"
            )));
        }
        let key = (r.pair_uid.clone(), r.member);
        if out.contains_key(&key) {
            return Err(invalid(format!("duplicate {} record", r.member.as_str())));
        }
        out.insert(
            key,
            SentenceMeta {
                pair_uid: r.pair_uid,
                member: r.member,
                complexity,
                word_length,
            },
        );
    }
    Ok(out)
}

/// Whitespace word count.
pub fn word_length(sentence: &str) -> usize {
    sentence.split_whitespace().count()
}
