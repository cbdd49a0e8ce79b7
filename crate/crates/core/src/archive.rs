// SPDX-License-Identifier: MIT OR Apache-2.0

//! Activation archive: labeled sentence records bound to fixed-length
//! feature vectors, one block of vectors per probing unit.
//!
//! File layout (all integers little-endian):
//!
//! ```text
//! "LPROBEA1"            8 bytes
//! manifest length       u32
//! manifest              UTF-8 JSON {model_name, kind, units, records, [paradigm_id]}
//! data                  f32 × Σ_unit dim(unit) × n_records, unit-major,
//!                       then record order, then feature order
//! ```

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Member;
use crate::error::{io_err, Error, Result};

pub const MAGIC: &[u8; 8] = b"LPROBEA1";
const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchiveKind {
    Embedding,
    AttentionHead,
    AttentionConcat,
    StaticBow,
}

impl ArchiveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArchiveKind::Embedding => "embedding",
            ArchiveKind::AttentionHead => "attention_head",
            ArchiveKind::AttentionConcat => "attention_concat",
            ArchiveKind::StaticBow => "static_bow",
        }
    }
}

impl fmt::Display for ArchiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ArchiveKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "embedding" => Ok(ArchiveKind::Embedding),
            "attention_head" => Ok(ArchiveKind::AttentionHead),
            "attention_concat" => Ok(ArchiveKind::AttentionConcat),
            "static_bow" => Ok(ArchiveKind::StaticBow),
            other => Err(format!("unknown archive kind {other:?}")),
        }
    }
}

/// One probing unit: a layer, optionally a single head at that layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnitId {
    pub layer: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<usize>,
}

impl UnitId {
    pub fn layer(layer: usize) -> Self {
        Self { layer, head: None }
    }

    pub fn head(layer: usize, head: usize) -> Self {
        Self {
            layer,
            head: Some(head),
        }
    }
}

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.head {
            Some(h) => write!(f, "L{}H{}", self.layer, h),
            None => write!(f, "L{}", self.layer),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitSpec {
    #[serde(flatten)]
    pub id: UnitId,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub pair_uid: String,
    pub member: Member,
    pub label: u8,
}

impl Record {
    pub fn new(pair_uid: impl Into<String>, member: Member) -> Self {
        Self {
            pair_uid: pair_uid.into(),
            member,
            label: member.label(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    model_name: String,
    kind: ArchiveKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    paradigm_id: Option<String>,
    units: Vec<UnitSpec>,
    records: Vec<Record>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationArchive {
    pub model_name: String,
    pub kind: ArchiveKind,
    pub paradigm_id: Option<String>,
    pub units: Vec<UnitSpec>,
    pub records: Vec<Record>,
    data: Vec<f32>,
    offsets: Vec<usize>,
}

fn unit_offsets(units: &[UnitSpec], n_records: usize) -> Vec<usize> {
    let mut acc = 0;
    let mut out = Vec::with_capacity(units.len() + 1);
    out.push(0);
    for u in units {
        acc += u.dim * n_records;
        out.push(acc);
    }
    out
}

impl ActivationArchive {
    /// A zero-filled archive ready to be populated with [`Self::features_mut`].
    pub fn new(
        model_name: impl Into<String>,
        kind: ArchiveKind,
        units: Vec<UnitSpec>,
        records: Vec<Record>,
    ) -> Self {
        let offsets = unit_offsets(&units, records.len());
        let len = *offsets.last().expect("offsets start with 0");
        Self {
            model_name: model_name.into(),
            kind,
            paradigm_id: None,
            units,
            records,
            data: vec![0.0; len],
            offsets,
        }
    }

    /// Build from an explicit data buffer (unit-major layout).
    pub fn from_data(
        model_name: impl Into<String>,
        kind: ArchiveKind,
        units: Vec<UnitSpec>,
        records: Vec<Record>,
        data: Vec<f32>,
    ) -> Result<Self> {
        let offsets = unit_offsets(&units, records.len());
        let expected = *offsets.last().expect("offsets start with 0");
        if data.len() != expected {
            return Err(Error::Archive(format!(
                "data has {} values, units × records require {expected}",
                data.len()
            )));
        }
        Ok(Self {
            model_name: model_name.into(),
            kind,
            paradigm_id: None,
            units,
            records,
            data,
            offsets,
        })
    }

    pub fn with_paradigm(mut self, paradigm_id: impl Into<String>) -> Self {
        self.paradigm_id = Some(paradigm_id.into());
        self
    }

    pub fn n_records(&self) -> usize {
        self.records.len()
    }

    pub fn unit_index(&self, id: UnitId) -> Option<usize> {
        self.units.iter().position(|u| u.id == id)
    }

    /// `records × dim` row-major block of one unit.
    pub fn unit_matrix(&self, unit: usize) -> &[f32] {
        &self.data[self.offsets[unit]..self.offsets[unit + 1]]
    }

    pub fn features(&self, unit: usize, record: usize) -> &[f32] {
        let dim = self.units[unit].dim;
        let start = self.offsets[unit] + record * dim;
        &self.data[start..start + dim]
    }

    pub fn features_mut(&mut self, unit: usize, record: usize) -> &mut [f32] {
        let dim = self.units[unit].dim;
        let start = self.offsets[unit] + record * dim;
        &mut self.data[start..start + dim]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    fn check_writable(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::Archive("empty archive".into()));
        }
        if self.units.is_empty() {
            return Err(Error::Archive("archive has no units".into()));
        }
        if let Some(u) = self.units.iter().find(|u| u.dim == 0) {
            return Err(Error::Archive(format!("unit {} has zero feature_dim", u.id)));
        }
        let expected = *self.offsets.last().expect("offsets start with 0");
        if self.data.len() != expected {
            return Err(Error::Archive(format!(
                "data has {} values, units × records require {expected}",
                self.data.len()
            )));
        }
        Ok(())
    }

    /// Serialized bytes in the archive layout.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.check_writable()?;
        let manifest = Manifest {
            model_name: self.model_name.clone(),
            kind: self.kind,
            paradigm_id: self.paradigm_id.clone(),
            units: self.units.clone(),
            records: self.records.clone(),
        };
        let json = serde_json::to_vec(&manifest)?;
        let len = u32::try_from(json.len())
            .map_err(|_| Error::Archive("manifest exceeds 4 GiB".into()))?;
        let mut out = Vec::with_capacity(HEADER_LEN + json.len() + self.data.len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&json);
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let actual = bytes.len() as u64;
        if bytes.len() < MAGIC.len() {
            return Err(Error::Truncated {
                expected: HEADER_LEN as u64,
                actual,
            });
        }
        if &bytes[..8] != MAGIC {
            return Err(Error::Archive("bad magic".into()));
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated {
                expected: HEADER_LEN as u64,
                actual,
            });
        }
        let mlen = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let data_start = HEADER_LEN + mlen;
        if bytes.len() < data_start {
            return Err(Error::Truncated {
                expected: data_start as u64,
                actual,
            });
        }
        let manifest: Manifest = serde_json::from_slice(&bytes[HEADER_LEN..data_start])
            .map_err(|e| Error::Archive(format!("manifest: {e}")))?;
        let offsets = unit_offsets(&manifest.units, manifest.records.len());
        let n_values = *offsets.last().expect("offsets start with 0");
        let expected = data_start as u64 + 4 * n_values as u64;
        if actual < expected {
            return Err(Error::Truncated { expected, actual });
        }
        if actual > expected {
            return Err(Error::Archive(format!(
                "manifest/data length mismatch: manifest implies {expected} bytes, file has {actual}"
            )));
        }
        let data = bytes[data_start..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let archive = Self {
            model_name: manifest.model_name,
            kind: manifest.kind,
            paradigm_id: manifest.paradigm_id,
            units: manifest.units,
            records: manifest.records,
            data,
            offsets,
        };
        archive.check_writable()?;
        Ok(archive)
    }

    /// Hex SHA-256 of the serialized archive.
    pub fn checksum(&self) -> Result<String> {
        Ok(sha256_hex(&self.to_bytes()?))
    }

    /// Semantic and bit-level equality (NaN payloads compare by bits).
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.model_name == other.model_name
            && self.kind == other.kind
            && self.paradigm_id == other.paradigm_id
            && self.units == other.units
            && self.records == other.records
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn write_archive(archive: &ActivationArchive, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = archive.to_bytes()?;
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&bytes).map_err(io_err(path))?;
    Ok(())
}

pub fn read_archive(path: impl AsRef<Path>) -> Result<ActivationArchive> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    ActivationArchive::from_bytes(&bytes)
}

/// One broken invariant found by [`validate_archive`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    LabelMismatch { record: usize, pair_uid: String },
    UnpairedRecord { pair_uid: String, count: usize },
    DuplicateMember { pair_uid: String, member: Member },
    DataLength { expected: usize, actual: usize },
    ZeroDim { unit: UnitId },
    DuplicateUnit { unit: UnitId },
    NonFinite { unit: UnitId, record: usize, pair_uid: String },
    Empty,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LabelMismatch { record, pair_uid } => {
                write!(f, "label does not match member at record {record} ({pair_uid})")
            }
            Violation::UnpairedRecord { pair_uid, count } => {
                write!(f, "unpaired record: {pair_uid} appears {count} time(s)")
            }
            Violation::DuplicateMember { pair_uid, member } => {
                write!(f, "pair {pair_uid} has two {} members", member.as_str())
            }
            Violation::DataLength { expected, actual } => {
                write!(f, "data length {actual}, expected {expected}")
            }
            Violation::ZeroDim { unit } => write!(f, "unit {unit} has zero feature_dim"),
            Violation::DuplicateUnit { unit } => write!(f, "unit {unit} listed twice"),
            Violation::NonFinite {
                unit,
                record,
                pair_uid,
            } => write!(f, "non-finite value in unit {unit}, record {record} ({pair_uid})"),
            Violation::Empty => write!(f, "empty archive"),
        }
    }
}

/// Check every archive invariant; an empty list means valid.
pub fn validate_archive(archive: &ActivationArchive) -> Vec<Violation> {
    let mut out = Vec::new();
    if archive.records.is_empty() {
        out.push(Violation::Empty);
    }
    for (i, r) in archive.records.iter().enumerate() {
        if r.label != r.member.label() {
            out.push(Violation::LabelMismatch {
                record: i,
                pair_uid: r.pair_uid.clone(),
            });
        }
    }
    let mut by_pair: HashMap<&str, Vec<Member>> = HashMap::new();
    let mut order = Vec::new();
    for r in &archive.records {
        let entry = by_pair.entry(&r.pair_uid).or_default();
        if entry.is_empty() {
            order.push(r.pair_uid.as_str());
        }
        entry.push(r.member);
    }
    for uid in order {
        let members = &by_pair[uid];
        if members.len() != 2 {
            out.push(Violation::UnpairedRecord {
                pair_uid: uid.to_string(),
                count: members.len(),
            });
        } else if members[0] == members[1] {
            out.push(Violation::DuplicateMember {
                pair_uid: uid.to_string(),
                member: members[0],
            });
        }
    }
    let mut seen = std::collections::HashSet::new();
    for u in &archive.units {
        if u.dim == 0 {
            out.push(Violation::ZeroDim { unit: u.id });
        }
        if !seen.insert(u.id) {
            out.push(Violation::DuplicateUnit { unit: u.id });
        }
    }
    let expected = *archive.offsets.last().expect("offsets start with 0");
    if archive.data.len() != expected {
        out.push(Violation::DataLength {
            expected,
            actual: archive.data.len(),
        });
        return out;
    }
    for (ui, u) in archive.units.iter().enumerate() {
        for (ri, r) in archive.records.iter().enumerate() {
            if archive.features(ui, ri).iter().any(|v| !v.is_finite()) {
                out.push(Violation::NonFinite {
                    unit: u.id,
                    record: ri,
                    pair_uid: r.pair_uid.clone(),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ActivationArchive {
        let records = vec![Record::new("p0", Member::Good), Record::new("p0", Member::Bad)];
        let units = vec![UnitSpec {
            id: UnitId::layer(0),
            dim: 3,
        }];
        ActivationArchive::from_data(
            "m",
            ArchiveKind::Embedding,
            units,
            records,
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        )
        .unwrap()
    }

    #[test]
    fn byte_size_of_small_archive() {
        let a = small();
        let bytes = a.to_bytes().unwrap();
        let mlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        assert_eq!(bytes.len(), 8 + 4 + mlen + 24);
        assert_eq!(&bytes[..8], b"LPROBEA1");
        assert_eq!(a.features(0, 1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn empty_archive_refused() {
        let a = ActivationArchive::new(
            "m",
            ArchiveKind::Embedding,
            vec![UnitSpec {
                id: UnitId::layer(0),
                dim: 3,
            }],
            vec![],
        );
        let err = a.to_bytes().unwrap_err();
        assert!(err.to_string().contains("empty archive"), "{err}");
    }

    #[test]
    fn data_mismatch_refused() {
        let err = ActivationArchive::from_data(
            "m",
            ArchiveKind::Embedding,
            vec![UnitSpec {
                id: UnitId::layer(0),
                dim: 3,
            }],
            vec![Record::new("p", Member::Good)],
            vec![0.0; 2],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Archive(_)));
    }

    #[test]
    fn roundtrip_and_bad_magic() {
        let a = small().with_paradigm("ellipsis_n_bar_1");
        let bytes = a.to_bytes().unwrap();
        assert!(ActivationArchive::from_bytes(&bytes).unwrap().bit_eq(&a));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(ActivationArchive::from_bytes(&bad).unwrap_err().to_string().contains("magic"));
        let mut long = bytes;
        long.push(0);
        assert!(ActivationArchive::from_bytes(&long).unwrap_err().to_string().contains("mismatch"));
    }

    #[test]
    fn truncation_reports_counts() {
        let bytes = small().to_bytes().unwrap();
        let cut = &bytes[..bytes.len() - 5];
        match ActivationArchive::from_bytes(cut).unwrap_err() {
            Error::Truncated { expected, actual } => {
                assert_eq!(expected, bytes.len() as u64);
                assert_eq!(actual, cut.len() as u64);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn validation_findings() {
        assert!(validate_archive(&small()).is_empty());

        let mut a = small();
        a.records[1].pair_uid = "p1".into();
        let v = validate_archive(&a);
        assert_eq!(v.len(), 2);
        assert!(v[0].to_string().starts_with("unpaired record"));

        let mut a = small();
        a.features_mut(0, 1)[2] = f32::NAN;
        let v = validate_archive(&a);
        assert_eq!(
            v,
            vec![Violation::NonFinite {
                unit: UnitId::layer(0),
                record: 1,
                pair_uid: "p0".into()
            }]
        );

        let mut a = small();
        a.records[0].label = 0;
        assert!(matches!(validate_archive(&a)[0], Violation::LabelMismatch { record: 0, .. }));
    }
}
