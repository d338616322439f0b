//! Hash-chained evidence records.
//!
//! Each record's digest is SHA-256 over
//! `seq (u64 BE) ‖ captured_at (i64 BE) ‖ len(item) (u64 BE) ‖ item JSON ‖ prev_hash`.
//! The first record links to the all-zero digest. On disk a record is one
//! JSON line with hex digests; verification also requires every line to be
//! byte-identical to its canonical serialization, so any edit to a persisted
//! line is detected even when it parses to an equivalent value.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const GENESIS_HASH: [u8; 32] = [0u8; 32];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InboundChannel {
    Reply,
    Mention,
    DirectMessage,
}

/// Immutable snapshot of offending content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceItem {
    pub item_id: String,
    pub sender_id: String,
    pub channel: InboundChannel,
    pub body: String,
    pub toxicity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceRecord {
    pub seq: u64,
    pub captured_at: i64,
    pub item: EvidenceItem,
    #[serde(with = "hex_digest")]
    pub prev_hash: [u8; 32],
    #[serde(with = "hex_digest")]
    pub hash: [u8; 32],
}

mod hex_digest {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(d))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let mut out = [0u8; 32];
        hex::decode_to_slice(&s, &mut out).map_err(D::Error::custom)?;
        Ok(out)
    }
}

pub fn record_digest(seq: u64, captured_at: i64, item: &EvidenceItem, prev_hash: &[u8; 32]) -> [u8; 32] {
    let item_bytes = serde_json::to_vec(item).expect("evidence item serializes");
    let mut h = Sha256::new();
    h.update(seq.to_be_bytes());
    h.update(captured_at.to_be_bytes());
    h.update((item_bytes.len() as u64).to_be_bytes());
    h.update(&item_bytes);
    h.update(prev_hash);
    h.finalize().into()
}

impl EvidenceRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("evidence record serializes")
    }

    fn digest_ok(&self) -> bool {
        record_digest(self.seq, self.captured_at, &self.item, &self.prev_hash) == self.hash
    }
}

#[derive(Debug, Error)]
pub enum EvidenceError {
    /// `seq` is the 1-based position of the first bad record.
    #[error("evidence chain broken at record {seq}: {reason}")]
    Corrupt { seq: u64, reason: String },
    #[error("evidence io at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn check_link(index: usize, rec: &EvidenceRecord, prev: &[u8; 32]) -> Result<(), EvidenceError> {
    let seq = index as u64 + 1;
    let fail = |reason: &str| Err(EvidenceError::Corrupt { seq, reason: reason.to_string() });
    if rec.seq != seq {
        return fail("sequence number out of order");
    }
    if &rec.prev_hash != prev {
        return fail("previous-hash link mismatch");
    }
    if !rec.digest_ok() {
        return fail("digest mismatch");
    }
    Ok(())
}

/// Checks every link of an in-memory chain.
pub fn verify_chain(records: &[EvidenceRecord]) -> Result<(), EvidenceError> {
    let mut prev = GENESIS_HASH;
    for (i, r) in records.iter().enumerate() {
        check_link(i, r, &prev)?;
        prev = r.hash;
    }
    Ok(())
}

/// Parses and verifies persisted JSON lines.
pub fn verify_lines(text: &str) -> Result<Vec<EvidenceRecord>, EvidenceError> {
    let mut records = Vec::new();
    let mut prev = GENESIS_HASH;
    for (i, line) in text.lines().enumerate() {
        let seq = i as u64 + 1;
        let rec: EvidenceRecord = serde_json::from_str(line)
            .map_err(|e| EvidenceError::Corrupt { seq, reason: format!("unparseable: {e}") })?;
        if rec.to_line() != line {
            return Err(EvidenceError::Corrupt { seq, reason: "non-canonical encoding".into() });
        }
        check_link(i, &rec, &prev)?;
        prev = rec.hash;
        records.push(rec);
    }
    Ok(records)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvidenceChain {
    records: Vec<EvidenceRecord>,
}

impl EvidenceChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<EvidenceRecord>) -> Result<Self, EvidenceError> {
        verify_chain(&records)?;
        Ok(Self { records })
    }

    pub fn records(&self) -> &[EvidenceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn verify(&self) -> Result<(), EvidenceError> {
        verify_chain(&self.records)
    }

    /// Appends a record after re-verifying the chain. Corruption is a hard
    /// error; nothing is repaired.
    pub fn capture_evidence(&mut self, item: EvidenceItem, captured_at: i64) -> Result<&EvidenceRecord, EvidenceError> {
        self.verify()?;
        let prev = self.records.last().map_or(GENESIS_HASH, |r| r.hash);
        let seq = self.records.len() as u64 + 1;
        let hash = record_digest(seq, captured_at, &item, &prev);
        self.records.push(EvidenceRecord { seq, captured_at, item, prev_hash: prev, hash });
        Ok(self.records.last().expect("just pushed"))
    }
}

/// Append-only file mirror of an [`EvidenceChain`].
pub struct EvidenceFile {
    path: PathBuf,
    file: File,
    chain: EvidenceChain,
}

impl EvidenceFile {
    pub fn open(path: &Path) -> Result<Self, EvidenceError> {
        let io = |source| EvidenceError::Io { path: path.to_path_buf(), source };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(io(e)),
        };
        let chain = EvidenceChain { records: verify_lines(&text)? };
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        Ok(Self { path: path.to_path_buf(), file, chain })
    }

    pub fn chain(&self) -> &EvidenceChain {
        &self.chain
    }

    pub fn append(&mut self, item: EvidenceItem, captured_at: i64) -> Result<EvidenceRecord, EvidenceError> {
        let rec = self.chain.capture_evidence(item, captured_at)?.clone();
        let mut line = rec.to_line().into_bytes();
        line.push(b'\n');
        let io = |source| EvidenceError::Io { path: self.path.clone(), source };
        self.file.write_all(&line).map_err(io)?;
        self.file.sync_data().map_err(|source| EvidenceError::Io { path: self.path.clone(), source })?;
        Ok(rec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(n: u32) -> EvidenceItem {
        EvidenceItem {
            item_id: format!("r{n}"),
            sender_id: format!("u{n}"),
            channel: InboundChannel::Reply,
            body: format!("toxic reply number {n}"),
            toxicity: 0.9,
        }
    }

    fn chain(n: u32) -> EvidenceChain {
        let mut c = EvidenceChain::new();
        for i in 1..=n {
            c.capture_evidence(item(i), 1_000 * i as i64).unwrap();
        }
        c
    }

    #[test]
    fn genesis_links_to_zero() {
        assert_eq!(chain(1).records()[0].prev_hash, GENESIS_HASH);
    }

    #[test]
    fn append_then_verify() {
        chain(5).verify().unwrap();
    }

    #[test]
    fn tampering_with_second_of_three_is_located() {
        let mut c = chain(3);
        c.records[1].item.body = "edited".into();
        match c.verify() {
            Err(EvidenceError::Corrupt { seq, .. }) => assert_eq!(seq, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(c.capture_evidence(item(9), 9), Err(EvidenceError::Corrupt { seq: 2, .. })));
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn corrupt_tail_blocks_append() {
        let mut c = chain(2);
        c.records[1].captured_at += 1;
        assert!(matches!(c.capture_evidence(item(3), 3), Err(EvidenceError::Corrupt { seq: 2, .. })));
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn persisted_lines_reject_case_flips_in_digests() {
        let c = chain(2);
        let text: String = c.records().iter().map(|r| r.to_line() + "\n").collect();
        assert_eq!(verify_lines(&text).unwrap().len(), 2);
        let pos = text.find("\"hash\":\"").unwrap() + 8;
        let mut bytes = text.clone().into_bytes();
        // Find a hex letter in the digest and flip its case bit.
        let off = bytes[pos..].iter().position(|b| b.is_ascii_lowercase()).unwrap();
        bytes[pos + off] ^= 0x20;
        let err = verify_lines(std::str::from_utf8(&bytes).unwrap()).unwrap_err();
        assert!(matches!(err, EvidenceError::Corrupt { seq: 1, .. }));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("evidence.jsonl");
        {
            let mut f = EvidenceFile::open(&path).unwrap();
            f.append(item(1), 10).unwrap();
            f.append(item(2), 20).unwrap();
        }
        let mut f = EvidenceFile::open(&path).unwrap();
        assert_eq!(f.chain().len(), 2);
        assert_eq!(f.append(item(3), 30).unwrap().seq, 3);
        std::fs::write(&path, std::fs::read_to_string(&path).unwrap().replace("r2", "r7")).unwrap();
        assert!(EvidenceFile::open(&path).is_err());
    }
}
