//! Append-only audit trail: one record per decision tick.
//!
//! The on-disk form is JSON lines. A line is either a full record or a
//! response patch `{"line":"response","seq":N,"user_response":"..."}`; a
//! patch may appear at most once per seq. Reopening a file rebuilds the seq
//! counter by scanning it.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::SessionSignals;
use crate::coordinator::{Delivered, GroupDecision, Resolution, Suppressed, Trigger};
use crate::curator::HiddenItem;
use crate::recovery::{InboundDecision, Phase};
use crate::rewriter::RiskCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserResponse {
    #[default]
    None,
    Accepted,
    Overridden,
    Dismissed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TickStatus {
    Resolved,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostIntegrity {
    pub post_id: String,
    pub s_fact: f64,
    pub s_ai: Option<f64>,
    pub s_bias: Option<f64>,
}

/// What a tick did besides choosing actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    None,
    Session {
        signals: Option<SessionSignals>,
        risk: f64,
        cooldown_minutes: f64,
    },
    Feed {
        visible: Vec<String>,
        hidden: Vec<HiddenItem>,
        integrity: Vec<PostIntegrity>,
        locked: bool,
    },
    Draft {
        risk: f64,
        risk_categories: Vec<RiskCategory>,
        suggestions: usize,
    },
    Inbound {
        item_id: String,
        toxicity: f64,
        decision: Option<InboundDecision>,
        evidence_seq: Option<u64>,
        brigade: bool,
    },
    Recovery {
        event: String,
        phase: Phase,
        defined: bool,
    },
    Config {
        previous_digest: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub seq: u64,
    /// Logical time of the tick, from the input.
    pub timestamp: i64,
    /// Wall-clock write time. Excluded from replay comparison.
    pub recorded_at: i64,
    pub session_id: String,
    pub trigger: Trigger,
    pub status: TickStatus,
    pub decisions: Vec<GroupDecision>,
    pub interjection: Option<Delivered>,
    pub passive_cues: Vec<Delivered>,
    pub suppressed: Vec<Suppressed>,
    pub explanation: String,
    pub outcome: Outcome,
    pub user_response: UserResponse,
    pub config_digest: String,
}

impl AuditRecord {
    pub fn from_resolution(
        session_id: &str,
        trigger: Trigger,
        timestamp: i64,
        resolution: Resolution,
        outcome: Outcome,
        config_digest: &str,
    ) -> Self {
        Self {
            seq: 0,
            timestamp,
            recorded_at: 0,
            session_id: session_id.to_string(),
            trigger,
            status: TickStatus::Resolved,
            decisions: resolution.decisions,
            interjection: resolution.interjection,
            passive_cues: resolution.passive_cues,
            suppressed: resolution.suppressed,
            explanation: resolution.explanations.join(" "),
            outcome,
            user_response: UserResponse::None,
            config_digest: config_digest.to_string(),
        }
    }

    pub fn rejected(session_id: &str, trigger: Trigger, timestamp: i64, reason: String, config_digest: &str) -> Self {
        Self {
            status: TickStatus::Rejected,
            explanation: format!("Tick rejected: {reason}"),
            ..Self::from_resolution(session_id, trigger, timestamp, Resolution::default(), Outcome::None, config_digest)
        }
    }

    /// The record with wall-clock fields zeroed, for comparison.
    pub fn logical(&self) -> AuditRecord {
        AuditRecord { recorded_at: 0, ..self.clone() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "line", rename_all = "snake_case")]
enum Line {
    Record(AuditRecord),
    Response { seq: u64, user_response: UserResponse },
}

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("audit storage failed: {0}")]
    Storage(#[from] std::io::Error),
    #[error("audit log {path} line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("no audit record with seq {0}")]
    UnknownSeq(u64),
    #[error("response for seq {0} is already set")]
    ResponseAlreadySet(u64),
    #[error("a response cannot be reset to none")]
    NoneResponse,
}

/// Where serialized lines go. Each call must be durable before returning.
pub trait AuditBackend: Send {
    fn append_line(&mut self, line: &str) -> std::io::Result<()>;
}

pub struct FileBackend {
    file: File,
}

impl FileBackend {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        Ok(Self { file: OpenOptions::new().create(true).append(true).open(path)? })
    }
}

impl AuditBackend for FileBackend {
    fn append_line(&mut self, line: &str) -> std::io::Result<()> {
        let mut buf = Vec::with_capacity(line.len() + 1);
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
        self.file.write_all(&buf)?;
        self.file.sync_data()
    }
}

#[derive(Debug, Default)]
pub struct MemoryBackend {
    pub lines: Vec<String>,
}

impl AuditBackend for MemoryBackend {
    fn append_line(&mut self, line: &str) -> std::io::Result<()> {
        self.lines.push(line.to_string());
        Ok(())
    }
}

pub struct AuditStore {
    records: Vec<AuditRecord>,
    backend: Box<dyn AuditBackend>,
}

impl std::fmt::Debug for AuditStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AuditStore").field("records", &self.records.len()).finish_non_exhaustive()
    }
}

impl Default for AuditStore {
    fn default() -> Self {
        Self::in_memory()
    }
}

/// Parses an audit log, applying response patches in place.
pub fn parse_log(text: &str, path: &Path) -> Result<Vec<AuditRecord>, AuditError> {
    let mut records: Vec<AuditRecord> = Vec::new();
    let mut patched = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let corrupt = |message: String| AuditError::Corrupt { path: path.to_path_buf(), line: i + 1, message };
        match serde_json::from_str::<Line>(raw).map_err(|e| corrupt(e.to_string()))? {
            Line::Record(r) => {
                let expected = records.len() as u64 + 1;
                if r.seq != expected {
                    return Err(corrupt(format!("seq {} where {expected} was expected", r.seq)));
                }
                records.push(r);
            }
            Line::Response { seq, user_response } => {
                let rec = records
                    .get_mut((seq as usize).wrapping_sub(1))
                    .ok_or_else(|| corrupt(format!("response for unknown seq {seq}")))?;
                if !patched.insert(seq) || rec.user_response != UserResponse::None {
                    return Err(corrupt(format!("second response for seq {seq}")));
                }
                rec.user_response = user_response;
            }
        }
    }
    Ok(records)
}

impl AuditStore {
    pub fn new(backend: Box<dyn AuditBackend>) -> Self {
        Self { records: Vec::new(), backend }
    }

    pub fn in_memory() -> Self {
        Self::new(Box::new(MemoryBackend::default()))
    }

    /// Opens (or creates) a file-backed store, recovering existing records.
    pub fn open(path: &Path) -> Result<Self, AuditError> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(e.into()),
        };
        let records = parse_log(&text, path)?;
        Ok(Self { records, backend: Box::new(FileBackend::open(path)?) })
    }

    pub fn load(path: &Path) -> Result<Vec<AuditRecord>, AuditError> {
        parse_log(&std::fs::read_to_string(path)?, path)
    }

    pub fn next_seq(&self) -> u64 {
        self.records.len() as u64 + 1
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[AuditRecord] {
        &self.records
    }

    pub fn get(&self, seq: u64) -> Option<&AuditRecord> {
        self.records.get((seq as usize).wrapping_sub(1))
    }

    /// Records with seq strictly greater than `seq`.
    pub fn since(&self, seq: u64) -> &[AuditRecord] {
        let start = (seq as usize).min(self.records.len());
        &self.records[start..]
    }

    /// Assigns the next seq and persists the record before acknowledging.
    pub fn append(&mut self, mut record: AuditRecord) -> Result<u64, AuditError> {
        record.seq = self.next_seq();
        let line = serde_json::to_string(&Line::Record(record.clone())).expect("audit record serializes");
        self.backend.append_line(&line)?;
        self.records.push(record);
        Ok(self.next_seq() - 1)
    }

    pub fn record_user_response(&mut self, seq: u64, response: UserResponse) -> Result<&AuditRecord, AuditError> {
        if response == UserResponse::None {
            return Err(AuditError::NoneResponse);
        }
        let current = self.get(seq).ok_or(AuditError::UnknownSeq(seq))?.user_response;
        if current != UserResponse::None {
            return Err(AuditError::ResponseAlreadySet(seq));
        }
        let line = serde_json::to_string(&Line::Response { seq, user_response: response }).expect("patch serializes");
        self.backend.append_line(&line)?;
        let rec = &mut self.records[seq as usize - 1];
        rec.user_response = response;
        Ok(rec)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Divergence {
    #[error("replay diverged at seq {seq}: {field} differs")]
    Field { seq: u64, field: String },
    #[error("replay diverged at seq {seq}: stored log has a record the replay did not produce")]
    Missing { seq: u64 },
    #[error("replay diverged at seq {seq}: replay produced a record absent from the stored log")]
    Extra { seq: u64 },
}

impl Divergence {
    pub fn seq(&self) -> u64 {
        match self {
            Divergence::Field { seq, .. } | Divergence::Missing { seq } | Divergence::Extra { seq } => *seq,
        }
    }
}

/// Compares two record streams field-for-field, ignoring wall-clock fields.
pub fn compare_records(stored: &[AuditRecord], replayed: &[AuditRecord]) -> Result<(), Divergence> {
    for (i, pair) in stored.iter().zip(replayed).enumerate() {
        let (a, b) = (pair.0.logical(), pair.1.logical());
        if a == b {
            continue;
        }
        let seq = i as u64 + 1;
        let (va, vb) = (serde_json::to_value(&a).expect("serializes"), serde_json::to_value(&b).expect("serializes"));
        let field = match (va, vb) {
            (serde_json::Value::Object(ma), serde_json::Value::Object(mb)) => {
                ma.iter().find(|(k, v)| mb.get(*k) != Some(v)).map(|(k, _)| k.clone()).unwrap_or_else(|| "record".into())
            }
            _ => "record".into(),
        };
        return Err(Divergence::Field { seq, field });
    }
    match stored.len().cmp(&replayed.len()) {
        std::cmp::Ordering::Greater => Err(Divergence::Missing { seq: replayed.len() as u64 + 1 }),
        std::cmp::Ordering::Less => Err(Divergence::Extra { seq: stored.len() as u64 + 1 }),
        std::cmp::Ordering::Equal => Ok(()),
    }
}
