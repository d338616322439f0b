//! Fact-check database loaded from JSON lines, one [`FactRecord`] per line.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::claims::Claim;
use crate::text::normalize_key;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stance {
    Supports,
    Contradicts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactRecord {
    pub claim_key: String,
    pub stance: Stance,
    pub source_url: String,
    pub source_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactHit {
    pub record: FactRecord,
    pub similarity: f64,
}

#[derive(Debug, Error)]
pub enum FactDbError {
    #[error("cannot read fact database {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("fact database line {line}: {message}")]
    Line { line: usize, message: String },
}

/// Lookup interface; a live fact-check client can stand in for [`FactDb`].
pub trait FactSource: Send + Sync {
    fn query(&self, claim: &Claim) -> Vec<FactHit>;
}

/// Minimum token-set Jaccard similarity for a fuzzy match, as a ratio.
const JACCARD_NUM: usize = 3;
const JACCARD_DEN: usize = 5;

#[derive(Debug, Clone, Default)]
pub struct FactDb {
    records: Vec<FactRecord>,
    token_sets: Vec<BTreeSet<String>>,
    by_token: HashMap<String, Vec<usize>>,
}

fn token_set(key: &str) -> BTreeSet<String> {
    key.split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect()
}

impl FactDb {
    pub fn new(records: impl IntoIterator<Item = FactRecord>) -> Self {
        let mut db = FactDb::default();
        for mut r in records {
            r.claim_key = normalize_key(&r.claim_key);
            let idx = db.records.len();
            let set = token_set(&r.claim_key);
            for t in &set {
                db.by_token.entry(t.clone()).or_default().push(idx);
            }
            db.token_sets.push(set);
            db.records.push(r);
        }
        db
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, FactDbError> {
        let mut records = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: FactRecord = serde_json::from_str(line)
                .map_err(|e| FactDbError::Line { line: n + 1, message: e.to_string() })?;
            if r.source_url.trim().is_empty() {
                return Err(FactDbError::Line { line: n + 1, message: "source_url is empty".into() });
            }
            records.push(r);
        }
        Ok(Self::new(records))
    }

    pub fn load(path: &Path) -> Result<Self, FactDbError> {
        let text = fs::read_to_string(path)
            .map_err(|source| FactDbError::Read { path: path.to_path_buf(), source })?;
        Self::parse_jsonl(&text)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[FactRecord] {
        &self.records
    }
}

/// Records whose key equals the claim key or shares a token-set Jaccard
/// similarity of at least 0.6, by descending similarity then source name.
pub fn query_fact_db(claim: &Claim, db: &FactDb) -> Vec<FactHit> {
    let claim_set = token_set(&claim.claim_key);
    let mut candidates: BTreeSet<usize> = BTreeSet::new();
    for t in &claim_set {
        if let Some(ids) = db.by_token.get(t) {
            candidates.extend(ids.iter().copied());
        }
    }
    let mut hits: Vec<(usize, usize, usize)> = Vec::new();
    for idx in candidates {
        let set = &db.token_sets[idx];
        let exact = db.records[idx].claim_key == claim.claim_key;
        let inter = set.intersection(&claim_set).count();
        let union = set.len() + claim_set.len() - inter;
        if exact || inter * JACCARD_DEN >= union * JACCARD_NUM {
            let (inter, union) = if exact { (1, 1) } else { (inter, union) };
            hits.push((idx, inter, union));
        }
    }
    // Compare similarities as exact fractions.
    hits.sort_by(|a, b| {
        (b.1 * a.2)
            .cmp(&(a.1 * b.2))
            .then_with(|| db.records[a.0].source_name.cmp(&db.records[b.0].source_name))
            .then_with(|| a.0.cmp(&b.0))
    });
    hits.into_iter()
        .map(|(idx, inter, union)| FactHit {
            record: db.records[idx].clone(),
            similarity: inter as f64 / union as f64,
        })
        .collect()
}

impl FactSource for FactDb {
    fn query(&self, claim: &Claim) -> Vec<FactHit> {
        query_fact_db(claim, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(key: &str, stance: Stance, name: &str) -> FactRecord {
        FactRecord {
            claim_key: key.into(),
            stance,
            source_url: format!("https://facts.example/{}", name.to_lowercase()),
            source_name: name.into(),
        }
    }

    #[test]
    fn miss_returns_nothing() {
        let db = FactDb::new([rec("the bridge collapsed", Stance::Supports, "A")]);
        assert!(query_fact_db(&Claim::from_text("Vaccines contain microchips today"), &db).is_empty());
    }

    #[test]
    fn exact_hit_has_similarity_one() {
        let db = FactDb::new([rec("The dam failed on Monday", Stance::Contradicts, "A")]);
        let hits = query_fact_db(&Claim::from_text("the dam failed on monday"), &db);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].similarity, 1.0);
        assert_eq!(hits[0].record.claim_key, "the dam failed on monday");
    }

    #[test]
    fn three_of_four_shared_tokens_is_a_match() {
        // {the, dam, failed, monday} vs {the, dam, failed, tuesday}: 3 / 5 = 0.6
        let db = FactDb::new([rec("the dam failed tuesday", Stance::Supports, "A")]);
        let hits = query_fact_db(&Claim::from_text("the dam failed monday"), &db);
        assert_eq!(hits.len(), 1);
        assert!((hits[0].similarity - 0.6).abs() < 1e-12);
    }

    #[test]
    fn below_threshold_is_not_a_match() {
        // 3 shared of 6 distinct: 0.5
        let db = FactDb::new([rec("the dam failed tuesday night", Stance::Supports, "A")]);
        assert!(query_fact_db(&Claim::from_text("the dam failed monday"), &db).is_empty());
    }

    #[test]
    fn ordering_by_similarity_then_source_name() {
        let db = FactDb::new([
            rec("the dam failed tuesday", Stance::Supports, "Zeta"),
            rec("the dam failed monday", Stance::Supports, "Mid"),
            rec("the dam failed friday", Stance::Supports, "Alpha"),
        ]);
        let hits = query_fact_db(&Claim::from_text("the dam failed monday"), &db);
        let names: Vec<_> = hits.iter().map(|h| h.record.source_name.as_str()).collect();
        assert_eq!(names, vec!["Mid", "Alpha", "Zeta"]);
    }

    #[test]
    fn jsonl_errors_name_the_line() {
        let text = "{\"claim_key\":\"a b\",\"stance\":\"supports\",\"source_url\":\"u\",\"source_name\":\"n\"}\nnot json\n";
        match FactDb::parse_jsonl(text) {
            Err(FactDbError::Line { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let empty_url = "{\"claim_key\":\"a b\",\"stance\":\"supports\",\"source_url\":\" \",\"source_name\":\"n\"}";
        assert!(FactDb::parse_jsonl(empty_url).is_err());
    }

    #[test]
    fn missing_file_fails_at_load() {
        assert!(matches!(FactDb::load(Path::new("/nonexistent/facts.jsonl")), Err(FactDbError::Read { .. })));
    }
}
