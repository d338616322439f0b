//! Political-lean estimate from two lexicons.

use serde::{Deserialize, Serialize};

use super::detect::DetectorError;
use crate::lexicon::{defaults, WordList};
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasLabel {
    Left,
    Center,
    Right,
}

pub const LABEL_THRESHOLD: f64 = 0.2;

impl BiasLabel {
    /// Strict thresholds: exactly ±0.2 is center.
    pub fn from_score(score: f64) -> Self {
        if score < -LABEL_THRESHOLD {
            BiasLabel::Left
        } else if score > LABEL_THRESHOLD {
            BiasLabel::Right
        } else {
            BiasLabel::Center
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasEstimate {
    pub score: f64,
    pub label: BiasLabel,
    pub left_hits: usize,
    pub right_hits: usize,
}

pub trait BiasEstimator: Send + Sync {
    fn estimate(&self, body: &str) -> Result<BiasEstimate, DetectorError>;
}

#[derive(Debug, Clone)]
pub struct BiasLexicon {
    pub left: WordList,
    pub right: WordList,
}

impl BiasLexicon {
    pub fn builtin() -> Self {
        Self { left: WordList::parse(defaults::BIAS_LEFT), right: WordList::parse(defaults::BIAS_RIGHT) }
    }
}

/// Lexicon-ratio estimator. Without a lexicon every call reports the
/// component as unavailable.
#[derive(Debug, Clone)]
pub struct LexiconBiasEstimator {
    lexicon: Option<BiasLexicon>,
}

impl LexiconBiasEstimator {
    pub fn new(lexicon: Option<BiasLexicon>) -> Self {
        Self { lexicon }
    }

    pub fn builtin() -> Self {
        Self::new(Some(BiasLexicon::builtin()))
    }
}

impl BiasEstimator for LexiconBiasEstimator {
    fn estimate(&self, body: &str) -> Result<BiasEstimate, DetectorError> {
        let lex = self.lexicon.as_ref().ok_or_else(|| DetectorError("bias lexicon not loaded".into()))?;
        let tokens = tokenize(body);
        Ok(estimate_from_hits(lex.left.count(&tokens), lex.right.count(&tokens)))
    }
}

pub fn estimate_from_hits(left_hits: usize, right_hits: usize) -> BiasEstimate {
    let total = (left_hits + right_hits).max(1) as f64;
    let score = (right_hits as f64 - left_hits as f64) / total;
    BiasEstimate { score, label: BiasLabel::from_score(score), left_hits, right_hits }
}

pub fn estimate_bias(body: &str, lexicon: &BiasLexicon) -> BiasEstimate {
    let tokens = tokenize(body);
    estimate_from_hits(lexicon.left.count(&tokens), lexicon.right.count(&tokens))
}
