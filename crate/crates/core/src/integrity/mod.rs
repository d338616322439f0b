//! Per-post integrity meter: fact consistency, AI-generation likelihood and
//! political lean, each with a plain-language explanation.
//!
//! The fact component counts a claim as conflicting only when the database
//! holds at least one record for it *and* one of those records contradicts
//! it. Claims with no coverage leave the score untouched:
//!
//! ```text
//! s_fact = 1 − conflicts / max(total_claims, 1)
//! ```

mod bias;
mod claims;
mod detect;
mod factdb;

pub use bias::{
    estimate_bias, estimate_from_hits, BiasEstimate, BiasEstimator, BiasLabel, BiasLexicon,
    LexiconBiasEstimator, LABEL_THRESHOLD,
};
pub use claims::{extract_claims, Claim, ClaimExtractor, RuleClaimExtractor};
pub use detect::{detect_ai_generated, style_features, AiDetector, DetectorError, StyleFeatures, StylometricDetector};
pub use factdb::{query_fact_db, FactDb, FactDbError, FactHit, FactRecord, FactSource, Stance};

use serde::{Deserialize, Serialize};

use crate::model::PostContent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimVerdict {
    pub claim_key: String,
    pub sources: usize,
    pub contradicted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrityExplanations {
    pub fact: String,
    pub ai: String,
    pub bias: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrityScore {
    pub s_fact: f64,
    /// `None` when the detector failed; see `explanations.ai`.
    pub s_ai: Option<f64>,
    pub s_bias: Option<f64>,
    pub bias_label: Option<BiasLabel>,
    pub total_claims: usize,
    pub conflicts: usize,
    pub claims: Vec<ClaimVerdict>,
    pub explanations: IntegrityExplanations,
    pub source_links: Vec<String>,
}

/// The assessor's pluggable parts.
pub struct IntegrityAssessor {
    pub extractor: Box<dyn ClaimExtractor>,
    pub facts: Box<dyn FactSource>,
    pub ai: Box<dyn AiDetector>,
    pub bias: Box<dyn BiasEstimator>,
}

impl IntegrityAssessor {
    pub fn new(facts: FactDb, bias: Option<BiasLexicon>) -> Self {
        Self {
            extractor: Box::new(RuleClaimExtractor),
            facts: Box::new(facts),
            ai: Box::new(StylometricDetector),
            bias: Box::new(LexiconBiasEstimator::new(bias)),
        }
    }

    pub fn baseline(facts: FactDb) -> Self {
        Self::new(facts, Some(BiasLexicon::builtin()))
    }

    pub fn assess(&self, post: &PostContent) -> IntegrityScore {
        assess_post(post, self.extractor.as_ref(), self.facts.as_ref(), self.ai.as_ref(), self.bias.as_ref())
    }
}

impl std::fmt::Debug for IntegrityAssessor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IntegrityAssessor").field("ai", &self.ai.name()).finish_non_exhaustive()
    }
}

pub fn assess_post(
    post: &PostContent,
    extractor: &dyn ClaimExtractor,
    facts: &dyn FactSource,
    ai: &dyn AiDetector,
    bias: &dyn BiasEstimator,
) -> IntegrityScore {
    let claims = extractor.extract(post);
    let total_claims = claims.len();
    let mut conflicts = 0;
    let mut verdicts = Vec::with_capacity(total_claims);
    let mut source_links: Vec<String> = Vec::new();
    let mut contradicting_sources: Vec<String> = Vec::new();
    for claim in &claims {
        let hits = facts.query(claim);
        let contradicted = !hits.is_empty() && hits.iter().any(|h| h.record.stance == Stance::Contradicts);
        if contradicted {
            conflicts += 1;
        }
        for h in &hits {
            if !source_links.contains(&h.record.source_url) {
                source_links.push(h.record.source_url.clone());
            }
            if h.record.stance == Stance::Contradicts && !contradicting_sources.contains(&h.record.source_name) {
                contradicting_sources.push(h.record.source_name.clone());
            }
        }
        verdicts.push(ClaimVerdict { claim_key: claim.claim_key.clone(), sources: hits.len(), contradicted });
    }
    let s_fact = 1.0 - conflicts as f64 / total_claims.max(1) as f64;
    let covered = verdicts.iter().filter(|v| v.sources > 0).count();

    let fact = if total_claims == 0 {
        "No checkable factual claims found in this post.".to_string()
    } else if conflicts == 0 {
        format!(
            "{total_claims} claim(s) found; {covered} matched fact-check records and none were contradicted."
        )
    } else {
        format!(
            "{conflicts} of {total_claims} claim(s) are contradicted by fact-check sources ({}).",
            contradicting_sources.join(", ")
        )
    };

    let (s_ai, ai_text) = match ai.probability(&post.body) {
        Ok(p) => {
            let p = p.clamp(0.0, 1.0);
            let band = if p >= 0.7 {
                "likely"
            } else if p >= 0.4 {
                "uncertain whether"
            } else {
                "unlikely"
            };
            (Some(p), format!("Text is {band} machine-generated ({:.0}% estimate from {}).", p * 100.0, ai.name()))
        }
        Err(e) => (None, format!("AI-generation check unavailable: {}.", e.0)),
    };

    let (s_bias, bias_label, bias_text) = match bias.estimate(&post.body) {
        Ok(e) => {
            let text = if e.left_hits + e.right_hits == 0 {
                "No politically loaded terms found; lean reads as center.".to_string()
            } else {
                format!(
                    "Lean reads as {} ({} left-coded, {} right-coded term(s); score {:+.2}).",
                    match e.label {
                        BiasLabel::Left => "left",
                        BiasLabel::Center => "center",
                        BiasLabel::Right => "right",
                    },
                    e.left_hits,
                    e.right_hits,
                    e.score
                )
            };
            (Some(e.score), Some(e.label), text)
        }
        Err(e) => (None, None, format!("Bias estimate unavailable: {}.", e.0)),
    };

    let media = (!post.media.is_empty()).then(|| {
        format!("{} attached media item(s) unassessed; only text is checked.", post.media.len())
    });

    IntegrityScore {
        s_fact,
        s_ai,
        s_bias,
        bias_label,
        total_claims,
        conflicts,
        claims: verdicts,
        explanations: IntegrityExplanations { fact, ai: ai_text, bias: bias_text, media },
        source_links,
    }
}
