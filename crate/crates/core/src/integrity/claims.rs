//! Rule-based claim extraction.
//!
//! A sentence yields a claim when it is declarative (no `?` terminator), has
//! at least four tokens and contains a verb token. Verb detection uses a
//! closed list of common verbs and auxiliaries plus the `-ed` past-tense
//! suffix.

use serde::{Deserialize, Serialize};

use crate::model::PostContent;
use crate::text::{normalize_key, sentences, word_spans};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub claim_key: String,
    pub surface_text: String,
    pub entities: Vec<String>,
}

impl Claim {
    pub fn from_text(text: &str) -> Self {
        Self { claim_key: normalize_key(text), surface_text: text.to_string(), entities: Vec::new() }
    }
}

/// Replaceable claim extractor, e.g. a model-backed NER pipeline.
pub trait ClaimExtractor: Send + Sync {
    fn extract(&self, post: &PostContent) -> Vec<Claim>;
}

const MIN_TOKENS: usize = 4;

const VERBS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "do", "does", "did",
    "will", "would", "can", "could", "shall", "should", "may", "might", "must", "won't", "can't",
    "isn't", "aren't", "wasn't", "weren't", "doesn't", "don't", "didn't", "hasn't", "haven't",
    "cause", "causes", "cure", "cures", "kill", "kills", "make", "makes", "made", "say", "says",
    "said", "show", "shows", "shown", "prove", "proves", "proven", "contain", "contains", "reduce",
    "reduces", "increase", "increases", "rise", "rises", "rose", "fall", "falls", "fell", "win",
    "wins", "won", "lose", "loses", "lost", "give", "gives", "gave", "take", "takes", "took", "get",
    "gets", "got", "go", "goes", "went", "come", "comes", "came", "see", "sees", "saw", "know",
    "knows", "knew", "find", "finds", "found", "hold", "holds", "held", "lead", "leads", "led",
    "run", "runs", "ran", "spread", "spreads", "build", "builds", "built", "pay", "pays", "paid",
    "ban", "bans", "need", "needs", "plan", "plans", "vote", "votes", "leave", "leaves", "left",
    "hit", "hits", "cost", "costs", "protect", "protects", "prevent", "prevents", "control",
    "controls", "own", "owns", "sell", "sells", "sold", "buy", "buys", "bought", "claim", "claims",
    "report", "reports", "warn", "warns", "confirm", "confirms", "deny", "denies", "broke", "broken",
];

fn is_verb(token: &str) -> bool {
    VERBS.contains(&token) || (token.len() >= 4 && token.ends_with("ed"))
}

fn entities(text: &str) -> Vec<String> {
    let words = word_spans(text);
    let mut out: Vec<String> = Vec::new();
    let mut run: Vec<&str> = Vec::new();
    for (i, (_, w)) in words.iter().enumerate() {
        let capitalized = w.chars().next().is_some_and(char::is_uppercase);
        let numeric = w.chars().any(|c| c.is_ascii_digit());
        if (capitalized && i > 0) || numeric {
            run.push(w);
        } else if !run.is_empty() {
            out.push(run.join(" "));
            run.clear();
        }
    }
    if !run.is_empty() {
        out.push(run.join(" "));
    }
    out.dedup();
    out
}

/// The baseline extractor.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleClaimExtractor;

impl ClaimExtractor for RuleClaimExtractor {
    fn extract(&self, post: &PostContent) -> Vec<Claim> {
        extract_claims(post)
    }
}

pub fn extract_claims(post: &PostContent) -> Vec<Claim> {
    sentences(&post.body)
        .into_iter()
        .filter(|s| !s.is_question())
        .filter_map(|s| {
            let key = normalize_key(s.text);
            let tokens: Vec<&str> = key.split(' ').filter(|t| !t.is_empty()).collect();
            if tokens.len() < MIN_TOKENS || !tokens.iter().any(|t| is_verb(t)) {
                return None;
            }
            Some(Claim { claim_key: key, surface_text: s.text.to_string(), entities: entities(s.text) })
        })
        .collect()
}
