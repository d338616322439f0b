//! Draft analysis and rewrite suggestions. Suggestions never replace the
//! draft; keeping the original is always an option.

use std::io::{Read, Write};
use std::net::ToSocketAddrs;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{defaults, Replacements, WordList};
use crate::net::NetworkLayer;
use crate::text::{is_all_caps, sentences, tokenize, word_spans};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskCategory {
    Insult,
    Absolutism,
    Profanity,
    Shouting,
    Accusation,
}

impl RiskCategory {
    pub fn weight(self) -> f64 {
        match self {
            RiskCategory::Profanity => 0.3,
            RiskCategory::Insult => 0.3,
            RiskCategory::Accusation => 0.2,
            RiskCategory::Absolutism => 0.1,
            RiskCategory::Shouting => 0.1,
        }
    }

    fn reading(self) -> &'static str {
        match self {
            RiskCategory::Insult => "a personal insult",
            RiskCategory::Absolutism => "a sweeping generalization",
            RiskCategory::Profanity => "profane",
            RiskCategory::Shouting => "shouting",
            RiskCategory::Accusation => "an accusation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DraftAnalysis {
    /// Sorted, without duplicates.
    pub risk_categories: Vec<RiskCategory>,
    pub risk: f64,
    pub preview: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tone {
    Neutral,
    Empathetic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteSuggestion {
    pub tone: Tone,
    pub text: String,
    pub transforms_applied: Vec<String>,
}

/// What the composer shows: suggestions plus the always-present original.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteOffer {
    pub original: String,
    pub keep_original_available: bool,
    pub suggestions: Vec<RewriteSuggestion>,
    pub provider_fallback: bool,
}

pub const MAX_SUGGESTIONS: usize = 3;
pub const FALLBACK_TRANSFORM: &str = "provider_fallback";

#[derive(Debug, Clone)]
pub struct RewriteLexicons {
    pub profanity: WordList,
    pub insults: WordList,
    pub intensifiers: Replacements,
    pub accusation_verbs: WordList,
}

impl RewriteLexicons {
    pub fn builtin() -> Self {
        Self {
            profanity: WordList::parse(defaults::PROFANITY),
            insults: WordList::parse(defaults::INSULTS),
            intensifiers: Replacements::parse(defaults::INTENSIFIERS).expect("builtin intensifiers parse"),
            accusation_verbs: WordList::parse(defaults::ACCUSATION_VERBS),
        }
    }
}

impl Default for RewriteLexicons {
    fn default() -> Self {
        Self::builtin()
    }
}

const SECOND_PERSON: &[&str] = &["you", "you're", "your", "youre"];

fn is_shouting(body: &str) -> bool {
    let words: Vec<&str> = word_spans(body)
        .into_iter()
        .map(|(_, w)| w)
        .filter(|w| w.chars().filter(|c| c.is_alphabetic()).count() >= 2)
        .collect();
    let caps = words.iter().filter(|w| is_all_caps(w)).count();
    caps >= 2 && caps * 2 >= words.len()
}

fn is_accusation(sentence: &str, lex: &RewriteLexicons) -> bool {
    let tokens = tokenize(sentence);
    let Some(first) = tokens.first() else { return false };
    if !SECOND_PERSON.contains(&first.as_str()) {
        return false;
    }
    tokens.iter().any(|t| lex.accusation_verbs.contains_word(t) || lex.intensifiers.contains(t))
}

pub fn analyze_draft(body: &str) -> DraftAnalysis {
    analyze_draft_with(body, &RewriteLexicons::builtin())
}

pub fn analyze_draft_with(body: &str, lex: &RewriteLexicons) -> DraftAnalysis {
    let tokens = tokenize(body);
    let mut cats = Vec::new();
    if lex.insults.count(&tokens) > 0 {
        cats.push(RiskCategory::Insult);
    }
    if tokens.iter().any(|t| lex.intensifiers.contains(t)) {
        cats.push(RiskCategory::Absolutism);
    }
    if lex.profanity.count(&tokens) > 0 {
        cats.push(RiskCategory::Profanity);
    }
    if is_shouting(body) {
        cats.push(RiskCategory::Shouting);
    }
    if sentences(body).iter().any(|s| is_accusation(s.text, lex)) {
        cats.push(RiskCategory::Accusation);
    }
    let risk = cats.iter().map(|c| c.weight()).sum::<f64>().min(1.0);
    let preview = if cats.is_empty() {
        "Likely to read as calm and neutral.".to_string()
    } else {
        let parts: Vec<&str> = cats.iter().map(|c| c.reading()).collect();
        format!("Readers may take this as {}.", join_readable(&parts))
    };
    DraftAnalysis { risk_categories: cats, risk, preview }
}

fn join_readable(parts: &[&str]) -> String {
    match parts {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

fn match_case(template: &str, replacement: &str) -> String {
    if template.chars().next().is_some_and(char::is_uppercase) && !is_all_caps(template) {
        let mut c = replacement.chars();
        match c.next() {
            Some(f) => f.to_uppercase().chain(c).collect(),
            None => String::new(),
        }
    } else {
        replacement.to_string()
    }
}

/// Rewrites each word span through `f`, leaving the rest of the text intact.
fn map_words(text: &str, mut f: impl FnMut(usize, &str) -> Option<String>) -> (String, bool) {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    let mut changed = false;
    for (i, (start, word)) in word_spans(text).into_iter().enumerate() {
        out.push_str(&text[last..start]);
        match f(i, word) {
            Some(r) if r != word => {
                out.push_str(&r);
                changed = true;
            }
            _ => out.push_str(word),
        }
        last = start + word.len();
    }
    out.push_str(&text[last..]);
    (out, changed)
}

fn capitalize_sentences(text: &str) -> String {
    let starts: Vec<usize> = sentences(text).iter().map(|s| s.start).collect();
    let mut out = text.to_string();
    for s in starts.into_iter().rev() {
        if let Some(c) = out[s..].chars().next() {
            if c.is_lowercase() {
                let up: String = c.to_uppercase().collect();
                out.replace_range(s..s + c.len_utf8(), &up);
            }
        }
    }
    out
}

fn normalize_caps(text: &str, shouting: bool) -> (String, bool) {
    let (lowered, changed) = map_words(text, |_, w| {
        let letters = w.chars().filter(|c| c.is_alphabetic()).count();
        (is_all_caps(w) && (shouting || letters >= 4)).then(|| w.to_lowercase())
    });
    if !changed {
        return (text.to_string(), false);
    }
    (capitalize_sentences(&lowered), true)
}

fn soften_intensifiers(text: &str, lex: &RewriteLexicons) -> (String, bool) {
    map_words(text, |_, w| lex.intensifiers.get(w).map(|r| match_case(w, r)))
}

fn mask_profanity(text: &str, lex: &RewriteLexicons) -> (String, bool) {
    map_words(text, |_, w| {
        lex.profanity.contains_word(w).then(|| {
            let mut chars = w.chars();
            let first = chars.next().map(String::from).unwrap_or_default();
            first + &"*".repeat(chars.count())
        })
    })
}

fn soften_insults(text: &str, lex: &RewriteLexicons) -> (String, bool) {
    let words = word_spans(text);
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    let mut changed = false;
    for (i, &(start, w)) in words.iter().enumerate() {
        if !lex.insults.contains_word(w) {
            continue;
        }
        // "an idiot" becomes "mistaken", not "an mistaken".
        let mut from = start;
        let mut template = w;
        if let Some(&(prev_start, prev)) = i.checked_sub(1).map(|j| &words[j]) {
            let between = &text[prev_start + prev.len()..start];
            if matches!(prev.to_lowercase().as_str(), "a" | "an") && between.trim().is_empty() {
                from = prev_start;
                template = prev;
            }
        }
        out.push_str(&text[last..from]);
        out.push_str(&match_case(template, "mistaken"));
        last = start + w.len();
        changed = true;
    }
    out.push_str(&text[last..]);
    (out, changed)
}

fn reframe_accusations(text: &str, lex: &RewriteLexicons) -> (String, bool) {
    let mut out = String::with_capacity(text.len() + 16);
    let mut last = 0;
    let mut changed = false;
    for s in sentences(text) {
        if is_accusation(s.text, lex) {
            out.push_str(&text[last..s.start]);
            let mut rest = s.text.to_string();
            if let Some(c) = rest.chars().next() {
                let low: String = c.to_lowercase().collect();
                rest.replace_range(0..c.len_utf8(), &low);
            }
            out.push_str("I feel that ");
            out.push_str(&rest);
            last = s.start + s.text.len();
            changed = true;
        }
    }
    out.push_str(&text[last..]);
    (out, changed)
}

struct Pipeline<'a> {
    text: String,
    applied: Vec<String>,
    lex: &'a RewriteLexicons,
}

impl<'a> Pipeline<'a> {
    fn new(body: &str, lex: &'a RewriteLexicons) -> Self {
        Self { text: body.to_string(), applied: Vec::new(), lex }
    }

    fn apply(mut self, id: &str, f: impl FnOnce(&str, &RewriteLexicons) -> (String, bool)) -> Self {
        let (t, changed) = f(&self.text, self.lex);
        if changed {
            self.text = t;
            self.applied.push(id.to_string());
        }
        self
    }

    fn finish(self, tone: Tone) -> Option<RewriteSuggestion> {
        (!self.applied.is_empty() && !self.text.trim().is_empty())
            .then(|| RewriteSuggestion { tone, text: self.text, transforms_applied: self.applied })
    }
}

/// Rule-based suggestions: a neutral rewrite (caps, intensifier, profanity,
/// insult transforms) and, when an accusation is present, an empathetic
/// first-person reframing on top of it.
pub fn generate_rewrites(body: &str, analysis: &DraftAnalysis) -> Vec<RewriteSuggestion> {
    generate_rewrites_with(body, analysis, &RewriteLexicons::builtin())
}

pub fn generate_rewrites_with(body: &str, analysis: &DraftAnalysis, lex: &RewriteLexicons) -> Vec<RewriteSuggestion> {
    if analysis.risk == 0.0 {
        return Vec::new();
    }
    let shouting = analysis.risk_categories.contains(&RiskCategory::Shouting);
    let neutral = || {
        Pipeline::new(body, lex)
            .apply("caps", |t, _| normalize_caps(t, shouting))
            .apply("intensifier", soften_intensifiers)
            .apply("profanity", mask_profanity)
            .apply("insult", soften_insults)
    };
    let mut out = Vec::new();
    if let Some(s) = neutral().finish(Tone::Neutral) {
        out.push(s);
    }
    if analysis.risk_categories.contains(&RiskCategory::Accusation) {
        // Reframe before softening so the accusation is still detectable.
        let empathetic = Pipeline::new(body, lex)
            .apply("caps", |t, _| normalize_caps(t, shouting))
            .apply("accusation", reframe_accusations)
            .apply("intensifier", soften_intensifiers)
            .apply("profanity", mask_profanity)
            .apply("insult", soften_insults);
        if let Some(s) = empathetic.finish(Tone::Empathetic) {
            out.push(s);
        }
    }
    out.dedup_by(|a, b| a.text == b.text);
    out.truncate(MAX_SUGGESTIONS);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider unreachable: {0}")]
    Unreachable(String),
    #[error("provider timed out")]
    Timeout,
    #[error("provider returned an invalid response: {0}")]
    BadResponse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub body: String,
    pub risk_categories: Vec<RiskCategory>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub suggestions: Vec<RewriteSuggestion>,
}

/// External rewrite source. Calls must return within `deadline`.
pub trait RewriteProvider: Send + Sync {
    fn rewrite(&self, request: &ProviderRequest, deadline: Duration) -> Result<Vec<RewriteSuggestion>, ProviderError>;
}

/// Minimal HTTP/1.1 JSON client: `POST /rewrite` with a [`ProviderRequest`]
/// body, expecting a [`ProviderResponse`]. All sockets go through the
/// configured [`NetworkLayer`].
pub struct HttpRewriteProvider {
    endpoint: String,
    net: Arc<dyn NetworkLayer>,
}

impl HttpRewriteProvider {
    pub fn new(endpoint: impl Into<String>, net: Arc<dyn NetworkLayer>) -> Self {
        Self { endpoint: endpoint.into(), net }
    }
}

fn io_to_provider(e: std::io::Error) -> ProviderError {
    match e.kind() {
        std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock => ProviderError::Timeout,
        _ => ProviderError::Unreachable(e.to_string()),
    }
}

impl RewriteProvider for HttpRewriteProvider {
    fn rewrite(&self, request: &ProviderRequest, deadline: Duration) -> Result<Vec<RewriteSuggestion>, ProviderError> {
        let addr = self
            .endpoint
            .to_socket_addrs()
            .map_err(|e| ProviderError::Unreachable(e.to_string()))?
            .next()
            .ok_or_else(|| ProviderError::Unreachable(format!("no address for {}", self.endpoint)))?;
        let mut stream = self.net.connect(addr, deadline).map_err(io_to_provider)?;
        stream.set_read_timeout(Some(deadline)).map_err(io_to_provider)?;
        stream.set_write_timeout(Some(deadline)).map_err(io_to_provider)?;
        let body = serde_json::to_vec(request).map_err(|e| ProviderError::BadResponse(e.to_string()))?;
        let head = format!(
            "POST /rewrite HTTP/1.1\r\nHost: {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
            self.endpoint,
            body.len()
        );
        stream.write_all(head.as_bytes()).map_err(io_to_provider)?;
        stream.write_all(&body).map_err(io_to_provider)?;
        let mut raw = Vec::new();
        stream.read_to_end(&mut raw).map_err(io_to_provider)?;
        let text = String::from_utf8_lossy(&raw);
        let (status, payload) = text
            .split_once("\r\n\r\n")
            .ok_or_else(|| ProviderError::BadResponse("missing header terminator".into()))?;
        if !status.starts_with("HTTP/1.1 200") && !status.starts_with("HTTP/1.0 200") {
            return Err(ProviderError::BadResponse(status.lines().next().unwrap_or("").to_string()));
        }
        let parsed: ProviderResponse =
            serde_json::from_str(payload).map_err(|e| ProviderError::BadResponse(e.to_string()))?;
        Ok(parsed.suggestions)
    }
}

/// Draft assistance with an optional external provider.
pub struct Rewriter {
    pub lexicons: RewriteLexicons,
    pub provider: Option<Box<dyn RewriteProvider>>,
    pub deadline: Duration,
}

impl Default for Rewriter {
    fn default() -> Self {
        Self { lexicons: RewriteLexicons::builtin(), provider: None, deadline: Duration::from_millis(1500) }
    }
}

impl Rewriter {
    pub fn analyze(&self, body: &str) -> DraftAnalysis {
        analyze_draft_with(body, &self.lexicons)
    }

    /// Provider suggestions when available; otherwise rule-based ones, each
    /// tagged with [`FALLBACK_TRANSFORM`] if the provider failed.
    pub fn offer(&self, body: &str, analysis: &DraftAnalysis) -> RewriteOffer {
        let mut provider_fallback = false;
        let mut suggestions = None;
        if analysis.risk > 0.0 {
            if let Some(p) = &self.provider {
                let req = ProviderRequest { body: body.to_string(), risk_categories: analysis.risk_categories.clone() };
                match p.rewrite(&req, self.deadline) {
                    Ok(s) => {
                        let valid: Vec<_> = s
                            .into_iter()
                            .filter(|s| !s.text.trim().is_empty() && !s.transforms_applied.is_empty())
                            .take(MAX_SUGGESTIONS)
                            .collect();
                        suggestions = Some(valid);
                    }
                    Err(e) => {
                        tracing::warn!(error = %e, "rewrite provider failed, using rule-based suggestions");
                        provider_fallback = true;
                    }
                }
            }
        }
        let suggestions = suggestions.unwrap_or_else(|| {
            let mut s = generate_rewrites_with(body, analysis, &self.lexicons);
            if provider_fallback {
                for sug in &mut s {
                    sug.transforms_applied.push(FALLBACK_TRANSFORM.to_string());
                }
            }
            s
        });
        RewriteOffer { original: body.to_string(), keep_original_available: true, suggestions, provider_fallback }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_text_has_no_risk() {
        let a = analyze_draft("Lovely weather today.");
        assert!(a.risk_categories.is_empty());
        assert_eq!(a.risk, 0.0);
    }

    #[test]
    fn shouted_accusation() {
        let a = analyze_draft("YOU ALWAYS RUIN EVERYTHING");
        assert_eq!(
            a.risk_categories,
            vec![RiskCategory::Absolutism, RiskCategory::Shouting, RiskCategory::Accusation]
        );
        assert!((a.risk - 0.4).abs() < 1e-12);
        assert_eq!(a, analyze_draft("YOU ALWAYS RUIN EVERYTHING"));
    }

    #[test]
    fn risk_caps_at_one() {
        let a = analyze_draft("YOU ARE A STUPID FUCKING IDIOT AND YOU ALWAYS LIE");
        assert_eq!(a.risk_categories.len(), 5);
        assert_eq!(a.risk, 1.0);
    }

    #[test]
    fn no_suggestions_for_clean_draft() {
        let a = analyze_draft("Lovely weather today.");
        assert!(generate_rewrites("Lovely weather today.", &a).is_empty());
    }

    #[test]
    fn never_listen_neutral_rewrite() {
        let body = "You NEVER listen";
        let s = generate_rewrites(body, &analyze_draft(body));
        let neutral = s.iter().find(|s| s.tone == Tone::Neutral).unwrap();
        assert_eq!(neutral.text, "You rarely listen");
        assert_eq!(neutral.transforms_applied, vec!["caps", "intensifier"]);
        let emp = s.iter().find(|s| s.tone == Tone::Empathetic).unwrap();
        assert_eq!(emp.text, "I feel that you rarely listen");
    }

    #[test]
    fn profanity_masked_and_insult_softened() {
        let body = "This is shit and you are an idiot.";
        let s = generate_rewrites(body, &analyze_draft(body));
        assert_eq!(s[0].text, "This is s*** and you are mistaken.");
        assert!(s[0].transforms_applied.contains(&"profanity".to_string()));
        assert!(s[0].transforms_applied.contains(&"insult".to_string()));
    }

    #[test]
    fn rewrites_are_stable_under_reapplication() {
        for body in ["YOU ALWAYS RUIN EVERYTHING", "You NEVER listen", "Nobody EVER reads my posts, EVERYONE ignores me"] {
            for s in generate_rewrites(body, &analyze_draft(body)) {
                let again = generate_rewrites(&s.text, &analyze_draft(&s.text));
                for a in again {
                    assert!(!a.transforms_applied.contains(&"caps".to_string()), "{body}: {:?}", a);
                    assert!(!a.transforms_applied.contains(&"intensifier".to_string()), "{body}: {:?}", a);
                }
            }
        }
    }

    struct Down;
    impl RewriteProvider for Down {
        fn rewrite(&self, _: &ProviderRequest, _: Duration) -> Result<Vec<RewriteSuggestion>, ProviderError> {
            Err(ProviderError::Timeout)
        }
    }

    #[test]
    fn unreachable_provider_falls_back_to_rules() {
        let r = Rewriter { provider: Some(Box::new(Down)), ..Rewriter::default() };
        let body = "You NEVER listen";
        let offer = r.offer(body, &r.analyze(body));
        assert!(offer.provider_fallback);
        assert!(offer.keep_original_available);
        assert_eq!(offer.original, body);
        assert!(!offer.suggestions.is_empty());
        assert!(offer.suggestions.iter().all(|s| s.transforms_applied.contains(&FALLBACK_TRANSFORM.to_string())));
    }

    #[test]
    fn offer_keeps_original_even_without_suggestions() {
        let r = Rewriter::default();
        let offer = r.offer("Lovely weather today.", &r.analyze("Lovely weather today."));
        assert!(offer.keep_original_available);
        assert!(offer.suggestions.is_empty());
    }
}
