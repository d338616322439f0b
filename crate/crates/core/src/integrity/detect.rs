//! Baseline AI-generated-text likelihood from stylometric features.
//!
//! Four features feed a fixed logistic model:
//!
//! | feature | direction |
//! |---|---|
//! | type-token ratio | low diversity raises the score |
//! | repeated 3-gram rate | repetition raises the score |
//! | sentence-length coefficient of variation | uniform lengths raise the score |
//! | burstiness of token recurrence gaps | regular recurrence raises the score |

use serde::Serialize;
use thiserror::Error;

use crate::text::{sentences, tokenize};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("detector unavailable: {0}")]
pub struct DetectorError(pub String);

/// Probability in `[0, 1]` that a body of text was machine generated.
pub trait AiDetector: Send + Sync {
    fn probability(&self, body: &str) -> Result<f64, DetectorError>;

    fn name(&self) -> &str {
        "custom"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StyleFeatures {
    pub tokens: usize,
    pub type_token_ratio: f64,
    pub repeated_trigram_rate: f64,
    pub sentence_length_cv: f64,
    pub burstiness: f64,
}

const BIAS: f64 = -1.0;
const W_LOW_DIVERSITY: f64 = 2.0;
const W_TRIGRAM: f64 = 3.0;
const W_LENGTH_CV: f64 = -1.5;
const W_BURSTINESS: f64 = -1.0;

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn style_features(body: &str) -> StyleFeatures {
    let tokens = tokenize(body);
    let n = tokens.len();
    if n == 0 {
        return StyleFeatures {
            tokens: 0,
            type_token_ratio: 1.0,
            repeated_trigram_rate: 0.0,
            sentence_length_cv: 0.0,
            burstiness: 0.0,
        };
    }
    let distinct: std::collections::HashSet<&str> = tokens.iter().map(String::as_str).collect();
    let type_token_ratio = distinct.len() as f64 / n as f64;

    let repeated_trigram_rate = if n < 3 {
        0.0
    } else {
        let grams: std::collections::HashSet<&[String]> = tokens.windows(3).collect();
        1.0 - grams.len() as f64 / (n - 2) as f64
    };

    let lengths: Vec<f64> = sentences(body)
        .iter()
        .map(|s| tokenize(s.text).len() as f64)
        .filter(|&l| l > 0.0)
        .collect();
    let sentence_length_cv = if lengths.len() < 2 {
        0.0
    } else {
        let (m, s) = mean_std(&lengths);
        (s / m).min(1.0)
    };

    let mut last_seen: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    let mut gaps = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if let Some(prev) = last_seen.insert(t.as_str(), i) {
            gaps.push((i - prev) as f64);
        }
    }
    let burstiness = if gaps.len() < 2 {
        0.0
    } else {
        let (m, s) = mean_std(&gaps);
        (s - m) / (s + m)
    };

    StyleFeatures { tokens: n, type_token_ratio, repeated_trigram_rate, sentence_length_cv, burstiness }
}

/// The deterministic baseline detector.
#[derive(Debug, Clone, Copy, Default)]
pub struct StylometricDetector;

impl StylometricDetector {
    pub fn score(body: &str) -> f64 {
        let f = style_features(body);
        if f.tokens == 0 {
            return 0.5;
        }
        let z = BIAS
            + W_LOW_DIVERSITY * (1.0 - f.type_token_ratio)
            + W_TRIGRAM * f.repeated_trigram_rate
            + W_LENGTH_CV * f.sentence_length_cv
            + W_BURSTINESS * f.burstiness;
        1.0 / (1.0 + (-z).exp())
    }
}

impl AiDetector for StylometricDetector {
    fn probability(&self, body: &str) -> Result<f64, DetectorError> {
        Ok(Self::score(body))
    }

    fn name(&self) -> &str {
        "stylometric baseline"
    }
}

pub fn detect_ai_generated(body: &str) -> f64 {
    StylometricDetector::score(body)
}
