//! Plain-text word lists: one term per line, `#` starts a comment.
//!
//! Terms may span several words; matching runs over normalized token
//! sequences so punctuation and case never matter.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::text::tokenize;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed mapping, expected `from=to`")]
    Mapping { path: PathBuf, line: usize },
}

/// A set of (possibly multi-word) terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordList {
    terms: Vec<Vec<String>>,
}

impl WordList {
    pub fn parse(text: &str) -> Self {
        let mut terms: Vec<Vec<String>> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(tokenize)
            .filter(|t| !t.is_empty())
            .collect();
        terms.sort();
        terms.dedup();
        // Longest terms first so phrases win over their prefixes.
        terms.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        Self { terms }
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = fs::read_to_string(path).map_err(|source| LexiconError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::parse(&text))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains_word(&self, word: &str) -> bool {
        let w = word.to_lowercase();
        self.terms.iter().any(|t| t.len() == 1 && t[0] == w)
    }

    /// Non-overlapping matches over `tokens`, scanning left to right.
    /// Returns `(token_index, term_len)` pairs.
    pub fn matches(&self, tokens: &[String]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let hit = self
                .terms
                .iter()
                .find(|t| tokens.len() - i >= t.len() && tokens[i..i + t.len()] == t[..]);
            match hit {
                Some(t) => {
                    out.push((i, t.len()));
                    i += t.len();
                }
                None => i += 1,
            }
        }
        out
    }

    pub fn count(&self, tokens: &[String]) -> usize {
        self.matches(tokens).len()
    }
}

/// Single-word replacement table, `from=to` per line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Replacements {
    map: BTreeMap<String, String>,
}

impl Replacements {
    pub fn parse(text: &str) -> Result<Self, usize> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (from, to) = line.split_once('=').ok_or(n + 1)?;
            let (from, to) = (from.trim().to_lowercase(), to.trim().to_string());
            if from.is_empty() || to.is_empty() {
                return Err(n + 1);
            }
            map.insert(from, to);
        }
        Ok(Self { map })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = fs::read_to_string(path).map_err(|source| LexiconError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|line| LexiconError::Mapping { path: path.to_path_buf(), line })
    }

    pub fn get(&self, word: &str) -> Option<&str> {
        self.map.get(&word.to_lowercase()).map(String::as_str)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.map.contains_key(&word.to_lowercase())
    }
}

/// Built-in baseline lists, used when no path is configured.
pub mod defaults {
    pub const BIAS_LEFT: &str = include_str!("../data/bias_left.txt");
    pub const BIAS_RIGHT: &str = include_str!("../data/bias_right.txt");
    pub const PROFANITY: &str = include_str!("../data/profanity.txt");
    pub const INSULTS: &str = include_str!("../data/insults.txt");
    pub const INTENSIFIERS: &str = include_str!("../data/intensifiers.txt");
    pub const ACCUSATION_VERBS: &str = include_str!("../data/accusation_verbs.txt");
    pub const TOXICITY: &str = include_str!("../data/toxicity.txt");
    pub const PROMPTS: &str = include_str!("../data/prompts.txt");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phrases_match_before_prefixes() {
        let list = WordList::parse("tax\ntax cuts\n# comment\n\n");
        let toks = tokenize("We want tax cuts and tax reform");
        assert_eq!(list.matches(&toks), vec![(2, 2), (5, 1)]);
    }

    #[test]
    fn replacement_table_rejects_malformed_lines() {
        assert_eq!(Replacements::parse("always=often\nbroken"), Err(2));
        let r = Replacements::parse("Always = often").unwrap();
        assert_eq!(r.get("ALWAYS"), Some("often"));
    }

    #[test]
    fn builtin_lists_parse() {
        assert!(!WordList::parse(defaults::BIAS_LEFT).is_empty());
        assert!(!WordList::parse(defaults::TOXICITY).is_empty());
        assert!(Replacements::parse(defaults::INTENSIFIERS).is_ok());
    }
}
