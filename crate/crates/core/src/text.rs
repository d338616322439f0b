//! Tokenization and sentence splitting shared by the text-analysis modules.

/// A sentence located inside a larger body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence<'a> {
    /// Byte offset of the first non-whitespace character.
    pub start: usize,
    /// The sentence without its terminal punctuation.
    pub text: &'a str,
    /// Terminal punctuation run, possibly empty (`"?"`, `"!?"`, `"..."`).
    pub terminator: &'a str,
}

impl Sentence<'_> {
    pub fn is_question(&self) -> bool {
        self.terminator.contains('?')
    }
}

fn is_terminator(body: &str, idx: usize, c: char) -> bool {
    match c {
        '!' | '?' => true,
        '.' => {
            // 3.5 and similar decimals do not end a sentence.
            let prev = body[..idx].chars().next_back();
            let next = body[idx + 1..].chars().next();
            !matches!((prev, next), (Some(p), Some(n)) if p.is_ascii_digit() && n.is_ascii_digit())
        }
        _ => false,
    }
}

/// Splits `body` into sentences on `.`, `!` and `?` runs (and line breaks).
pub fn sentences(body: &str) -> Vec<Sentence<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut chars = body.char_indices().peekable();
    while let Some((idx, c)) = chars.next() {
        if start.is_none() {
            if c.is_whitespace() {
                continue;
            }
            start = Some(idx);
        }
        let s = start.unwrap_or(idx);
        if c == '\n' {
            let text = body[s..idx].trim_end();
            if !text.is_empty() {
                out.push(Sentence { start: s, text, terminator: "" });
            }
            start = None;
            continue;
        }
        if is_terminator(body, idx, c) {
            let mut end = idx + c.len_utf8();
            while let Some(&(j, d)) = chars.peek() {
                if is_terminator(body, j, d) {
                    end = j + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            let text = body[s..idx].trim_end();
            out.push(Sentence { start: s, text, terminator: &body[idx..end] });
            start = None;
        }
    }
    if let Some(s) = start {
        let text = body[s..].trim_end();
        if !text.is_empty() {
            out.push(Sentence { start: s, text, terminator: "" });
        }
    }
    out
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

/// Word spans in original case: `(byte_offset, word)`.
pub fn word_spans(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (idx, c) in text.char_indices() {
        match (is_word_char(c), start) {
            (true, None) => start = Some(idx),
            (false, Some(s)) => {
                push_word(&mut out, text, s, idx);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        push_word(&mut out, text, s, text.len());
    }
    out
}

fn push_word<'a>(out: &mut Vec<(usize, &'a str)>, text: &'a str, s: usize, e: usize) {
    let raw = &text[s..e];
    let trimmed = raw.trim_matches('\'');
    if !trimmed.is_empty() {
        let offset = s + raw.find(trimmed).unwrap_or(0);
        out.push((offset, trimmed));
    }
}

/// Lowercased word tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    word_spans(text).into_iter().map(|(_, w)| w.to_lowercase()).collect()
}

/// Lowercase, whitespace-normalized key built from the tokens of `text`.
pub fn normalize_key(text: &str) -> String {
    tokenize(text).join(" ")
}

/// True for words written entirely in uppercase letters (at least two).
pub fn is_all_caps(word: &str) -> bool {
    let letters = word.chars().filter(|c| c.is_alphabetic()).count();
    letters >= 2 && word.chars().filter(|c| c.is_alphabetic()).all(|c| c.is_uppercase())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_terminators() {
        let s = sentences("The dam failed on Monday. Amazing!");
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].text, "The dam failed on Monday");
        assert_eq!(s[0].terminator, ".");
        assert_eq!(s[1].text, "Amazing");
        assert_eq!(s[1].terminator, "!");
    }

    #[test]
    fn decimals_do_not_split() {
        let s = sentences("Prices rose 3.5 percent this year.");
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn question_runs() {
        let s = sentences("Is this real?! Yes");
        assert!(s[0].is_question());
        assert_eq!(s[1].terminator, "");
    }

    #[test]
    fn tokens_are_lowercase_and_trimmed() {
        assert_eq!(tokenize("Don't  PANIC, 'now'"), vec!["don't", "panic", "now"]);
        assert_eq!(normalize_key("  The Dam\tfailed "), "the dam failed");
    }

    #[test]
    fn caps_detection() {
        assert!(is_all_caps("NEVER"));
        assert!(!is_all_caps("I"));
        assert!(!is_all_caps("Never"));
    }
}
