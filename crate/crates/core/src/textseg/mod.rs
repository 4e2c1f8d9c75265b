//! Deterministic tokenization and sentence splitting.
//!
//! All offsets are character offsets (Unicode scalar values), start inclusive
//! and end exclusive, matching the corpus format.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::ops::Range;
use std::path::Path;

use thiserror::Error;

mod window;

pub use window::{asymmetric_context, extract_window, TokenWindow, WindowMember};

#[derive(Debug, Error)]
pub enum TextsegError {
    #[error("entity {entity_id} [{start}, {end}) does not overlap any token")]
    EntityNotAligned {
        entity_id: String,
        start: usize,
        end: usize,
    },
    #[error("window size must be at least 1")]
    InvalidWindowSize,
    #[error("entity {0} does not belong to record {1}")]
    ForeignEntity(String, String),
    #[error("reading abbreviation list {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub index: usize,
}

impl Token {
    /// True when the token carries at least one alphanumeric character.
    pub fn is_word(&self) -> bool {
        self.text.chars().any(char::is_alphanumeric)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
    pub tokens: Range<usize>,
}

fn is_leading_punct(c: char) -> bool {
    matches!(c, '(' | '[' | '{' | '"' | '\'' | ':' | ';' | ',' | '.' | '?' | '!')
}

// '-' and '+' are only peeled from the end of a word: "klam+" splits,
// "infectie-geinduceerd" does not.
fn is_trailing_punct(c: char) -> bool {
    matches!(
        c,
        ')' | ']' | '}' | '"' | '\'' | ':' | ';' | ',' | '.' | '?' | '!' | '-' | '+'
    )
}

fn is_terminator(text: &str) -> bool {
    matches!(text, "." | "!" | "?" | ";")
}

/// Split `text` into tokens: whitespace first, then leading and trailing
/// punctuation is peeled off into single-character tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chunk: Vec<char> = Vec::new();
    let mut chunk_start = 0;
    for (pos, c) in text.chars().enumerate() {
        if c.is_whitespace() {
            if !chunk.is_empty() {
                push_chunk(&chunk, chunk_start, &mut tokens);
                chunk.clear();
            }
        } else {
            if chunk.is_empty() {
                chunk_start = pos;
            }
            chunk.push(c);
        }
    }
    if !chunk.is_empty() {
        push_chunk(&chunk, chunk_start, &mut tokens);
    }
    tokens
}

fn push_chunk(chars: &[char], base: usize, out: &mut Vec<Token>) {
    let mut push = |lo: usize, hi: usize| {
        let index = out.len();
        out.push(Token {
            text: chars[lo..hi].iter().collect(),
            start: base + lo,
            end: base + hi,
            index,
        });
    };

    let mut lo = 0;
    let mut hi = chars.len();
    while lo < hi && is_leading_punct(chars[lo]) {
        push(lo, lo + 1);
        lo += 1;
    }
    let mut trailing = Vec::new();
    while hi > lo && is_trailing_punct(chars[hi - 1]) {
        trailing.push(hi - 1);
        hi -= 1;
    }
    if lo < hi {
        push(lo, hi);
    }
    for &i in trailing.iter().rev() {
        push(i, i + 1);
    }
}

/// Known abbreviations whose final period does not end a sentence.
///
/// Stored lowercase, always with the trailing period (`"evt."`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Abbreviations {
    entries: BTreeSet<String>,
}

impl Abbreviations {
    /// Parse one abbreviation per line; `#` starts a comment.
    pub fn parse(source: &str) -> Self {
        let entries = source
            .lines()
            .map(|line| line.split('#').next().unwrap_or("").trim())
            .filter(|line| !line.is_empty())
            .map(|line| {
                let mut entry = line.to_lowercase();
                if !entry.ends_with('.') {
                    entry.push('.');
                }
                entry
            })
            .collect();
        Self { entries }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TextsegError> {
        let path = path.as_ref();
        let source = fs::read_to_string(path).map_err(|source| TextsegError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::parse(&source))
    }

    pub fn bundled() -> Self {
        Self::parse(crate::BUNDLED_ABBREVIATIONS)
    }

    pub fn contains(&self, stem: &str) -> bool {
        let mut key = stem.to_lowercase();
        key.push('.');
        self.entries.contains(&key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sentence boundaries after `.`, `!`, `?` and `;` tokens and wherever a
/// newline separates two tokens. A period glued to a known abbreviation is
/// not a boundary.
pub fn split_sentences(tokens: &[Token], text: &str, abbreviations: &Abbreviations) -> Vec<SentenceSpan> {
    let mut sentences = Vec::new();
    if tokens.is_empty() {
        return sentences;
    }
    let newline_at: Vec<usize> = text
        .chars()
        .enumerate()
        .filter(|(_, c)| *c == '\n')
        .map(|(i, _)| i)
        .collect();
    let newline_between = |from: usize, to: usize| {
        let i = newline_at.partition_point(|&p| p < from);
        i < newline_at.len() && newline_at[i] < to
    };

    let mut first = 0;
    for i in 0..tokens.len() {
        let token = &tokens[i];
        let mut boundary = is_terminator(&token.text);
        if boundary && token.text == "." && i > 0 {
            let prev = &tokens[i - 1];
            if prev.end == token.start && abbreviations.contains(&prev.text) {
                boundary = false;
            }
        }
        if !boundary {
            if let Some(next) = tokens.get(i + 1) {
                boundary = newline_between(token.end, next.start);
            }
        }
        if boundary || i + 1 == tokens.len() {
            sentences.push(SentenceSpan {
                start: tokens[first].start,
                end: token.end,
                tokens: first..i + 1,
            });
            first = i + 1;
        }
    }
    sentences
}

/// Tokens and sentences of one text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmented {
    pub tokens: Vec<Token>,
    pub sentences: Vec<SentenceSpan>,
}

impl Segmented {
    /// Token range overlapping the character span `[start, end)`.
    pub fn token_range(&self, start: usize, end: usize) -> Option<Range<usize>> {
        token_range(&self.tokens, start, end)
    }

    /// Index of the sentence holding token `token`.
    pub fn sentence_of(&self, token: usize) -> Option<usize> {
        let i = self.sentences.partition_point(|s| s.tokens.end <= token);
        (i < self.sentences.len() && self.sentences[i].tokens.contains(&token)).then_some(i)
    }
}

pub(crate) fn token_range(tokens: &[Token], start: usize, end: usize) -> Option<Range<usize>> {
    let first = tokens.partition_point(|t| t.end <= start);
    let mut last = first;
    while last < tokens.len() && tokens[last].start < end {
        last += 1;
    }
    (last > first).then_some(first..last)
}

/// Tokenizer plus sentence splitter configured with an abbreviation list.
#[derive(Debug, Clone, Default)]
pub struct Segmenter {
    abbreviations: Abbreviations,
}

impl Segmenter {
    pub fn new(abbreviations: Abbreviations) -> Self {
        Self { abbreviations }
    }

    pub fn bundled() -> Self {
        Self::new(Abbreviations::bundled())
    }

    pub fn abbreviations(&self) -> &Abbreviations {
        &self.abbreviations
    }

    pub fn segment(&self, text: &str) -> Segmented {
        let tokens = tokenize(text);
        let sentences = split_sentences(&tokens, text, &self.abbreviations);
        Segmented { tokens, sentences }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn peels_trailing_period() {
        assert_eq!(texts(&tokenize("geen koorts.")), ["geen", "koorts", "."]);
    }

    #[test]
    fn empty_text_has_no_tokens() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \n\t").is_empty());
    }

    #[test]
    fn minus_and_plus_become_tokens() {
        assert_eq!(
            texts(&tokenize("misselijk-, klam+")),
            ["misselijk", "-", ",", "klam", "+"]
        );
    }

    #[test]
    fn inner_hyphen_and_decimal_stay_whole() {
        assert_eq!(
            texts(&tokenize("infectie-geinduceerd 38.2,")),
            ["infectie-geinduceerd", "38.2", ","]
        );
    }

    #[test]
    fn leading_parenthesis_peeled() {
        assert_eq!(texts(&tokenize("(geen roodheid)")), ["(", "geen", "roodheid", ")"]);
    }

    #[test]
    fn offsets_are_char_based() {
        let tokens = tokenize("één ziekte");
        assert_eq!(tokens[1].start, 4);
        assert_eq!(tokens[1].end, 10);
        assert_eq!(tokens[1].index, 1);
    }

    #[test]
    fn two_sentences() {
        let seg = Segmenter::default().segment("Geen koorts. Wel hoest.");
        assert_eq!(seg.sentences.len(), 2);
        assert_eq!(seg.sentences[0].tokens, 0..3);
        assert_eq!(seg.sentences[1].tokens, 3..6);
    }

    #[test]
    fn no_terminator_single_sentence() {
        let seg = Segmenter::default().segment("pijn op de borst zonder uitstraling");
        assert_eq!(seg.sentences.len(), 1);
        assert_eq!(seg.sentences[0].tokens, 0..6);
    }

    #[test]
    fn decimal_is_not_a_boundary() {
        let seg = Segmenter::default().segment("temp tot 38.2, pulmones geen afwijking");
        assert_eq!(seg.sentences.len(), 1);
    }

    #[test]
    fn abbreviation_period_is_not_a_boundary() {
        let seg = Segmenter::bundled().segment("pat. heeft geen koorts. Wel hoest");
        assert_eq!(seg.sentences.len(), 2);
        assert_eq!(seg.sentences[0].tokens, 0..6);
        // unknown abbreviation splits
        let seg = Segmenter::default().segment("pat. heeft geen koorts");
        assert_eq!(seg.sentences.len(), 2);
    }

    #[test]
    fn newline_and_semicolon_split() {
        let seg = Segmenter::default().segment("hoofdpijn\nbraken; misselijk");
        assert_eq!(seg.sentences.len(), 3);
    }

    #[test]
    fn sentence_of_lookup() {
        let seg = Segmenter::default().segment("a b. c");
        assert_eq!(seg.sentence_of(0), Some(0));
        assert_eq!(seg.sentence_of(2), Some(0));
        assert_eq!(seg.sentence_of(3), Some(1));
        assert_eq!(seg.sentence_of(4), None);
    }

    #[test]
    fn abbreviation_file_parsing() {
        let abbr = Abbreviations::parse("# comment\nevt.\nO.A\n\n  pat. # trailing\n");
        assert_eq!(abbr.len(), 3);
        assert!(abbr.contains("o.a"));
        assert!(abbr.contains("Evt"));
        assert!(!abbr.contains("neg"));
    }

    #[test]
    fn token_range_overlap() {
        let seg = Segmenter::default().segment("geen tekenen van diabetes mellitus.");
        assert_eq!(seg.token_range(17, 34), Some(3..5));
        assert_eq!(seg.token_range(4, 5), None);
    }
}
