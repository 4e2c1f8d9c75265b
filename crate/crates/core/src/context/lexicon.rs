use std::collections::HashSet;
use std::fmt::{self, Write};
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textseg::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerKind {
    NegForward,
    NegBackward,
    Pseudo,
    Termination,
}

impl TriggerKind {
    pub const ALL: [TriggerKind; 4] = [
        TriggerKind::NegForward,
        TriggerKind::NegBackward,
        TriggerKind::Pseudo,
        TriggerKind::Termination,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TriggerKind::NegForward => "neg_forward",
            TriggerKind::NegBackward => "neg_backward",
            TriggerKind::Pseudo => "pseudo",
            TriggerKind::Termination => "termination",
        }
    }

    pub fn is_negation(self) -> bool {
        matches!(self, TriggerKind::NegForward | TriggerKind::NegBackward)
    }
}

impl fmt::Display for TriggerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TriggerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TriggerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown trigger kind `{s}`"))
    }
}

/// One element of a token-sequence pattern, compared case-insensitively.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternElement {
    /// Exact (lowercased) token.
    Word(String),
    /// `stem*`: any token starting with `stem`.
    Prefix(String),
    /// `*`: any single token.
    Any,
}

impl PatternElement {
    pub fn matches(&self, token_lower: &str) -> bool {
        match self {
            PatternElement::Word(w) => w == token_lower,
            PatternElement::Prefix(p) => token_lower.starts_with(p.as_str()),
            PatternElement::Any => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trigger {
    pub id: String,
    /// Pattern as written in the lexicon.
    pub source: String,
    pub pattern: Vec<PatternElement>,
    pub kind: TriggerKind,
    /// Optional cap on scope width in tokens; `None` means sentence-bounded.
    pub max_scope: Option<usize>,
}

impl Trigger {
    pub fn new(source: &str, kind: TriggerKind, max_scope: Option<usize>) -> Result<Self, LexiconError> {
        let pattern = compile(source);
        if pattern.is_empty() {
            return Err(LexiconError::EmptyPattern { line: 0 });
        }
        let normalized = normalize(source);
        Ok(Self {
            id: format!("{kind}:{normalized}"),
            source: source.trim().to_string(),
            pattern,
            kind,
            max_scope,
        })
    }

    pub fn len(&self) -> usize {
        self.pattern.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pattern.is_empty()
    }

    /// Whether the pattern matches `words` (lowercased) starting at `pos`.
    pub fn matches_at(&self, words: &[String], pos: usize) -> bool {
        pos + self.pattern.len() <= words.len()
            && self
                .pattern
                .iter()
                .zip(&words[pos..])
                .all(|(el, w)| el.matches(w))
    }
}

fn normalize(source: &str) -> String {
    tokenize(source)
        .into_iter()
        .map(|t| t.text.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

fn compile(source: &str) -> Vec<PatternElement> {
    tokenize(source)
        .into_iter()
        .map(|t| {
            let w = t.text.to_lowercase();
            if w == "*" {
                PatternElement::Any
            } else if let Some(stem) = w.strip_suffix('*').filter(|s| !s.is_empty()) {
                PatternElement::Prefix(stem.to_string())
            } else {
                PatternElement::Word(w)
            }
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("reading lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: expected pattern<TAB>kind[<TAB>max_scope_tokens]")]
    MissingKind { line: usize },
    #[error("line {line}: unknown trigger kind `{kind}` (expected neg_forward|neg_backward|pseudo|termination)")]
    UnknownKind { line: usize, kind: String },
    #[error("line {line}: empty pattern")]
    EmptyPattern { line: usize },
    #[error("line {line}: invalid max_scope_tokens `{value}`")]
    BadMaxScope { line: usize, value: String },
    #[error("line {line}: duplicate trigger `{pattern}` ({kind})")]
    Duplicate {
        line: usize,
        pattern: String,
        kind: TriggerKind,
    },
}

impl LexiconError {
    fn at_line(self, line: usize) -> Self {
        match self {
            LexiconError::EmptyPattern { .. } => LexiconError::EmptyPattern { line },
            LexiconError::Duplicate { pattern, kind, .. } => LexiconError::Duplicate { line, pattern, kind },
            other => other,
        }
    }
}

/// Immutable-after-load list of triggers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    triggers: Vec<Trigger>,
    ids: HashSet<String>,
    /// File the lexicon came from, or a descriptive label.
    pub source: String,
    /// Value of a `#version:` header line, if present.
    pub version: Option<String>,
}

impl Lexicon {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            ..Default::default()
        }
    }

    /// Parse the TSV format: `pattern<TAB>kind[<TAB>max_scope_tokens]`,
    /// `#` comment lines, optional `#version:` header.
    pub fn parse(text: &str, source: impl Into<String>) -> Result<Self, LexiconError> {
        let mut lexicon = Lexicon::new(source);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if let Some(v) = raw.strip_prefix("#version:") {
                lexicon.version = Some(v.trim().to_string());
                continue;
            }
            if raw.trim_start().starts_with('#') || raw.trim().is_empty() {
                continue;
            }
            let mut fields = raw.split('\t');
            let pattern = fields.next().unwrap_or("");
            let kind = fields.next().ok_or(LexiconError::MissingKind { line })?.trim();
            let kind: TriggerKind = kind.parse().map_err(|_| LexiconError::UnknownKind {
                line,
                kind: kind.to_string(),
            })?;
            let max_scope = match fields.next().map(str::trim) {
                None | Some("") => None,
                Some(v) => Some(v.parse::<usize>().map_err(|_| LexiconError::BadMaxScope {
                    line,
                    value: v.to_string(),
                })?),
            };
            lexicon.push(pattern, kind, max_scope).map_err(|e| e.at_line(line))?;
        }
        Ok(lexicon)
    }

    pub fn bundled() -> Self {
        Self::parse(crate::BUNDLED_LEXICON, "bundled:lexicon_nl.tsv").expect("bundled lexicon is valid")
    }

    pub fn push(&mut self, pattern: &str, kind: TriggerKind, max_scope: Option<usize>) -> Result<(), LexiconError> {
        let trigger = Trigger::new(pattern, kind, max_scope)?;
        if !self.ids.insert(trigger.id.clone()) {
            return Err(LexiconError::Duplicate {
                line: 0,
                pattern: trigger.source,
                kind,
            });
        }
        self.triggers.push(trigger);
        Ok(())
    }

    pub fn triggers(&self) -> &[Trigger] {
        &self.triggers
    }

    pub fn of_kind(&self, kind: TriggerKind) -> impl Iterator<Item = &Trigger> {
        self.triggers.iter().filter(move |t| t.kind == kind)
    }

    pub fn len(&self) -> usize {
        self.triggers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triggers.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        if let Some(v) = &self.version {
            let _ = writeln!(out, "#version:{v}");
        }
        for t in &self.triggers {
            match t.max_scope {
                Some(m) => {
                    let _ = writeln!(out, "{}\t{}\t{m}", t.source, t.kind);
                }
                None => {
                    let _ = writeln!(out, "{}\t{}", t.source, t.kind);
                }
            }
        }
        out
    }
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon, LexiconError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Lexicon::parse(&text, path.display().to_string())
}
