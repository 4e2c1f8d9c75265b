//! Annotated clinical records and the canonical line-delimited corpus format.
//!
//! One record per line:
//!
//! ```text
//! {"id":"r1","category":"gp","text":"geen koorts","entities":[{"entity_id":"e1","start":5,"end":11,"surface":"koorts","gold_label":"negated"}]}
//! ```
//!
//! Offsets count Unicode scalar values. A record that parses but violates a
//! span invariant is not dropped silently: it is kept in
//! [`Corpus::rejected`] and later reported as a corrupted source.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label::{EntityKey, Label};

mod filter;
mod folds;
mod stats;

pub use filter::{filter_corpus, ExclusionReason, ExclusionReport, FilterConfig, MAX_TERM_TOKENS};
pub use folds::{split_folds, FoldAssignment, FoldError};
pub use stats::{corpus_stats, CategoryStats, Distribution, StatsError, TextStats, Totals};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "gp")]
    GeneralPractitioner,
    #[serde(rename = "specialist")]
    SpecialistLetter,
    #[serde(rename = "radiology")]
    RadiologyReport,
    #[serde(rename = "discharge")]
    DischargeLetter,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::GeneralPractitioner,
        Category::SpecialistLetter,
        Category::RadiologyReport,
        Category::DischargeLetter,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Category::GeneralPractitioner => "gp",
            Category::SpecialistLetter => "specialist",
            Category::RadiologyReport => "radiology",
            Category::DischargeLetter => "discharge",
        }
    }

    /// Human-readable name used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            Category::GeneralPractitioner => "General Practitioner entries",
            Category::SpecialistLetter => "Specialist letters",
            Category::RadiologyReport => "Radiology reports",
            Category::DischargeLetter => "Discharge letters",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.code() == s)
            .ok_or_else(|| format!("unknown category `{s}` (expected gp|specialist|radiology|discharge)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityAnnotation {
    pub entity_id: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub gold_label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub category: Category,
    pub text: String,
    pub entities: Vec<EntityAnnotation>,
}

/// Why a parsed record was rejected by the loader.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordProblem {
    #[error("record id is empty")]
    EmptyId,
    #[error("entity {entity_id}: empty or inverted span [{start}, {end})")]
    EmptySpan {
        entity_id: String,
        start: usize,
        end: usize,
    },
    #[error("entity {entity_id}: span end {end} exceeds text length {len}")]
    SpanOutOfBounds {
        entity_id: String,
        end: usize,
        len: usize,
    },
    #[error("entity {entity_id}: surface mismatch, annotation says {expected:?} but text has {found:?}")]
    SurfaceMismatch {
        entity_id: String,
        expected: String,
        found: String,
    },
    #[error("duplicate entity id {0}")]
    DuplicateEntityId(String),
}

impl Record {
    /// Characters `[start, end)` of the text.
    pub fn slice(&self, start: usize, end: usize) -> String {
        self.text.chars().skip(start).take(end.saturating_sub(start)).collect()
    }

    pub fn validate(&self) -> Result<(), RecordProblem> {
        if self.id.is_empty() {
            return Err(RecordProblem::EmptyId);
        }
        let len = self.text.chars().count();
        let mut seen = HashSet::new();
        for e in &self.entities {
            if !seen.insert(e.entity_id.as_str()) {
                return Err(RecordProblem::DuplicateEntityId(e.entity_id.clone()));
            }
            if e.start >= e.end {
                return Err(RecordProblem::EmptySpan {
                    entity_id: e.entity_id.clone(),
                    start: e.start,
                    end: e.end,
                });
            }
            if e.end > len {
                return Err(RecordProblem::SpanOutOfBounds {
                    entity_id: e.entity_id.clone(),
                    end: e.end,
                    len,
                });
            }
            let found = self.slice(e.start, e.end);
            if found != e.surface {
                return Err(RecordProblem::SurfaceMismatch {
                    entity_id: e.entity_id.clone(),
                    expected: e.surface.clone(),
                    found,
                });
            }
        }
        Ok(())
    }

    pub fn entity(&self, entity_id: &str) -> Option<&EntityAnnotation> {
        self.entities.iter().find(|e| e.entity_id == entity_id)
    }

    pub fn keys(&self) -> impl Iterator<Item = EntityKey> + '_ {
        self.entities
            .iter()
            .map(|e| EntityKey::new(self.id.clone(), e.entity_id.clone()))
    }
}

/// A record that parsed but failed validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRecord {
    pub line: usize,
    pub record: Record,
    pub problem: RecordProblem,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("reading corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate record id {id}")]
    DuplicateRecordId { line: usize, id: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub records: Vec<Record>,
    pub rejected: Vec<RejectedRecord>,
}

impl Corpus {
    pub fn from_records(records: Vec<Record>) -> Self {
        Self {
            records,
            rejected: Vec::new(),
        }
    }

    /// Parse the canonical line-delimited format. Blank lines are skipped.
    pub fn parse(source: &str) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::default();
        let mut ids = HashSet::new();
        for (i, line) in source.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
            if !ids.insert(record.id.clone()) {
                return Err(CorpusError::DuplicateRecordId {
                    line: line_no,
                    id: record.id,
                });
            }
            match record.validate() {
                Ok(()) => corpus.records.push(record),
                Err(problem) => corpus.rejected.push(RejectedRecord {
                    line: line_no,
                    record,
                    problem,
                }),
            }
        }
        Ok(corpus)
    }

    pub fn bundled() -> Self {
        Self::parse(crate::BUNDLED_CORPUS).expect("bundled corpus is well-formed")
    }

    /// Serialize the accepted records, one per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn entity_count(&self) -> usize {
        self.records.iter().map(|r| r.entities.len()).sum()
    }

    pub fn record(&self, id: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Gold labels keyed by entity.
    pub fn gold(&self) -> BTreeMap<EntityKey, Label> {
        self.records
            .iter()
            .flat_map(|r| {
                r.entities
                    .iter()
                    .map(move |e| (EntityKey::new(r.id.clone(), e.entity_id.clone()), e.gold_label))
            })
            .collect()
    }

    /// Manifest hash of all accepted entity keys.
    pub fn manifest(&self) -> String {
        let keys: Vec<EntityKey> = self.records.iter().flat_map(Record::keys).collect();
        crate::hash::manifest_hash(&keys)
    }
}

/// Read and validate a corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let source = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Corpus::parse(&source)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = concat!(
        r#"{"id":"r1","category":"gp","text":"geen koorts","entities":[{"entity_id":"e1","start":5,"end":11,"surface":"koorts","gold_label":"negated"}]}"#,
        "\n",
        r#"{"id":"r2","category":"discharge","text":"Wel hoest.","entities":[{"entity_id":"e1","start":4,"end":9,"surface":"hoest","gold_label":"not_negated"}]}"#,
        "\n"
    );

    #[test]
    fn parses_two_records() {
        let corpus = Corpus::parse(TWO).unwrap();
        assert_eq!(corpus.len(), 2);
        assert!(corpus.rejected.is_empty());
        assert_eq!(corpus.records[1].category, Category::DischargeLetter);
        assert_eq!(corpus.entity_count(), 2);
        assert_eq!(Corpus::parse(&corpus.to_jsonl()).unwrap(), corpus);
    }

    #[test]
    fn out_of_bounds_names_record_and_offset() {
        let src = r#"{"id":"r9","category":"gp","text":"pijn","entities":[{"entity_id":"e1","start":0,"end":7,"surface":"pijn","gold_label":"negated"}]}"#;
        let corpus = Corpus::parse(src).unwrap();
        assert!(corpus.records.is_empty());
        let rej = &corpus.rejected[0];
        assert_eq!(rej.record.id, "r9");
        let msg = rej.problem.to_string();
        assert!(msg.contains('7'), "{msg}");
        assert!(matches!(rej.problem, RecordProblem::SpanOutOfBounds { end: 7, len: 4, .. }));
    }

    #[test]
    fn surface_mismatch_flags_exactly_that_record() {
        let edited = TWO.replacen("\"surface\":\"hoest\"", "\"surface\":\"hoesT\"", 1);
        let corpus = Corpus::parse(&edited).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.rejected.len(), 1);
        assert_eq!(corpus.rejected[0].record.id, "r2");
        assert_eq!(corpus.rejected[0].line, 2);
        assert!(corpus.rejected[0].problem.to_string().contains("surface mismatch"));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let src = format!("{TWO}{{\"id\": oops}}\n");
        match Corpus::parse(&src) {
            Err(CorpusError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_category_is_malformed() {
        let src = TWO.replacen("\"gp\"", "\"nursing\"", 1);
        assert!(matches!(Corpus::parse(&src), Err(CorpusError::Malformed { line: 1, .. })));
    }

    #[test]
    fn duplicate_record_id_rejected() {
        let src = TWO.replacen("\"r2\"", "\"r1\"", 1);
        assert!(matches!(
            Corpus::parse(&src),
            Err(CorpusError::DuplicateRecordId { line: 2, .. })
        ));
    }

    #[test]
    fn empty_span_and_duplicate_entity() {
        let mut r = Corpus::parse(TWO).unwrap().records[0].clone();
        r.entities[0].end = r.entities[0].start;
        assert!(matches!(r.validate(), Err(RecordProblem::EmptySpan { .. })));
        let mut r = Corpus::parse(TWO).unwrap().records[0].clone();
        r.entities.push(r.entities[0].clone());
        assert!(matches!(r.validate(), Err(RecordProblem::DuplicateEntityId(_))));
    }

    #[test]
    fn multibyte_offsets() {
        let src = r#"{"id":"r1","category":"gp","text":"één ziekte","entities":[{"entity_id":"e1","start":4,"end":10,"surface":"ziekte","gold_label":"negated"}]}"#;
        assert!(Corpus::parse(src).unwrap().rejected.is_empty());
    }

    #[test]
    fn load_missing_file() {
        assert!(matches!(load_corpus("/nonexistent/corpus.jsonl"), Err(CorpusError::Io { .. })));
    }

    #[test]
    fn bundled_corpus_is_clean() {
        let corpus = Corpus::bundled();
        assert!(corpus.rejected.is_empty());
        assert!(corpus.len() >= 90);
    }
}
