use std::collections::BTreeMap;
use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use super::{Corpus, EntityAnnotation, Record};
use crate::label::EntityKey;
use crate::textseg::tokenize;

/// An annotation spanning more tokens than this is treated as covering
/// several terms.
pub const MAX_TERM_TOKENS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub max_tokens_per_record: usize,
    pub require_annotation: bool,
    pub require_single_term: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            max_tokens_per_record: 512,
            require_annotation: true,
            require_single_term: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    CorruptedSource,
    NoAnnotation,
    NotSingleTerm,
    OverLength,
}

impl ExclusionReason {
    pub const ALL: [ExclusionReason; 4] = [
        ExclusionReason::CorruptedSource,
        ExclusionReason::NoAnnotation,
        ExclusionReason::NotSingleTerm,
        ExclusionReason::OverLength,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::CorruptedSource => "corrupted_source",
            ExclusionReason::NoAnnotation => "no_annotation",
            ExclusionReason::NotSingleTerm => "not_single_term",
            ExclusionReason::OverLength => "over_length",
        }
    }
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accounting for one run of [`filter_corpus`].
///
/// Record-level reasons remove whole records (and their entities). Over-length
/// removes the entities of records whose token count exceeds the limit; such
/// records are then dropped as well since they carry nothing to evaluate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub input_records: usize,
    pub input_entities: usize,
    pub excluded_records: BTreeMap<ExclusionReason, Vec<String>>,
    pub excluded_entities: BTreeMap<ExclusionReason, Vec<EntityKey>>,
    /// Records surviving the record-level reasons.
    pub usable_records: usize,
    pub usable_entities: usize,
    pub output_records: usize,
    pub output_entities: usize,
}

#[derive(Serialize)]
struct ReportLine<'a> {
    reason: &'a str,
    records: usize,
    entities: usize,
    record_ids: &'a [String],
}

#[derive(Serialize)]
struct SummaryLine {
    summary: bool,
    input_records: usize,
    input_entities: usize,
    usable_records: usize,
    usable_entities: usize,
    output_records: usize,
    output_entities: usize,
}

impl ExclusionReport {
    pub fn records_excluded(&self, reason: ExclusionReason) -> usize {
        self.excluded_records.get(&reason).map_or(0, Vec::len)
    }

    pub fn entities_excluded(&self, reason: ExclusionReason) -> usize {
        self.excluded_entities.get(&reason).map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.excluded_records.values().all(Vec::is_empty) && self.excluded_entities.values().all(Vec::is_empty)
    }

    /// Check that every input record and entity is either kept or accounted
    /// for by exactly one reason.
    pub fn reconciles(&self) -> bool {
        let records: usize = self.excluded_records.values().map(Vec::len).sum();
        let entities: usize = self.excluded_entities.values().map(Vec::len).sum();
        let over_len_entities = self.entities_excluded(ExclusionReason::OverLength);
        let over_len_records = self.records_excluded(ExclusionReason::OverLength);
        self.input_records == self.output_records + records
            && self.input_entities == self.output_entities + entities
            && self.usable_records == self.output_records + over_len_records
            && self.usable_entities == self.output_entities + over_len_entities
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<18} {:>8} {:>9}", "Stage", "Records", "Entities");
        let _ = writeln!(out, "{:-<37}", "");
        let _ = writeln!(out, "{:<18} {:>8} {:>9}", "input", self.input_records, self.input_entities);
        for reason in ExclusionReason::ALL {
            let _ = writeln!(
                out,
                "{:<18} {:>8} {:>9}",
                format!("- {reason}"),
                self.records_excluded(reason),
                self.entities_excluded(reason)
            );
        }
        let _ = writeln!(out, "{:<18} {:>8} {:>9}", "usable", self.usable_records, self.usable_entities);
        let _ = writeln!(out, "{:<18} {:>8} {:>9}", "output", self.output_records, self.output_entities);
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for reason in ExclusionReason::ALL {
            let ids = self.excluded_records.get(&reason).map_or(&[][..], Vec::as_slice);
            let line = ReportLine {
                reason: reason.as_str(),
                records: ids.len(),
                entities: self.entities_excluded(reason),
                record_ids: ids,
            };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
        let summary = SummaryLine {
            summary: true,
            input_records: self.input_records,
            input_entities: self.input_entities,
            usable_records: self.usable_records,
            usable_entities: self.usable_entities,
            output_records: self.output_records,
            output_entities: self.output_entities,
        };
        out.push_str(&serde_json::to_string(&summary).expect("serializable"));
        out.push('\n');
        out
    }
}

fn is_single_term(entity: &EntityAnnotation) -> bool {
    let surface = entity.surface.trim();
    surface.chars().count() >= 2
        && surface.chars().any(char::is_alphabetic)
        && !surface.contains('\n')
        && tokenize(surface).len() <= MAX_TERM_TOKENS
}

/// Apply the exclusion pipeline: corrupted sources, records without
/// annotations, records whose annotations are not single terms, then
/// entities of over-length records.
pub fn filter_corpus(raw: &Corpus, cfg: &FilterConfig) -> (Corpus, ExclusionReport) {
    let mut report = ExclusionReport {
        input_records: raw.records.len() + raw.rejected.len(),
        input_entities: raw.entity_count() + raw.rejected.iter().map(|r| r.record.entities.len()).sum::<usize>(),
        ..Default::default()
    };
    let mut exclude = |reason: ExclusionReason, record: &Record| {
        report
            .excluded_records
            .entry(reason)
            .or_default()
            .push(record.id.clone());
        report
            .excluded_entities
            .entry(reason)
            .or_default()
            .extend(record.keys());
    };

    for rejected in &raw.rejected {
        exclude(ExclusionReason::CorruptedSource, &rejected.record);
    }

    let mut usable = Vec::new();
    for record in &raw.records {
        if cfg.require_annotation && record.entities.is_empty() {
            exclude(ExclusionReason::NoAnnotation, record);
        } else if cfg.require_single_term && !record.entities.iter().all(is_single_term) {
            exclude(ExclusionReason::NotSingleTerm, record);
        } else {
            usable.push(record);
        }
    }

    let mut kept = Vec::new();
    for record in &usable {
        if tokenize(&record.text).len() > cfg.max_tokens_per_record {
            exclude(ExclusionReason::OverLength, record);
        } else {
            kept.push((*record).clone());
        }
    }

    report.usable_records = usable.len();
    report.usable_entities = usable.iter().map(|r| r.entities.len()).sum();
    let filtered = Corpus::from_records(kept);
    report.output_records = filtered.len();
    report.output_entities = filtered.entity_count();
    debug_assert!(report.reconciles());
    (filtered, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Category, RecordProblem, RejectedRecord};
    use crate::label::Label;

    fn record(id: &str, text: &str, terms: &[&str]) -> Record {
        let entities = terms
            .iter()
            .enumerate()
            .map(|(i, term)| {
                let byte = text.find(term).unwrap();
                let start = text[..byte].chars().count();
                EntityAnnotation {
                    entity_id: format!("e{i}"),
                    start,
                    end: start + term.chars().count(),
                    surface: term.to_string(),
                    gold_label: Label::NotNegated,
                }
            })
            .collect();
        Record {
            id: id.into(),
            category: Category::GeneralPractitioner,
            text: text.into(),
            entities,
        }
    }

    #[test]
    fn record_without_entities_excluded() {
        let raw = Corpus::from_records(vec![record("r1", "geen koorts", &["koorts"]), record("r2", "controle", &[])]);
        let (kept, report) = filter_corpus(&raw, &FilterConfig::default());
        assert_eq!(kept.len(), 1);
        assert_eq!(report.excluded_records[&ExclusionReason::NoAnnotation], vec!["r2".to_string()]);
        assert!(report.reconciles());
    }

    #[test]
    fn over_length_record_entities_excluded() {
        let long = vec!["woord"; 599].join(" ") + " koorts";
        let raw = Corpus::from_records(vec![record("long", &long, &["koorts"]), record("ok", "hoest", &["hoest"])]);
        let (kept, report) = filter_corpus(&raw, &FilterConfig::default());
        assert_eq!(kept.len(), 1);
        assert_eq!(report.entities_excluded(ExclusionReason::OverLength), 1);
        assert_eq!(report.usable_records, 2);
        assert_eq!(report.usable_entities, 2);
        assert_eq!(report.output_entities, 1);
        assert!(report.reconciles());
    }

    #[test]
    fn clean_corpus_passes_unchanged() {
        let raw = Corpus::from_records(vec![record("r1", "geen koorts", &["koorts"]), record("r2", "wel hoest", &["hoest"])]);
        let (kept, report) = filter_corpus(&raw, &FilterConfig::default());
        assert_eq!(kept, raw);
        assert!(report.is_empty());
        assert_eq!(report.input_records, 2);
        assert_eq!(report.output_records, 2);
    }

    #[test]
    fn not_single_term_and_corrupted() {
        let mut raw = Corpus::from_records(vec![
            record("letter", "x koorts", &["x"]),
            record("digits", "temp 38.2", &["38.2"]),
            record("ok", "hoest", &["hoest"]),
        ]);
        raw.rejected.push(RejectedRecord {
            line: 4,
            record: record("bad", "pijn", &["pijn"]),
            problem: RecordProblem::EmptyId,
        });
        let (kept, report) = filter_corpus(&raw, &FilterConfig::default());
        assert_eq!(kept.len(), 1);
        assert_eq!(report.records_excluded(ExclusionReason::NotSingleTerm), 2);
        assert_eq!(report.records_excluded(ExclusionReason::CorruptedSource), 1);
        assert_eq!(report.input_records, 4);
        assert!(report.reconciles());

        let relaxed = FilterConfig {
            require_single_term: false,
            ..Default::default()
        };
        assert_eq!(filter_corpus(&raw, &relaxed).0.len(), 3);
    }

    #[test]
    fn filtering_is_idempotent() {
        let long = vec!["w"; 20].join(" ") + " pijn";
        let raw = Corpus::from_records(vec![
            record("a", &long, &["pijn"]),
            record("b", "controle", &[]),
            record("c", "hoest", &["hoest"]),
        ]);
        let cfg = FilterConfig {
            max_tokens_per_record: 10,
            ..Default::default()
        };
        let (once, _) = filter_corpus(&raw, &cfg);
        let (twice, report) = filter_corpus(&once, &cfg);
        assert_eq!(once, twice);
        assert!(report.is_empty());
    }

    #[test]
    fn report_renders() {
        let raw = Corpus::from_records(vec![record("r2", "controle", &[])]);
        let (_, report) = filter_corpus(&raw, &FilterConfig::default());
        assert!(report.to_table().contains("no_annotation"));
        let jsonl = report.to_jsonl();
        assert_eq!(jsonl.lines().count(), 5);
        assert!(jsonl.contains(r#""record_ids":["r2"]"#));
    }
}
