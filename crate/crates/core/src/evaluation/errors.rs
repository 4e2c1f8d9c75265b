//! Error analysis: pull misclassified entities out with their sentence,
//! attach human-assigned categories from a tag file, and tabulate.
//!
//! Tag file lines: `record_id<TAB>entity_id<TAB>method<TAB>category<TAB>annotator`.
//! The file is append-only; for a given case and annotator the last line wins.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{kappa::cohens_kappa, AgreementResult, EvalError};
use crate::corpus::Corpus;
use crate::label::{EntityKey, Label};
use crate::predictions::PredictionSet;
use crate::textseg::Segmenter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    FalsePositive,
    FalseNegative,
}

impl ErrorKind {
    pub fn title(self) -> &'static str {
        match self {
            ErrorKind::FalsePositive => "False positives",
            ErrorKind::FalseNegative => "False negatives",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    Ambiguity,
    AnnotationError,
    Minus,
    NegationOfDifferentTerm,
    Other,
    Punctuation,
    Scope,
    Speculation,
    UncommonNegation,
    WrongModality,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 10] = [
        ErrorCategory::Ambiguity,
        ErrorCategory::AnnotationError,
        ErrorCategory::Minus,
        ErrorCategory::NegationOfDifferentTerm,
        ErrorCategory::Other,
        ErrorCategory::Punctuation,
        ErrorCategory::Scope,
        ErrorCategory::Speculation,
        ErrorCategory::UncommonNegation,
        ErrorCategory::WrongModality,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ErrorCategory::Ambiguity => "ambiguity",
            ErrorCategory::AnnotationError => "annotation_error",
            ErrorCategory::Minus => "minus",
            ErrorCategory::NegationOfDifferentTerm => "negation_of_different_term",
            ErrorCategory::Other => "other",
            ErrorCategory::Punctuation => "punctuation",
            ErrorCategory::Scope => "scope",
            ErrorCategory::Speculation => "speculation",
            ErrorCategory::UncommonNegation => "uncommon_negation",
            ErrorCategory::WrongModality => "wrong_modality",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ErrorCategory::Ambiguity => "Ambiguous",
            ErrorCategory::AnnotationError => "Annotation error",
            ErrorCategory::Minus => "Minus",
            ErrorCategory::NegationOfDifferentTerm => "Negation of different term",
            ErrorCategory::Other => "Other",
            ErrorCategory::Punctuation => "Punctuation",
            ErrorCategory::Scope => "Scope",
            ErrorCategory::Speculation => "Speculation",
            ErrorCategory::UncommonNegation => "Uncommon negation",
            ErrorCategory::WrongModality => "Wrong modality",
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ErrorCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ErrorCategory::ALL
            .into_iter()
            .find(|c| c.code() == s)
            .ok_or_else(|| format!("unknown error category `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCase {
    pub record_id: String,
    pub entity_id: String,
    pub kind: ErrorKind,
    pub method: String,
    pub surface: String,
    /// The sentence holding the entity's first token.
    pub excerpt: String,
    pub category: Option<ErrorCategory>,
    pub annotator: Option<String>,
}

impl ErrorCase {
    pub fn key(&self) -> EntityKey {
        EntityKey::new(self.record_id.clone(), self.entity_id.clone())
    }
}

/// One misclassified entity per case, in key order, uncategorized.
pub fn extract_errors(pred: &PredictionSet, gold: &Corpus, segmenter: &Segmenter) -> Result<Vec<ErrorCase>, EvalError> {
    let gold_keys: Vec<EntityKey> = gold.records.iter().flat_map(|r| r.keys()).collect();
    pred.check_coverage(&gold_keys)?;
    let mut cases = Vec::new();
    for record in &gold.records {
        let mut segmented = None;
        let mut entities: Vec<_> = record.entities.iter().collect();
        entities.sort_by(|a, b| a.entity_id.cmp(&b.entity_id));
        for e in entities {
            let key = EntityKey::new(record.id.clone(), e.entity_id.clone());
            let predicted = pred.label(&key).expect("coverage checked");
            let kind = match (predicted, e.gold_label) {
                (Label::Negated, Label::NotNegated) => ErrorKind::FalsePositive,
                (Label::NotNegated, Label::Negated) => ErrorKind::FalseNegative,
                _ => continue,
            };
            let seg = segmented.get_or_insert_with(|| segmenter.segment(&record.text));
            let excerpt = seg
                .token_range(e.start, e.end)
                .and_then(|r| seg.sentence_of(r.start))
                .map(|s| record.slice(seg.sentences[s].start, seg.sentences[s].end))
                .unwrap_or_else(|| e.surface.clone());
            cases.push(ErrorCase {
                record_id: record.id.clone(),
                entity_id: e.entity_id.clone(),
                kind,
                method: pred.method().to_string(),
                surface: e.surface.clone(),
                excerpt,
                category: None,
                annotator: None,
            });
        }
    }
    cases.sort_by_key(ErrorCase::key);
    Ok(cases)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tag {
    pub key: EntityKey,
    pub method: String,
    pub category: ErrorCategory,
    pub annotator: String,
}

impl Tag {
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\n",
            self.key.record_id, self.key.entity_id, self.method, self.category, self.annotator
        )
    }
}

pub fn parse_tags(source: &str) -> Result<Vec<Tag>, EvalError> {
    let mut tags = Vec::new();
    for (i, line) in source.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| EvalError::MalformedTag { line: i + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 tab-separated fields, got {}", fields.len())));
        }
        tags.push(Tag {
            key: EntityKey::new(fields[0], fields[1]),
            method: fields[2].to_string(),
            category: fields[3].parse().map_err(bad)?,
            annotator: fields[4].to_string(),
        });
    }
    Ok(tags)
}

/// Attach categories to cases from `tags`. With `annotator` set only that
/// annotator's tags are used; otherwise the last matching line wins.
pub fn assign_categories(cases: &mut [ErrorCase], tags: &[Tag], annotator: Option<&str>) {
    let mut latest: BTreeMap<(EntityKey, &str), &Tag> = BTreeMap::new();
    for tag in tags.iter().filter(|t| annotator.is_none_or(|a| a == t.annotator)) {
        latest.insert((tag.key.clone(), tag.method.as_str()), tag);
    }
    for case in cases {
        if let Some(tag) = latest.get(&(case.key(), case.method.as_str())) {
            case.category = Some(tag.category);
            case.annotator = Some(tag.annotator.clone());
        }
    }
}

/// Cohen's kappa between annotators on entities categorized by at least two
/// of them. Each annotator's last tag per entity counts, whichever method it
/// was filed under; every annotator pair on an entity contributes one item.
pub fn tag_agreement(tags: &[Tag]) -> Result<AgreementResult, EvalError> {
    let mut by_entity: BTreeMap<&EntityKey, BTreeMap<&str, ErrorCategory>> = BTreeMap::new();
    for tag in tags {
        by_entity
            .entry(&tag.key)
            .or_default()
            .insert(tag.annotator.as_str(), tag.category);
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for annotators in by_entity.values() {
        let cats: Vec<ErrorCategory> = annotators.values().copied().collect();
        for i in 0..cats.len() {
            for j in i + 1..cats.len() {
                a.push(cats[i]);
                b.push(cats[j]);
            }
        }
    }
    cohens_kappa(&a, &b)
}

/// Counts per (kind, method, category) with column percentages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorTable {
    pub methods: Vec<String>,
    pub counts: BTreeMap<ErrorKind, BTreeMap<String, BTreeMap<ErrorCategory, usize>>>,
}

#[derive(Serialize)]
struct TableLine<'a> {
    kind: ErrorKind,
    method: &'a str,
    category: ErrorCategory,
    count: usize,
    percent: u64,
}

/// Integer percentage rounded half away from zero.
pub(crate) fn percent(count: usize, total: usize) -> u64 {
    if total == 0 {
        return 0;
    }
    ((200 * count + total) / (2 * total)) as u64
}

impl ErrorTable {
    pub fn count(&self, kind: ErrorKind, method: &str, category: ErrorCategory) -> usize {
        self.counts
            .get(&kind)
            .and_then(|m| m.get(method))
            .and_then(|c| c.get(&category))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self, kind: ErrorKind, method: &str) -> usize {
        self.counts
            .get(&kind)
            .and_then(|m| m.get(method))
            .map_or(0, |c| c.values().sum())
    }

    pub fn percent(&self, kind: ErrorKind, method: &str, category: ErrorCategory) -> u64 {
        percent(self.count(kind, method, category), self.total(kind, method))
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for kind in [ErrorKind::FalsePositive, ErrorKind::FalseNegative] {
            let _ = write!(out, "{:<28}", kind.title());
            for m in &self.methods {
                let _ = write!(out, " {m:>16}");
            }
            out.push('\n');
            for category in ErrorCategory::ALL {
                let _ = write!(out, "{:<28}", category.title());
                for m in &self.methods {
                    let cell = format!("{} {:>3}%", self.count(kind, m, category), self.percent(kind, m, category));
                    let _ = write!(out, " {cell:>16}");
                }
                out.push('\n');
            }
            let _ = write!(out, "{:<28}", "Total");
            for m in &self.methods {
                let _ = write!(out, " {:>16}", self.total(kind, m));
            }
            out.push_str("\n\n");
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for kind in [ErrorKind::FalsePositive, ErrorKind::FalseNegative] {
            for m in &self.methods {
                for category in ErrorCategory::ALL {
                    let line = TableLine {
                        kind,
                        method: m,
                        category,
                        count: self.count(kind, m, category),
                        percent: self.percent(kind, m, category),
                    };
                    out.push_str(&serde_json::to_string(&line).expect("serializable"));
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Tabulate categorized cases. Methods appear in order of first occurrence.
pub fn aggregate_errors(cases: &[ErrorCase]) -> Result<ErrorTable, EvalError> {
    let mut methods: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut counts: BTreeMap<ErrorKind, BTreeMap<String, BTreeMap<ErrorCategory, usize>>> = BTreeMap::new();
    for case in cases {
        let category = case.category.ok_or_else(|| EvalError::Untagged(case.key()))?;
        if seen.insert(case.method.clone()) {
            methods.push(case.method.clone());
        }
        *counts
            .entry(case.kind)
            .or_default()
            .entry(case.method.clone())
            .or_default()
            .entry(category)
            .or_default() += 1;
    }
    Ok(ErrorTable { methods, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Category, EntityAnnotation, Record};
    use proptest::prelude::*;

    fn gold() -> Corpus {
        let text = "Geen koorts. Wel hoest en pijn.";
        let ent = |id: &str, term: &str, label| {
            let start = text.find(term).unwrap();
            EntityAnnotation {
                entity_id: id.into(),
                start,
                end: start + term.len(),
                surface: term.into(),
                gold_label: label,
            }
        };
        Corpus::from_records(vec![Record {
            id: "r1".into(),
            category: Category::GeneralPractitioner,
            text: text.into(),
            entities: vec![
                ent("e1", "koorts", Label::Negated),
                ent("e2", "hoest", Label::NotNegated),
                ent("e3", "pijn", Label::NotNegated),
            ],
        }])
    }

    fn preds(labels: [Label; 3]) -> PredictionSet {
        PredictionSet::from_labels(
            "m",
            ["e1", "e2", "e3"]
                .iter()
                .zip(labels)
                .map(|(e, l)| (EntityKey::new("r1", *e), l)),
        )
        .unwrap()
    }

    use Label::{Negated as N, NotNegated as A};

    #[test]
    fn perfect_has_no_errors() {
        assert!(extract_errors(&preds([N, A, A]), &gold(), &Segmenter::default()).unwrap().is_empty());
    }

    #[test]
    fn one_fp_one_fn_with_sentence_excerpts() {
        let cases = extract_errors(&preds([A, N, A]), &gold(), &Segmenter::default()).unwrap();
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[0].kind, ErrorKind::FalseNegative);
        assert_eq!(cases[0].excerpt, "Geen koorts.");
        assert_eq!(cases[1].kind, ErrorKind::FalsePositive);
        assert_eq!(cases[1].excerpt, "Wel hoest en pijn.");
        assert!(cases.iter().all(|c| c.category.is_none()));
    }

    #[test]
    fn coverage_enforced() {
        let partial = PredictionSet::from_labels("m", [(EntityKey::new("r1", "e1"), N)]).unwrap();
        assert!(extract_errors(&partial, &gold(), &Segmenter::default()).is_err());
    }

    fn case(method: &str, id: usize, kind: ErrorKind, category: Option<ErrorCategory>) -> ErrorCase {
        ErrorCase {
            record_id: "r".into(),
            entity_id: format!("e{id}"),
            kind,
            method: method.into(),
            surface: String::new(),
            excerpt: String::new(),
            category,
            annotator: None,
        }
    }

    #[test]
    fn ten_scope_fps() {
        let cases: Vec<ErrorCase> = (0..10)
            .map(|i| case("rule_based", i, ErrorKind::FalsePositive, Some(ErrorCategory::Scope)))
            .collect();
        let t = aggregate_errors(&cases).unwrap();
        assert_eq!(t.count(ErrorKind::FalsePositive, "rule_based", ErrorCategory::Scope), 10);
        assert_eq!(t.percent(ErrorKind::FalsePositive, "rule_based", ErrorCategory::Scope), 100);
    }

    #[test]
    fn rule_based_fp_scope_share() {
        assert_eq!(percent(136, 331), 41);
        assert_eq!(percent(119, 331), 36);
        assert_eq!(percent(1, 331), 0);
        assert_eq!(percent(1, 2), 50);
        assert_eq!(percent(1, 8), 13); // 12.5 rounds away from zero
    }

    #[test]
    fn untagged_case_rejected() {
        let cases = vec![case("m", 0, ErrorKind::FalseNegative, None)];
        assert!(matches!(aggregate_errors(&cases), Err(EvalError::Untagged(_))));
    }

    #[test]
    fn tags_parse_assign_and_agree() {
        let src = "# tags\n\
            r\te0\tm\tscope\tann1\n\
            r\te0\tm\tminus\tann2\n\
            r\te1\tm\tother\tann1\n\
            r\te1\tm\tspeculation\tann1\n";
        let tags = parse_tags(src).unwrap();
        assert_eq!(tags.len(), 4);
        let mut cases = vec![
            case("m", 0, ErrorKind::FalseNegative, None),
            case("m", 1, ErrorKind::FalsePositive, None),
        ];
        assign_categories(&mut cases, &tags, Some("ann1"));
        assert_eq!(cases[0].category, Some(ErrorCategory::Scope));
        assert_eq!(cases[1].category, Some(ErrorCategory::Speculation));
        assign_categories(&mut cases, &tags, None);
        assert_eq!(cases[0].category, Some(ErrorCategory::Minus));
        assert_eq!(cases[0].annotator.as_deref(), Some("ann2"));

        // only e0 has two annotators, and they disagree
        let r = tag_agreement(&tags).unwrap();
        assert_eq!(r.items, 1);
        assert_eq!(r.observed, 0.0);
        assert!(matches!(parse_tags("r\te\tm\tnonsense\ta\n"), Err(EvalError::MalformedTag { line: 1, .. })));
        assert_eq!(Tag { ..tags[0].clone() }.to_line(), "r\te0\tm\tscope\tann1\n");
    }

    #[test]
    fn renders_table() {
        let cases = vec![
            case("a", 0, ErrorKind::FalsePositive, Some(ErrorCategory::Scope)),
            case("b", 1, ErrorKind::FalseNegative, Some(ErrorCategory::Minus)),
        ];
        let t = aggregate_errors(&cases).unwrap();
        assert_eq!(t.methods, ["a", "b"]);
        let table = t.to_table();
        assert!(table.contains("Negation of different term"));
        assert_eq!(t.to_jsonl().lines().count(), 40);
    }

    proptest! {
        #[test]
        fn percentages_sum_to_100_within_rounding(cats in proptest::collection::vec(0usize..10, 1..400)) {
            let cases: Vec<ErrorCase> = cats
                .iter()
                .enumerate()
                .map(|(i, c)| case("m", i, ErrorKind::FalsePositive, Some(ErrorCategory::ALL[*c])))
                .collect();
            let t = aggregate_errors(&cases).unwrap();
            let sum: u64 = ErrorCategory::ALL.iter().map(|c| t.percent(ErrorKind::FalsePositive, "m", *c)).sum();
            let used = ErrorCategory::ALL.iter().filter(|c| t.count(ErrorKind::FalsePositive, "m", **c) > 0).count() as i64;
            // each used cell is off by at most half a point
            prop_assert!((sum as i64 - 100).abs() * 2 <= used);
            prop_assert_eq!(t.total(ErrorKind::FalsePositive, "m"), cats.len());
        }
    }
}
