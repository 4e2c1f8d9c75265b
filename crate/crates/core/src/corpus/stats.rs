use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Category, Corpus, Record};
use crate::textseg::Segmenter;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("cannot compute statistics of an empty corpus")]
    EmptyCorpus,
}

/// Mean with first and third quartile (linear interpolation between closest
/// ranks).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub mean: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Distribution {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: 0.0,
                q1: 0.0,
                q3: 0.0,
            };
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            q1: quantile(&sorted, 0.25),
            q3: quantile(&sorted, 0.75),
        }
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sums over records. `unique_words` adds up per-record unique counts and so
/// is additive across corpora; `vocabulary` counts distinct lowercase words
/// across the whole group and is not.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub records: usize,
    pub sentences: usize,
    pub words: usize,
    pub unique_words: usize,
    pub vocabulary: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub sentences: Distribution,
    pub words: Distribution,
    pub unique_words: Distribution,
    /// Distribution of per-record mean word length; records without words
    /// do not contribute.
    pub word_length: Distribution,
    pub totals: Totals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextStats {
    pub categories: BTreeMap<Category, CategoryStats>,
    pub overall: CategoryStats,
}

struct RecordCounts {
    sentences: usize,
    words: usize,
    unique: BTreeSet<String>,
    mean_word_len: Option<f64>,
}

fn count(record: &Record, segmenter: &Segmenter) -> RecordCounts {
    let seg = segmenter.segment(&record.text);
    let words: Vec<&str> = seg.tokens.iter().filter(|t| t.is_word()).map(|t| t.text.as_str()).collect();
    let chars: usize = words.iter().map(|w| w.chars().count()).sum();
    RecordCounts {
        sentences: seg.sentences.len(),
        words: words.len(),
        unique: words.iter().map(|w| w.to_lowercase()).collect(),
        mean_word_len: (!words.is_empty()).then(|| chars as f64 / words.len() as f64),
    }
}

fn summarize(counts: &[&RecordCounts]) -> CategoryStats {
    let col = |f: &dyn Fn(&RecordCounts) -> f64| counts.iter().map(|c| f(c)).collect::<Vec<_>>();
    let lengths: Vec<f64> = counts.iter().filter_map(|c| c.mean_word_len).collect();
    let vocabulary: BTreeSet<&String> = counts.iter().flat_map(|c| c.unique.iter()).collect();
    CategoryStats {
        sentences: Distribution::of(&col(&|c| c.sentences as f64)),
        words: Distribution::of(&col(&|c| c.words as f64)),
        unique_words: Distribution::of(&col(&|c| c.unique.len() as f64)),
        word_length: Distribution::of(&lengths),
        totals: Totals {
            records: counts.len(),
            sentences: counts.iter().map(|c| c.sentences).sum(),
            words: counts.iter().map(|c| c.words).sum(),
            unique_words: counts.iter().map(|c| c.unique.len()).sum(),
            vocabulary: vocabulary.len(),
        },
    }
}

/// Per-category descriptive statistics. Words are tokens containing an
/// alphanumeric character; punctuation tokens are not counted.
pub fn corpus_stats(corpus: &Corpus, segmenter: &Segmenter) -> Result<TextStats, StatsError> {
    if corpus.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    let counts: Vec<(Category, RecordCounts)> = corpus
        .records
        .iter()
        .map(|r| (r.category, count(r, segmenter)))
        .collect();
    let mut categories = BTreeMap::new();
    for category in Category::ALL {
        let group: Vec<&RecordCounts> = counts.iter().filter(|(c, _)| *c == category).map(|(_, c)| c).collect();
        if !group.is_empty() {
            categories.insert(category, summarize(&group));
        }
    }
    let all: Vec<&RecordCounts> = counts.iter().map(|(_, c)| c).collect();
    Ok(TextStats {
        categories,
        overall: summarize(&all),
    })
}

#[derive(Serialize)]
struct StatsLine<'a> {
    category: &'a str,
    #[serde(flatten)]
    stats: &'a CategoryStats,
}

impl TextStats {
    /// Mean (Q1, Q3) per record on the first line of each category, totals on
    /// the second.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<30} {:>22} {:>22} {:>22} {:>22}",
            "Letter category", "# sentences", "# words", "# unique words", "word length"
        );
        let _ = writeln!(out, "{:-<122}", "");
        let rows = self
            .categories
            .iter()
            .map(|(c, s)| (c.title(), s))
            .chain(std::iter::once(("All records", &self.overall)));
        for (title, s) in rows {
            let d = |d: &Distribution| format!("{:.1} ({}, {})", d.mean, trim(d.q1), trim(d.q3));
            let _ = writeln!(
                out,
                "{:<30} {:>22} {:>22} {:>22} {:>22}",
                title,
                d(&s.sentences),
                d(&s.words),
                d(&s.unique_words),
                d(&s.word_length)
            );
            let _ = writeln!(
                out,
                "{:<30} {:>22} {:>22} {:>22} {:>22}",
                format!("  n = {}", s.totals.records),
                s.totals.sentences,
                s.totals.words,
                format!("{} (vocab {})", s.totals.unique_words, s.totals.vocabulary),
                ""
            );
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let rows = self
            .categories
            .iter()
            .map(|(c, s)| (c.code(), s))
            .chain(std::iter::once(("all", &self.overall)));
        for (category, stats) in rows {
            out.push_str(&serde_json::to_string(&StatsLine { category, stats }).expect("serializable"));
            out.push('\n');
        }
        out
    }
}

fn trim(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
