//! Subcommand bodies. Each returns the text it would write so the same code
//! serves the binary and in-process tests.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use log::info;
use negare_core::context::load_lexicon;
use negare_core::corpus::{corpus_stats, filter_corpus, load_corpus, split_folds, ExclusionReport};
use negare_core::evaluation::{
    aggregate_errors, assign_categories, evaluate, evaluate_cv, extract_errors, parse_tags, split_by_folds, tag_agreement, ErrorCase,
};
use negare_core::predictions::{disagreement_partition, majority_vote_all};
use negare_core::textseg::{asymmetric_context, extract_window, tokenize, Abbreviations, TokenWindow};
use negare_core::{ConfusionCounts, Corpus, Detector, FoldAssignment, Lexicon, PredictionSet, Segmenter};
use serde::Serialize;

use crate::config::{check_inputs, Format, RunConfig};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Corpus after the exclusion pipeline, with its report.
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub report: Option<ExclusionReport>,
}

pub fn load(cfg: &RunConfig) -> Result<LoadedCorpus> {
    let raw = match &cfg.corpus {
        Some(p) => load_corpus(p).with_context(|| format!("loading corpus {}", p.display()))?,
        None => Corpus::bundled(),
    };
    info!("loaded {} records, {} entities, {} rejected", raw.len(), raw.entity_count(), raw.rejected.len());
    let Some(filter) = cfg.filter else {
        if !raw.rejected.is_empty() {
            return Err(anyhow!("{} corrupted records; run with filtering enabled or fix the corpus", raw.rejected.len()).into());
        }
        return Ok(LoadedCorpus { corpus: raw, report: None });
    };
    let (corpus, report) = filter_corpus(&raw, &filter);
    if !report.reconciles() {
        return Err(CliError::Internal(format!("exclusion report does not reconcile: {report:?}")));
    }
    info!("after filtering: {} records, {} entities", corpus.len(), corpus.entity_count());
    Ok(LoadedCorpus { corpus, report: Some(report) })
}

pub fn segmenter(cfg: &RunConfig) -> Result<Segmenter> {
    Ok(match &cfg.abbreviations {
        Some(p) => Segmenter::new(Abbreviations::load(p).with_context(|| format!("loading abbreviations {}", p.display()))?),
        None => Segmenter::bundled(),
    })
}

pub fn detector(cfg: &RunConfig) -> Result<Detector> {
    let lexicon = match &cfg.lexicon {
        Some(p) => load_lexicon(p).with_context(|| format!("loading lexicon {}", p.display()))?,
        None => Lexicon::bundled(),
    };
    Ok(Detector::new(lexicon, segmenter(cfg)?))
}

fn read_predictions(path: &Path, cfg: &RunConfig) -> Result<PredictionSet> {
    let set = PredictionSet::read(path).with_context(|| format!("reading predictions {}", path.display()))?;
    Ok(match cfg.threshold {
        Some(t) => set.rethreshold(t).with_context(|| format!("rethresholding {}", path.display()))?,
        None => set,
    })
}

fn read_against(paths: &[PathBuf], cfg: &RunConfig, corpus: &Corpus) -> Result<Vec<PredictionSet>> {
    check_inputs(paths)?;
    let expected = corpus.manifest();
    let mut sets = Vec::new();
    for p in paths {
        let set = read_predictions(p, cfg)?;
        let got = set.manifest();
        if got != expected {
            return Err(anyhow!(
                "manifest mismatch: {} hashes to {got}, corpus hashes to {expected}",
                p.display()
            )
            .into());
        }
        sets.push(set);
    }
    let mut names = BTreeSet::new();
    for s in &sets {
        if !names.insert(s.method()) {
            return Err(anyhow!("method `{}` given more than once", s.method()).into());
        }
    }
    Ok(sets)
}

pub fn detect(cfg: &RunConfig) -> Result<String> {
    let loaded = load(cfg)?;
    let set = detector(cfg)?.detect_corpus(&loaded.corpus, cfg.parallel).context("detection failed")?;
    if set.len() != loaded.corpus.entity_count() {
        return Err(CliError::Internal(format!(
            "{} predictions for {} entities",
            set.len(),
            loaded.corpus.entity_count()
        )));
    }
    Ok(set.to_text())
}

/// Everything `eval` produces, keyed by the file name used under `--out`.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct EvalOutput {
    pub files: Vec<(String, String)>,
}

impl EvalOutput {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Table => "txt",
        Format::Jsonl => "jsonl",
    }
}

pub fn eval(cfg: &RunConfig, preds: &[PathBuf], folds: Option<&Path>) -> Result<EvalOutput> {
    let loaded = load(cfg)?;
    let corpus = &loaded.corpus;
    let sets = read_against(preds, cfg, corpus)?;
    let refs: Vec<&PredictionSet> = sets.iter().collect();
    let mut out = EvalOutput::default();

    let report = evaluate(&refs, corpus).context("evaluation failed")?;
    let text = match cfg.format {
        Format::Table => report.to_table(),
        Format::Jsonl => report.to_jsonl(),
    };
    out.files.push((format!("metrics.{}", ext(cfg.format)), text));

    if let Some(path) = folds {
        check_inputs([&path.to_path_buf()])?;
        let text = std::fs::read_to_string(path).with_context(|| format!("reading folds {}", path.display()))?;
        let assignment = FoldAssignment::parse(&text).with_context(|| format!("parsing folds {}", path.display()))?;
        for set in &sets {
            let cv = evaluate_cv(&split_by_folds(set, &assignment), corpus, &assignment)
                .with_context(|| format!("cross-validating {}", set.method()))?;
            let pooled = cv.pooled.row(None, set.method()).map(|r| r.counts);
            let summed: ConfusionCounts = cv.folds.iter().map(|f| f.counts).sum();
            if pooled != Some(summed) {
                return Err(CliError::Internal(format!("{}: fold counts do not sum to pooled counts", set.method())));
            }
            let text = match cfg.format {
                Format::Table => cv.folds_table(),
                Format::Jsonl => jsonl(&cv.folds),
            };
            out.files.push((format!("folds_{}.{}", set.method(), ext(cfg.format)), text));
        }
    }

    let segmenter = segmenter(cfg)?;
    let mut erred = BTreeSet::new();
    for set in &sets {
        let cases = extract_errors(set, corpus, &segmenter).context("extracting errors")?;
        erred.extend(cases.iter().map(ErrorCase::key));
        out.files.push((format!("errors_{}.{}", set.method(), case_ext(cfg.format)), render_cases(&cases, cfg.format)));
    }

    if sets.len() >= 3 {
        let partition = disagreement_partition(&refs, &corpus.gold()).context("partitioning errors")?;
        if partition.union_size() != erred.len() {
            return Err(CliError::Internal(format!(
                "partition cells sum to {} but {} entities were misclassified",
                partition.union_size(),
                erred.len()
            )));
        }
        let text = match cfg.format {
            Format::Table => partition.to_table(),
            Format::Jsonl => partition.to_jsonl(),
        };
        out.files.push((format!("partition.{}", ext(cfg.format)), text));
    }
    Ok(out)
}

pub fn ensemble(cfg: &RunConfig, preds: &[PathBuf]) -> Result<String> {
    check_inputs(preds)?;
    let sets = preds.iter().map(|p| read_predictions(p, cfg)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&PredictionSet> = sets.iter().collect();
    let merged = majority_vote_all(&refs).context("majority vote failed")?;
    if merged.manifest() != sets[0].manifest() {
        return Err(CliError::Internal("ensemble output coverage differs from its inputs".into()));
    }
    Ok(merged.to_text())
}

pub fn stats(cfg: &RunConfig) -> Result<String> {
    let loaded = load(cfg)?;
    let stats = corpus_stats(&loaded.corpus, &segmenter(cfg)?).context("computing statistics")?;
    Ok(match cfg.format {
        Format::Table => stats.to_table(),
        Format::Jsonl => stats.to_jsonl(),
    })
}

/// Returns (exclusion report, filtered corpus).
pub fn filter(cfg: &RunConfig) -> Result<(String, String)> {
    let mut cfg = cfg.clone();
    cfg.filter.get_or_insert_with(Default::default);
    let loaded = load(&cfg)?;
    let report = loaded.report.expect("filtering enabled");
    let text = match cfg.format {
        Format::Table => report.to_table(),
        Format::Jsonl => report.to_jsonl(),
    };
    Ok((text, loaded.corpus.to_jsonl()))
}

pub fn folds(cfg: &RunConfig) -> Result<String> {
    let loaded = load(cfg)?;
    let folds = split_folds(&loaded.corpus, cfg.k, cfg.seed).context("assigning folds")?;
    let sizes = folds.sizes();
    let (lo, hi) = (sizes.iter().min(), sizes.iter().max());
    if matches!((lo, hi), (Some(l), Some(h)) if h - l > 1) {
        return Err(CliError::Internal(format!("unbalanced folds {sizes:?}")));
    }
    Ok(folds.to_tsv())
}

fn case_ext(format: Format) -> &'static str {
    match format {
        Format::Table => "tsv",
        Format::Jsonl => "jsonl",
    }
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Error cases as a tab-separated sheet (header included) or JSONL.
pub fn render_cases(cases: &[ErrorCase], format: Format) -> String {
    match format {
        Format::Jsonl => jsonl(cases),
        Format::Table => {
            let mut out = String::from("record_id\tentity_id\tmethod\tkind\tcategory\tsurface\texcerpt\n");
            for c in cases {
                let kind = serde_json::to_value(c.kind).expect("serializable");
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                    c.record_id,
                    c.entity_id,
                    c.method,
                    kind.as_str().unwrap_or_default(),
                    c.category.map(|c| c.code()).unwrap_or(""),
                    clean(&c.surface),
                    clean(&c.excerpt)
                ));
            }
            out
        }
    }
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| serde_json::to_string(i).expect("serializable") + "\n")
        .collect()
}

/// Without tags: the uncategorized error cases. With tags: the category
/// table, plus annotator agreement when two or more annotators tagged the
/// same entities.
pub fn errors(cfg: &RunConfig, preds: &[PathBuf], tags: Option<&Path>, annotator: Option<&str>) -> Result<String> {
    let loaded = load(cfg)?;
    let sets = read_against(preds, cfg, &loaded.corpus)?;
    let segmenter = segmenter(cfg)?;
    let mut cases = Vec::new();
    for set in &sets {
        cases.extend(extract_errors(set, &loaded.corpus, &segmenter).context("extracting errors")?);
    }
    let Some(tags_path) = tags else {
        return Ok(render_cases(&cases, cfg.format));
    };
    check_inputs([&tags_path.to_path_buf()])?;
    let text = std::fs::read_to_string(tags_path).with_context(|| format!("reading tags {}", tags_path.display()))?;
    let tags = parse_tags(&text).with_context(|| format!("parsing tags {}", tags_path.display()))?;
    assign_categories(&mut cases, &tags, annotator);
    let table = aggregate_errors(&cases).context("tabulating errors")?;
    let annotators: BTreeSet<&str> = tags.iter().map(|t| t.annotator.as_str()).collect();
    let agreement = if annotators.len() >= 2 { tag_agreement(&tags).ok() } else { None };
    Ok(match cfg.format {
        Format::Table => {
            let mut out = table.to_table();
            if let Some(a) = agreement {
                out.push_str(&format!("Annotator agreement: kappa {:.3} over {} paired judgements\n", a.kappa, a.items));
            }
            out
        }
        Format::Jsonl => {
            let mut out = table.to_jsonl();
            if let Some(a) = agreement {
                out.push_str(&serde_json::to_string(&serde_json::json!({ "agreement": a })).expect("serializable"));
                out.push('\n');
            }
            out
        }
    })
}

#[derive(Serialize)]
struct WindowLine<'a> {
    record_id: &'a str,
    entity_id: &'a str,
    gold_label: negare_core::Label,
    /// Record-level token range of the window.
    window: [usize; 2],
    /// Entity token range relative to the window start.
    entity: [usize; 2],
    tokens: Vec<&'a str>,
    members: Vec<&'a str>,
}

/// One JSON line per entity: a centred window of `cfg.window` tokens, or an
/// asymmetric one when `sides` is given.
pub fn windows(cfg: &RunConfig, sides: Option<(usize, usize)>) -> Result<String> {
    if sides.is_none() && cfg.window == 0 {
        return Err(anyhow!("--window must be at least 1").into());
    }
    let loaded = load(cfg)?;
    let mut out = String::new();
    for record in &loaded.corpus.records {
        let tokens = tokenize(&record.text);
        for e in &record.entities {
            let w: TokenWindow = match sides {
                Some((l, r)) => asymmetric_context(record, e, l, r),
                None => extract_window(record, e, cfg.window),
            }
            .with_context(|| format!("window for {}/{}", record.id, e.entity_id))?;
            let line = WindowLine {
                record_id: &record.id,
                entity_id: &e.entity_id,
                gold_label: e.gold_label,
                window: [w.tokens.start, w.tokens.end],
                entity: [w.entity_tokens.start - w.tokens.start, w.entity_tokens.end - w.tokens.start],
                tokens: w.slice(&tokens).iter().map(|t| t.text.as_str()).collect(),
                members: w.members.iter().map(|m| m.entity_id.as_str()).collect(),
            };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
    }
    Ok(out)
}
