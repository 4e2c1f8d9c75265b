//! The `negare` command line: detection, evaluation, ensembling, corpus
//! statistics, fold assignment, error extraction and token windows.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 internal
//! invariant violation.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use negare_core::FilterConfig;

pub mod commands;
mod config;

pub use config::{FileConfig, Format, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "negare", version, about = "Rule-based negation detection for clinical text")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Corpus file, one JSON record per line [default: bundled synthetic corpus]
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Trigger lexicon, `pattern<TAB>kind[<TAB>max_scope]` [default: bundled]
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    /// Abbreviation list for the sentence splitter [default: bundled]
    #[arg(long, global = true)]
    pub abbreviations: Option<PathBuf>,
    /// TOML file with defaults; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Records with more tokens than this are dropped [default: 512]
    #[arg(long, global = true)]
    pub max_tokens: Option<usize>,
    /// Use the corpus as is, without the exclusion pipeline
    #[arg(long, global = true)]
    pub no_filter: bool,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Relabel scored predictions at this threshold [default: as stored]
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Process records on one thread
    #[arg(long, global = true, conflicts_with = "jobs")]
    pub serial: bool,
    /// Worker threads for per-record work [default: all cores]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label every entity with the rule-based detector
    Detect {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score prediction files against the corpus
    Eval {
        #[arg(long = "pred", required = true)]
        preds: Vec<PathBuf>,
        /// Fold file from `negare folds`; adds per-fold results
        #[arg(long)]
        folds: Option<PathBuf>,
        /// Directory for the metrics, error case and partition files
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Majority vote over an odd number (at least 3) of prediction files
    Ensemble {
        #[arg(long = "pred", required = true)]
        preds: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-category text statistics of the filtered corpus
    Stats {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the exclusion report; `--out` writes the filtered corpus
    Filter {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assign records to cross-validation folds
    Folds {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Misclassified entities, or with `--tags` the category table
    Errors {
        #[arg(long = "pred", required = true)]
        preds: Vec<PathBuf>,
        /// `record_id<TAB>entity_id<TAB>method<TAB>category<TAB>annotator`
        #[arg(long)]
        tags: Option<PathBuf>,
        /// Only use this annotator's tags
        #[arg(long, requires = "tags")]
        annotator: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Token windows around every entity, one JSON line each
    Windows {
        /// Centred window size [default: 32]
        #[arg(long, conflicts_with_all = ["left", "right"])]
        window: Option<usize>,
        #[arg(long, requires = "right")]
        left: Option<usize>,
        #[arg(long, requires = "left")]
        right: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input, configuration or data.
    Invalid(anyhow::Error),
    /// A check on our own output failed.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(e) => write!(f, "{e:#}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Invalid(e)
    }
}

/// Merge defaults, the config file and flags, in that order of precedence.
pub fn resolve(global: &GlobalArgs, command: &Command) -> Result<RunConfig, CliError> {
    let file = match &global.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let mut cfg = RunConfig::default();
    let filter_on = !global.no_filter && file.filter.unwrap_or(true);
    cfg.filter = filter_on.then(|| FilterConfig {
        max_tokens_per_record: global.max_tokens.or(file.max_tokens).unwrap_or(512),
        ..FilterConfig::default()
    });
    cfg.corpus = global.corpus.clone().or(file.corpus);
    cfg.lexicon = global.lexicon.clone().or(file.lexicon);
    cfg.abbreviations = global.abbreviations.clone().or(file.abbreviations);
    cfg.format = global.format.or(file.format).unwrap_or_default();
    cfg.threshold = global.threshold.or(file.threshold);
    cfg.jobs = global.jobs.or(file.jobs);
    cfg.parallel = !(global.serial || file.serial.unwrap_or(false) && global.jobs.is_none());
    cfg.k = file.k.unwrap_or(cfg.k);
    cfg.seed = file.seed.unwrap_or(cfg.seed);
    cfg.window = file.window.unwrap_or(cfg.window);
    match command {
        Command::Folds { k, seed, .. } => {
            cfg.k = k.unwrap_or(cfg.k);
            cfg.seed = seed.unwrap_or(cfg.seed);
        }
        Command::Windows { window: Some(w), .. } => cfg.window = *w,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(p) => {
            fs::write(p, content).map_err(|e| anyhow::anyhow!("writing {}: {e}", p.display()))?;
            info!("wrote {}", p.display());
        }
        None => stdout(content)?,
    }
    Ok(())
}

/// Write to stdout; a closed pipe (`negare ... | head`) is not an error.
fn stdout(content: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(content.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(anyhow::anyhow!("writing stdout: {e}").into()),
        _ => Ok(()),
    }
}

fn dispatch(cfg: &RunConfig, command: &Command) -> Result<(), CliError> {
    match command {
        Command::Detect { out } => emit(out.as_deref(), &commands::detect(cfg)?),
        Command::Eval { preds, folds, out } => {
            let result = commands::eval(cfg, preds, folds.as_deref())?;
            match out {
                Some(dir) => {
                    fs::create_dir_all(dir).map_err(|e| anyhow::anyhow!("creating {}: {e}", dir.display()))?;
                    for (name, content) in &result.files {
                        emit(Some(&dir.join(name)), content)?;
                    }
                }
                None => {
                    for (name, content) in &result.files {
                        if !name.starts_with("errors_") {
                            stdout(content)?;
                        }
                    }
                }
            }
            Ok(())
        }
        Command::Ensemble { preds, out } => emit(out.as_deref(), &commands::ensemble(cfg, preds)?),
        Command::Stats { out } => emit(out.as_deref(), &commands::stats(cfg)?),
        Command::Filter { out } => {
            let (report, corpus) = commands::filter(cfg)?;
            stdout(&report)?;
            match out {
                Some(p) => emit(Some(p), &corpus),
                None => Ok(()),
            }
        }
        Command::Folds { out, .. } => emit(out.as_deref(), &commands::folds(cfg)?),
        Command::Errors {
            preds,
            tags,
            annotator,
            out,
        } => emit(
            out.as_deref(),
            &commands::errors(cfg, preds, tags.as_deref(), annotator.as_deref())?,
        ),
        Command::Windows { left, right, out, .. } => {
            let sides = left.zip(*right);
            emit(out.as_deref(), &commands::windows(cfg, sides)?)
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(&cli.global, &cli.command)?;
    match cfg.jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(&cfg, &cli.command))
        }
        None => dispatch(&cfg, &cli.command),
    }
}
