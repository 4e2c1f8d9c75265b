use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::ValueEnum;
use negare_core::FilterConfig;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Jsonl,
}

/// Defaults read from `--config`. Every key is optional; relative paths are
/// resolved against the config file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub max_tokens: Option<usize>,
    pub filter: Option<bool>,
    pub format: Option<Format>,
    pub threshold: Option<f64>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub window: Option<usize>,
    pub jobs: Option<usize>,
    pub serial: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: FileConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.corpus, &mut cfg.lexicon, &mut cfg.abbreviations].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Fully resolved settings for one invocation. `None` paths select the
/// bundled assets.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub filter: Option<FilterConfig>,
    pub format: Format,
    /// Relabel scored predictions at this threshold when reading them.
    pub threshold: Option<f64>,
    pub k: usize,
    pub seed: u64,
    pub window: usize,
    pub parallel: bool,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            lexicon: None,
            abbreviations: None,
            filter: Some(FilterConfig::default()),
            format: Format::Table,
            threshold: None,
            k: 10,
            seed: 42,
            window: 32,
            parallel: true,
            jobs: None,
        }
    }
}

impl RunConfig {
    /// Check that every input path exists before any work starts.
    pub fn validate(&self) -> anyhow::Result<()> {
        for (what, p) in [("corpus", &self.corpus), ("lexicon", &self.lexicon), ("abbreviations", &self.abbreviations)] {
            if let Some(p) = p {
                if !p.is_file() {
                    bail!("{what} file not found: {}", p.display());
                }
            }
        }
        if let Some(t) = self.threshold {
            if !(0.0..=1.0).contains(&t) {
                bail!("threshold {t} outside [0, 1]");
            }
        }
        if self.jobs == Some(0) {
            bail!("--jobs must be at least 1");
        }
        Ok(())
    }
}

pub fn check_inputs<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> anyhow::Result<()> {
    for p in paths {
        if !p.is_file() {
            bail!("input file not found: {}", p.display());
        }
    }
    Ok(())
}
