//! Service configuration file.
//!
//! ```toml
//! corpus = "corpus.jsonl"
//! index = "idx"             # optional; built from the corpus when absent
//! scaler = "scaler.json"    # optional; T = 1 when absent
//! language = "en"
//! url_template = "https://en.wikipedia.org/wiki/{title}"
//!
//! [retrieval]
//! mode = "dense_ans"
//! k = 20
//!
//! [backends.nli]
//! kind = "stub"
//! stub_seed = 1
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use factsearch_core::gateway::config::{BackendsConfig, ConfigError as BackendConfigError};
use factsearch_core::lexical::Bm25Params;
use factsearch_core::retrieval::{Mode, RetrievalConfig, DEFAULT_ANS_K, DEFAULT_NLI_K2};
use serde::Deserialize;

pub const DEFAULT_K: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid service config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Backends(#[from] BackendConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrievalDefaults {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_ans_k")]
    pub ans_k: usize,
    #[serde(default = "default_nli_k2")]
    pub nli_k2: usize,
    #[serde(default)]
    pub bm25: Bm25Params,
}

fn default_k() -> usize {
    DEFAULT_K
}

fn default_ans_k() -> usize {
    DEFAULT_ANS_K
}

fn default_nli_k2() -> usize {
    DEFAULT_NLI_K2
}

impl Default for RetrievalDefaults {
    fn default() -> Self {
        RetrievalDefaults {
            mode: Mode::default(),
            k: DEFAULT_K,
            ans_k: DEFAULT_ANS_K,
            nli_k2: DEFAULT_NLI_K2,
            bm25: Bm25Params::default(),
        }
    }
}

impl RetrievalDefaults {
    /// Retrieval settings for one request.
    pub fn request(&self, mode: Option<Mode>, k: Option<usize>) -> RetrievalConfig {
        RetrievalConfig {
            mode: mode.unwrap_or(self.mode),
            k: k.unwrap_or(self.k),
            ans_k: self.ans_k,
            nli_k2: self.nli_k2,
            bm25: self.bm25,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub corpus: PathBuf,
    #[serde(default)]
    pub index: Option<PathBuf>,
    #[serde(default)]
    pub scaler: Option<PathBuf>,
    #[serde(default = "default_language")]
    pub language: String,
    /// `{page_id}` and `{title}` are substituted; spaces in titles become `_`.
    #[serde(default)]
    pub url_template: Option<String>,
    #[serde(default)]
    pub retrieval: RetrievalDefaults,
    #[serde(default)]
    pub backends: BackendsConfig,
}

fn default_language() -> String {
    "en".into()
}

impl ServiceConfig {
    pub fn new(corpus: impl Into<PathBuf>, backends: BackendsConfig) -> Self {
        ServiceConfig {
            corpus: corpus.into(),
            index: None,
            scaler: None,
            language: default_language(),
            url_template: None,
            retrieval: RetrievalDefaults::default(),
            backends,
        }
    }

    pub fn from_toml(src: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ServiceConfig = toml::from_str(src)?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.corpus);
        cfg.index.as_mut().map(resolve);
        cfg.scaler.as_mut().map(resolve);
        Ok(cfg)
    }

    /// Loads the file and applies `FACTSEARCH_<ROLE>_ENDPOINT` overrides.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml(&src, path.parent().unwrap_or(Path::new(".")))?;
        cfg.backends.apply_env();
        Ok(cfg)
    }
}

/// Fills a URL template for one page.
pub fn page_url(template: &str, page_id: &str, title: &str) -> String {
    template
        .replace("{page_id}", page_id)
        .replace("{title}", &title.replace(' ', "_"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let src = r#"
            corpus = "data/corpus.jsonl"
            index = "/abs/idx"
            language = "cs"
            url_template = "https://cs.wikipedia.org/wiki/{title}"

            [retrieval]
            mode = "dense_nli"
            k = 10

            [backends.nli]
            kind = "stub"
        "#;
        let cfg = ServiceConfig::from_toml(src, Path::new("/etc/fs")).unwrap();
        assert_eq!(cfg.corpus, Path::new("/etc/fs/data/corpus.jsonl"));
        assert_eq!(cfg.index.as_deref(), Some(Path::new("/abs/idx")));
        assert_eq!(cfg.retrieval.mode, Mode::DenseNli);
        assert_eq!((cfg.retrieval.ans_k, cfg.retrieval.nli_k2), (15, 3));
        assert!(cfg.backends.nli.is_some() && cfg.backends.ner.is_none());
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(ServiceConfig::from_toml("corpus = 'c'\ncorpra = 1", Path::new(".")).is_err());
    }

    #[test]
    fn url_template() {
        assert_eq!(
            page_url("https://x/wiki/{title}?id={page_id}", "12", "USS Indianapolis"),
            "https://x/wiki/USS_Indianapolis?id=12"
        );
    }
}
