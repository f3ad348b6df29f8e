//! The loaded verification pipeline: corpus, index, model gateway and
//! temperature scaler, plus the request-independent verify logic.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use factsearch_core::calibration::{CalibrationError, NliVerdict, TemperatureScaler};
use factsearch_core::corpus::{Corpus, CorpusError, Paragraph};
use factsearch_core::gateway::{Gateway, GatewayError, Role};
use factsearch_core::highlight::{highlight_default, HighlightSpan};
use factsearch_core::lexical::{build_index, load_index, IndexStoreError, InvertedIndex};
use factsearch_core::retrieval::{retrieve, Mode, RetrievalError};
use serde::{Deserialize, Serialize};

use crate::config::{page_url, RetrievalDefaults, ServiceConfig};

#[derive(Debug, thiserror::Error)]
pub enum InitError {
    #[error("loading corpus {path}: {source}")]
    Corpus { path: PathBuf, source: CorpusError },
    #[error("loading index: {0}")]
    Index(#[from] IndexStoreError),
    #[error("index and corpus disagree: {0}")]
    IndexMismatch(String),
    #[error("loading scaler: {0}")]
    Scaler(#[from] CalibrationError),
    #[error(transparent)]
    Backends(#[from] factsearch_core::gateway::ConfigError),
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("claim is empty")]
    EmptyClaim,
    #[error("{0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Backend(#[from] GatewayError),
}

impl VerifyError {
    pub fn role(&self) -> Option<Role> {
        match self {
            VerifyError::Backend(e) => Some(e.role()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyResult {
    pub para_id: String,
    pub page_id: String,
    pub page_title: String,
    pub text: String,
    pub retrieval_score: f64,
    pub verdict: NliVerdict,
    pub highlights: Vec<HighlightSpan>,
    pub page_url: Option<String>,
    pub is_lead_section: bool,
}

/// Per-evidence results only; there is deliberately no claim-level label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyResponse {
    pub claim: String,
    pub mode: Mode,
    pub k: usize,
    pub results: Vec<VerifyResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentParagraph {
    pub para_id: String,
    pub ordinal: usize,
    pub text: String,
    pub is_lead_section: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub page_id: String,
    pub title: String,
    pub page_url: Option<String>,
    pub paragraphs: Vec<DocumentParagraph>,
}

pub struct Pipeline {
    pub corpus: Arc<Corpus>,
    pub index: Arc<InvertedIndex>,
    pub gateway: Gateway,
    pub scaler: TemperatureScaler,
    pub url_template: Option<String>,
    pub retrieval: RetrievalDefaults,
}

impl Pipeline {
    /// Loads every artifact named by the config. The index is built from the
    /// corpus when no index path is given.
    pub fn load(cfg: &ServiceConfig) -> Result<Self, InitError> {
        let corpus = Corpus::read_jsonl(&cfg.corpus, "service", cfg.language.clone()).map_err(|source| {
            InitError::Corpus {
                path: cfg.corpus.clone(),
                source,
            }
        })?;
        let index = match &cfg.index {
            Some(path) => load_index(path)?,
            None => build_index(&corpus),
        };
        if index.doc_count() != corpus.len() {
            return Err(InitError::IndexMismatch(format!(
                "{} indexed documents, {} paragraphs",
                index.doc_count(),
                corpus.len()
            )));
        }
        if let Some(missing) = corpus.paragraphs().iter().find(|p| !index.contains(&p.para_id)) {
            return Err(InitError::IndexMismatch(format!("{} is not indexed", missing.para_id)));
        }
        let scaler = match &cfg.scaler {
            Some(path) => TemperatureScaler::load(path)?,
            None => {
                tracing::warn!("no scaler configured, using T = 1");
                TemperatureScaler::new(1.0)?
            }
        };
        let index = Arc::new(index);
        let gateway = cfg.backends.build_gateway(Some(index.clone()))?;
        Ok(Pipeline {
            corpus: Arc::new(corpus),
            index,
            gateway,
            scaler,
            url_template: cfg.url_template.clone(),
            retrieval: cfg.retrieval,
        })
    }

    fn url_for(&self, page_id: &str, title: &str) -> Option<String> {
        self.url_template.as_deref().map(|t| page_url(t, page_id, title))
    }

    pub fn verify(&self, claim: &str, mode: Option<Mode>, k: Option<usize>) -> Result<VerifyResponse, VerifyError> {
        if claim.trim().is_empty() {
            return Err(VerifyError::EmptyClaim);
        }
        let cfg = self.retrieval.request(mode, k);
        let ranked = retrieve(claim, &cfg, &self.index, &self.corpus, &self.gateway).map_err(|e| match e {
            RetrievalError::Config { .. } => VerifyError::InvalidRequest(e.to_string()),
            RetrievalError::Gateway { source, .. } => VerifyError::Backend(source),
        })?;
        let mut results = Vec::with_capacity(ranked.len());
        for r in ranked {
            let Some(p) = self.corpus.get(&r.para_id) else {
                tracing::warn!(para_id = %r.para_id, "retrieved paragraph not in corpus");
                continue;
            };
            results.push(self.result_for(claim, p, r.score)?);
        }
        Ok(VerifyResponse {
            claim: claim.to_string(),
            mode: cfg.mode,
            k: cfg.k,
            results: group_by_page(results),
        })
    }

    fn result_for(&self, claim: &str, p: &Paragraph, score: f64) -> Result<VerifyResult, VerifyError> {
        let logits = self.gateway.nli(claim, &p.text)?;
        let verdict = self
            .scaler
            .apply(logits)
            .map_err(|e| VerifyError::Backend(GatewayError::Backend {
                role: Role::Nli,
                message: e.to_string(),
            }))?;
        Ok(VerifyResult {
            para_id: p.para_id.clone(),
            page_id: p.page_id.clone(),
            page_title: p.page_title.clone(),
            text: p.text.clone(),
            retrieval_score: score,
            verdict,
            highlights: highlight_default(claim, &p.text),
            page_url: self.url_for(&p.page_id, &p.page_title),
            is_lead_section: p.is_lead_section(),
        })
    }

    pub fn document(&self, page_id: &str) -> Option<Document> {
        let paragraphs = self.corpus.page(page_id)?;
        let title = paragraphs.first().map(|p| p.page_title.clone()).unwrap_or_default();
        Some(Document {
            page_id: page_id.to_string(),
            page_url: self.url_for(page_id, &title),
            title,
            paragraphs: paragraphs
                .into_iter()
                .map(|p| DocumentParagraph {
                    para_id: p.para_id.clone(),
                    ordinal: p.ordinal,
                    text: p.text.clone(),
                    is_lead_section: p.is_lead_section(),
                })
                .collect(),
        })
    }
}

/// Orders results by decreasing retrieval score, then pulls every paragraph
/// of a page up to the position of that page's best paragraph.
pub fn group_by_page(mut results: Vec<VerifyResult>) -> Vec<VerifyResult> {
    results.sort_by(|a, b| b.retrieval_score.total_cmp(&a.retrieval_score));
    let mut slot: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<Vec<VerifyResult>> = Vec::new();
    for r in results {
        let next = groups.len();
        let i = *slot.entry(r.page_id.clone()).or_insert(next);
        if i == groups.len() {
            groups.push(Vec::new());
        }
        groups[i].push(r);
    }
    groups.into_iter().flatten().collect()
}
