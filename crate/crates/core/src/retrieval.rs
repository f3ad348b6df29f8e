//! Evidence retrieval modes: lexical, dense, dense filtered by the lexical
//! top list, and dense reranked by NLI logits.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::gateway::{Gateway, GatewayError};
use crate::lexical::{renumber, search, Bm25Params, InvertedIndex, RankedEvidence, Stage};
use crate::Label;

pub const DEFAULT_ANS_K: usize = 15;
pub const DEFAULT_NLI_K2: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Lexical,
    Dense,
    DenseAns,
    DenseNli,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Lexical, Mode::Dense, Mode::DenseAns, Mode::DenseNli];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Lexical => "lexical",
            Mode::Dense => "dense",
            Mode::DenseAns => "dense_ans",
            Mode::DenseNli => "dense_nli",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown retrieval mode {s:?}"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("{field} must be at least 1")]
    Config { field: &'static str },
    #[error("{mode} retrieval failed: {source}")]
    Gateway {
        mode: Mode,
        #[source]
        source: GatewayError,
    },
}

impl RetrievalError {
    pub fn gateway_error(&self) -> Option<&GatewayError> {
        match self {
            RetrievalError::Gateway { source, .. } => Some(source),
            RetrievalError::Config { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub mode: Mode,
    pub k: usize,
    pub ans_k: usize,
    pub nli_k2: usize,
    pub bm25: Bm25Params,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            mode: Mode::Lexical,
            k: 20,
            ans_k: DEFAULT_ANS_K,
            nli_k2: DEFAULT_NLI_K2,
            bm25: Bm25Params::default(),
        }
    }
}

impl RetrievalConfig {
    pub fn new(mode: Mode, k: usize) -> Self {
        RetrievalConfig {
            mode,
            k,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        for (field, v) in [("k", self.k), ("ans_k", self.ans_k), ("nli_k2", self.nli_k2)] {
            if v == 0 {
                return Err(RetrievalError::Config { field });
            }
        }
        Ok(())
    }
}

/// Keeps the dense results whose ids occur in `lexical_topk`, in dense order.
pub fn ans_filter(dense: &[RankedEvidence], lexical_topk: &[RankedEvidence]) -> Vec<RankedEvidence> {
    let keep: HashSet<&str> = lexical_topk.iter().map(|r| r.para_id.as_str()).collect();
    let mut out: Vec<RankedEvidence> = dense
        .iter()
        .filter(|r| keep.contains(r.para_id.as_str()))
        .map(|r| RankedEvidence {
            stage: Stage::AnsFiltered,
            ..r.clone()
        })
        .collect();
    renumber(&mut out);
    out
}

/// Rescores by max(SUPPORTS, REFUTES) raw logit, stable with respect to the
/// input order, and keeps the best `k2`. Documents that cannot be scored are
/// dropped.
pub fn nli_rerank(
    claim: &str,
    dense: &[RankedEvidence],
    corpus: &Corpus,
    gw: &Gateway,
    k2: usize,
) -> Vec<RankedEvidence> {
    let scored: Vec<Option<f64>> = dense
        .par_iter()
        .map(|r| {
            let Some(p) = corpus.get(&r.para_id) else {
                tracing::warn!(para_id = %r.para_id, "reranked document not in corpus");
                return None;
            };
            match gw.nli(claim, &p.text) {
                Ok(z) => Some(z.get(Label::Supports).max(z.get(Label::Refutes))),
                Err(e) => {
                    tracing::warn!(para_id = %r.para_id, error = %e, "dropping document from rerank");
                    None
                }
            }
        })
        .collect();
    let mut out: Vec<RankedEvidence> = dense
        .iter()
        .zip(scored)
        .filter_map(|(r, s)| {
            s.map(|score| RankedEvidence {
                para_id: r.para_id.clone(),
                score,
                rank: r.rank,
                stage: Stage::NliReranked,
            })
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score));
    out.truncate(k2);
    renumber(&mut out);
    out
}

pub fn retrieve(
    claim: &str,
    cfg: &RetrievalConfig,
    index: &InvertedIndex,
    corpus: &Corpus,
    gw: &Gateway,
) -> Result<Vec<RankedEvidence>, RetrievalError> {
    cfg.validate()?;
    let wrap = |source| RetrievalError::Gateway { mode: cfg.mode, source };
    Ok(match cfg.mode {
        Mode::Lexical => search(index, claim, cfg.k, cfg.bm25),
        Mode::Dense => gw.dense_search(claim, cfg.k).map_err(wrap)?,
        Mode::DenseAns => {
            let dense = gw.dense_search(claim, cfg.k).map_err(wrap)?;
            ans_filter(&dense, &search(index, claim, cfg.ans_k, cfg.bm25))
        }
        Mode::DenseNli => {
            let dense = gw.dense_search(claim, cfg.k).map_err(wrap)?;
            nli_rerank(claim, &dense, corpus, gw, cfg.nli_k2)
        }
    })
}
