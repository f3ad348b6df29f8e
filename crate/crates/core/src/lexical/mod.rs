//! Lexical retrieval: language-agnostic tokenizer and a BM-25 inverted index.

mod index;
mod store;
mod tokenize;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use index::{build_index, search, InvertedIndex, Posting};
pub use store::{load_index, save_index, IndexStoreError, INDEX_FILE, INDEX_FORMAT, INDEX_VERSION};
pub use tokenize::{tokenize, word_spans, WordSpan};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ParamError {
    #[error("k1 must be finite and non-negative, got {0}")]
    K1(f64),
    #[error("b must lie in [0, 1], got {0}")]
    B(f64),
}

/// BM-25 free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct Bm25Params {
    k1: f64,
    b: f64,
}

#[derive(Deserialize)]
struct RawParams {
    k1: f64,
    b: f64,
}

impl TryFrom<RawParams> for Bm25Params {
    type Error = ParamError;

    fn try_from(r: RawParams) -> Result<Self, Self::Error> {
        Bm25Params::new(r.k1, r.b)
    }
}

impl Bm25Params {
    /// Setting used for the English FEVER abstracts corpus.
    pub const ENFEVER: Bm25Params = Bm25Params { k1: 0.6, b: 0.5 };
    /// Setting used for every other corpus.
    pub const WIKI: Bm25Params = Bm25Params { k1: 0.9, b: 0.9 };

    pub fn new(k1: f64, b: f64) -> Result<Self, ParamError> {
        if !(k1.is_finite() && k1 >= 0.0) {
            return Err(ParamError::K1(k1));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(ParamError::B(b));
        }
        Ok(Bm25Params { k1, b })
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params::WIKI
    }
}

/// Which retrieval step produced a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Lexical,
    Dense,
    AnsFiltered,
    NliReranked,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Lexical => "lexical",
            Stage::Dense => "dense",
            Stage::AnsFiltered => "ans_filtered",
            Stage::NliReranked => "nli_reranked",
        })
    }
}

/// One entry of a ranked result list. Ranks start at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEvidence {
    pub para_id: String,
    pub score: f64,
    pub rank: usize,
    pub stage: Stage,
}

/// Re-numbers ranks 1..m in list order.
pub fn renumber(results: &mut [RankedEvidence]) {
    for (i, r) in results.iter_mut().enumerate() {
        r.rank = i + 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_are_validated() {
        assert!(Bm25Params::new(0.9, 0.9).is_ok());
        assert_eq!(Bm25Params::new(-0.1, 0.5), Err(ParamError::K1(-0.1)));
        assert_eq!(Bm25Params::new(1.0, 1.5), Err(ParamError::B(1.5)));
        assert!(serde_json::from_str::<Bm25Params>(r#"{"k1":1.0,"b":2.0}"#).is_err());
    }

    #[test]
    fn stage_serializes_snake_case() {
        assert_eq!(serde_json::to_string(&Stage::AnsFiltered).unwrap(), "\"ans_filtered\"");
    }
}
