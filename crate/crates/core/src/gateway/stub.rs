//! Deterministic stand-ins for the neural roles.
//!
//! - NER: maximal runs of space-separated capitalized words are `PER`,
//!   maximal runs of space-separated all-digit words are `NUM`.
//! - QG: `STUB-Q[<answer>]: which? <context>`.
//! - CG: the question without its trailing `?` (and without a leading
//!   wh-word plus auxiliary) as `STUB-C: <body> = <answer>.`
//! - Dense: BM-25 with `k1 = 0.9, b = 0.9` over the active index.
//! - NLI: with `o = |shared distinct tokens| − 2`, logits `(o, −o, 0)`.

use std::collections::HashSet;
use std::sync::Arc;

use super::{
    ClaimModel, DenseModel, Entity, Gateway, GatewayError, NerModel, NliLogits, NliModel, QuestionModel,
};
use crate::lexical::{search, tokenize, word_spans, Bm25Params, InvertedIndex};

pub const PERSON: &str = "PER";
pub const NUMBER: &str = "NUM";

const WH_WORDS: [&str; 7] = ["who", "what", "when", "where", "which", "why", "how"];

#[derive(Debug, Clone)]
pub struct StubBackend {
    seed: u64,
    index: Option<Arc<InvertedIndex>>,
}

impl StubBackend {
    pub fn new(seed: u64) -> Self {
        StubBackend { seed, index: None }
    }

    pub fn with_index(seed: u64, index: Arc<InvertedIndex>) -> Self {
        StubBackend {
            seed,
            index: Some(index),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A gateway whose every role is served by this stub.
    pub fn into_gateway(self, index: Option<Arc<InvertedIndex>>) -> Gateway {
        let stub = Arc::new(StubBackend {
            seed: self.seed,
            index: index.or(self.index),
        });
        Gateway::new(stub.clone(), stub.clone(), stub.clone(), stub.clone(), stub)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum WordClass {
    Capitalized,
    Digits,
}

fn classify(word: &str) -> Option<WordClass> {
    if word.chars().all(|c| c.is_ascii_digit()) {
        Some(WordClass::Digits)
    } else if word.chars().next().is_some_and(char::is_uppercase) {
        Some(WordClass::Capitalized)
    } else {
        None
    }
}

/// Applies the stub NER rule.
pub fn stub_entities(text: &str) -> Vec<Entity> {
    let chars: Vec<char> = text.chars().collect();
    let spans = word_spans(text);
    let mut out: Vec<Entity> = Vec::new();
    let mut run: Option<(WordClass, usize, usize)> = None;

    let flush = |run: Option<(WordClass, usize, usize)>, out: &mut Vec<Entity>| {
        if let Some((class, start, end)) = run {
            let entity_type = match class {
                WordClass::Capitalized => PERSON,
                WordClass::Digits => NUMBER,
            };
            let text: String = chars[start..end].iter().collect();
            if !out.iter().any(|e| e.text == text && e.entity_type == entity_type) {
                out.push(Entity {
                    text,
                    entity_type: entity_type.to_string(),
                    span: (start, end),
                });
            }
        }
    };

    for w in spans {
        let class = classify(w.word);
        run = match (run, class) {
            (Some((rc, start, end)), Some(c))
                if rc == c && chars[end..w.start].iter().all(|&ch| ch == ' ') =>
            {
                Some((rc, start, w.end))
            }
            (prev, Some(c)) => {
                flush(prev, &mut out);
                Some((c, w.start, w.end))
            }
            (prev, None) => {
                flush(prev, &mut out);
                None
            }
        };
    }
    flush(run, &mut out);
    out
}

pub fn stub_question(answer: &str, context: &str) -> String {
    format!("STUB-Q[{answer}]: which? {context}")
}

pub fn stub_claim(answer: &str, question: &str) -> String {
    let body = question.trim().trim_end_matches('?').trim_end();
    let mut words = body.splitn(3, ' ');
    let first = words.next().unwrap_or_default();
    let body = if WH_WORDS.contains(&first.to_lowercase().as_str()) {
        match (words.next(), words.next()) {
            (Some(_aux), Some(rest)) => rest,
            _ => body,
        }
    } else {
        body
    };
    format!("STUB-C: {body} = {answer}.")
}

pub fn stub_nli(claim: &str, evidence: &str) -> NliLogits {
    let c: HashSet<String> = tokenize(claim).into_iter().collect();
    let e: HashSet<String> = tokenize(evidence).into_iter().collect();
    let overlap = c.intersection(&e).count() as f64 - 2.0;
    NliLogits([overlap, -overlap, 0.0])
}

impl NerModel for StubBackend {
    fn ner(&self, text: &str) -> Result<Vec<Entity>, GatewayError> {
        Ok(stub_entities(text))
    }
}

impl QuestionModel for StubBackend {
    fn generate_question(&self, answer: &Entity, context: &str) -> Result<String, GatewayError> {
        Ok(stub_question(&answer.text, context))
    }
}

impl ClaimModel for StubBackend {
    fn generate_claim(&self, answer: &str, question: &str) -> Result<String, GatewayError> {
        Ok(stub_claim(answer, question))
    }
}

impl DenseModel for StubBackend {
    fn dense_search(&self, claim: &str, k: usize) -> Result<Vec<(String, f64)>, GatewayError> {
        let index = self
            .index
            .as_ref()
            .ok_or_else(|| GatewayError::UnknownCorpus("stub dense backend has no index".into()))?;
        Ok(search(index, claim, k, Bm25Params::WIKI)
            .into_iter()
            .map(|r| (r.para_id, r.score))
            .collect())
    }

    fn reachable(&self) -> bool {
        self.index.is_some()
    }
}

impl NliModel for StubBackend {
    fn nli(&self, claim: &str, evidence: &str) -> Result<NliLogits, GatewayError> {
        Ok(stub_nli(claim, evidence))
    }
}
