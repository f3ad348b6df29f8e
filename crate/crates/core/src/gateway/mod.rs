//! Uniform access to the five neural roles of the pipeline.
//!
//! Every role is a small trait. A [`Gateway`] holds one implementation per
//! role and enforces the contract common to all of them (preconditions,
//! entity span validity and deduplication, well-formed rankings), so
//! backends only have to produce raw outputs.
//!
//! Two families of backends ship with the crate: deterministic stubs
//! ([`stub`]) for desk-scale runs and tests, and JSON-over-HTTP clients
//! ([`remote`]) for real model servers.

pub mod config;
pub mod remote;
pub mod stub;

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::lexical::{RankedEvidence, Stage};
use crate::Label;

pub use config::{BackendConfig, BackendKind, BackendsConfig, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Ner,
    Qg,
    Cg,
    Dense,
    Nli,
}

impl Role {
    pub const ALL: [Role; 5] = [Role::Ner, Role::Qg, Role::Cg, Role::Dense, Role::Nli];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Ner => "ner",
            Role::Qg => "qg",
            Role::Cg => "cg",
            Role::Dense => "dense",
            Role::Nli => "nli",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum GatewayError {
    /// The backend could not be reached or did not answer in time.
    #[error("{role} backend unreachable: {message}")]
    Transport { role: Role, message: String },
    /// The backend answered, but with an error status or a malformed body.
    #[error("{role} backend failed: {message}")]
    Backend { role: Role, message: String },
    #[error("{role} precondition violated: {message}")]
    Precondition { role: Role, message: String },
    #[error("dense index unavailable: {0}")]
    UnknownCorpus(String),
}

impl GatewayError {
    pub fn role(&self) -> Role {
        match self {
            GatewayError::Transport { role, .. }
            | GatewayError::Backend { role, .. }
            | GatewayError::Precondition { role, .. } => *role,
            GatewayError::UnknownCorpus(_) => Role::Dense,
        }
    }

    fn precondition(role: Role, message: impl Into<String>) -> Self {
        GatewayError::Precondition {
            role,
            message: message.into(),
        }
    }

    fn backend(role: Role, message: impl Into<String>) -> Self {
        GatewayError::Backend {
            role,
            message: message.into(),
        }
    }
}

/// A named entity; `span` holds character offsets into the source text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Entity {
    pub text: String,
    #[serde(rename = "type")]
    pub entity_type: String,
    pub span: (usize, usize),
}

impl Entity {
    /// Identity used when comparing entities across paragraphs.
    pub fn key(&self) -> (&str, &str) {
        (&self.text, &self.entity_type)
    }
}

/// Raw classifier scores ordered (SUPPORTS, REFUTES, NEI).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NliLogits(pub [f64; 3]);

impl NliLogits {
    pub fn get(&self, label: Label) -> f64 {
        self.0[label.index()]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Index of the largest logit, lowest index on ties.
    pub fn argmax(&self) -> Label {
        Label::from_index(argmax(&self.0)).expect("three classes")
    }
}

pub(crate) fn argmax(xs: &[f64; 3]) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if xs[i] > xs[best] {
            best = i;
        }
    }
    best
}

pub trait NerModel: Send + Sync {
    fn ner(&self, text: &str) -> Result<Vec<Entity>, GatewayError>;
    fn reachable(&self) -> bool {
        true
    }
}

pub trait QuestionModel: Send + Sync {
    fn generate_question(&self, answer: &Entity, context: &str) -> Result<String, GatewayError>;
    fn reachable(&self) -> bool {
        true
    }
}

pub trait ClaimModel: Send + Sync {
    fn generate_claim(&self, answer: &str, question: &str) -> Result<String, GatewayError>;
    fn reachable(&self) -> bool {
        true
    }
}

pub trait DenseModel: Send + Sync {
    /// `(para_id, score)` pairs, best first.
    fn dense_search(&self, claim: &str, k: usize) -> Result<Vec<(String, f64)>, GatewayError>;
    fn reachable(&self) -> bool {
        true
    }
}

pub trait NliModel: Send + Sync {
    fn nli(&self, claim: &str, evidence: &str) -> Result<NliLogits, GatewayError>;
    fn reachable(&self) -> bool {
        true
    }
}

/// One backend per role. Cheap to clone; safe to share across threads.
#[derive(Clone)]
pub struct Gateway {
    ner: Arc<dyn NerModel>,
    qg: Arc<dyn QuestionModel>,
    cg: Arc<dyn ClaimModel>,
    dense: Arc<dyn DenseModel>,
    nli: Arc<dyn NliModel>,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway").finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn new(
        ner: Arc<dyn NerModel>,
        qg: Arc<dyn QuestionModel>,
        cg: Arc<dyn ClaimModel>,
        dense: Arc<dyn DenseModel>,
        nli: Arc<dyn NliModel>,
    ) -> Self {
        Gateway { ner, qg, cg, dense, nli }
    }

    pub fn with_ner(mut self, ner: Arc<dyn NerModel>) -> Self {
        self.ner = ner;
        self
    }

    pub fn with_qg(mut self, qg: Arc<dyn QuestionModel>) -> Self {
        self.qg = qg;
        self
    }

    pub fn with_cg(mut self, cg: Arc<dyn ClaimModel>) -> Self {
        self.cg = cg;
        self
    }

    pub fn with_dense(mut self, dense: Arc<dyn DenseModel>) -> Self {
        self.dense = dense;
        self
    }

    pub fn with_nli(mut self, nli: Arc<dyn NliModel>) -> Self {
        self.nli = nli;
        self
    }

    /// Entities with slice-valid spans, deduplicated by `(text, type)`.
    pub fn ner(&self, text: &str) -> Result<Vec<Entity>, GatewayError> {
        if text.is_empty() {
            return Ok(Vec::new());
        }
        let raw = self.ner.ner(text)?;
        let chars: Vec<char> = text.chars().collect();
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(raw.len());
        for e in raw {
            let (start, end) = e.span;
            if start >= end || end > chars.len() {
                return Err(GatewayError::backend(
                    Role::Ner,
                    format!("span {start}..{end} out of range for text of {} chars", chars.len()),
                ));
            }
            let sliced: String = chars[start..end].iter().collect();
            if sliced != e.text {
                return Err(GatewayError::backend(
                    Role::Ner,
                    format!("entity {:?} does not match source slice {sliced:?}", e.text),
                ));
            }
            if seen.insert((e.text.clone(), e.entity_type.clone())) {
                out.push(e);
            }
        }
        Ok(out)
    }

    pub fn generate_question(&self, answer: &Entity, context: &str) -> Result<String, GatewayError> {
        if context.is_empty() {
            return Err(GatewayError::precondition(Role::Qg, "empty context"));
        }
        if answer.text.is_empty() || !context.contains(answer.text.as_str()) {
            return Err(GatewayError::precondition(
                Role::Qg,
                format!("answer {:?} does not occur in context", answer.text),
            ));
        }
        let q = self.qg.generate_question(answer, context)?;
        if q.trim().is_empty() {
            return Err(GatewayError::backend(Role::Qg, "empty question"));
        }
        Ok(q)
    }

    pub fn generate_claim(&self, answer: &str, question: &str) -> Result<String, GatewayError> {
        if answer.is_empty() {
            return Err(GatewayError::precondition(Role::Cg, "empty answer"));
        }
        if question.is_empty() {
            return Err(GatewayError::precondition(Role::Cg, "empty question"));
        }
        let c = self.cg.generate_claim(answer, question)?;
        if c.trim().is_empty() {
            return Err(GatewayError::backend(Role::Cg, "empty claim"));
        }
        Ok(c)
    }

    /// At most `k` dense results, ranked 1.. with non-increasing scores.
    pub fn dense_search(&self, claim: &str, k: usize) -> Result<Vec<RankedEvidence>, GatewayError> {
        if k == 0 {
            return Err(GatewayError::precondition(Role::Dense, "k must be at least 1"));
        }
        let mut raw = self.dense.dense_search(claim, k)?;
        if raw.iter().any(|(_, s)| !s.is_finite()) {
            return Err(GatewayError::backend(Role::Dense, "non-finite score"));
        }
        // stable: equal scores keep the backend's order
        raw.sort_by(|a, b| b.1.total_cmp(&a.1));
        raw.truncate(k);
        Ok(raw
            .into_iter()
            .enumerate()
            .map(|(i, (para_id, score))| RankedEvidence {
                para_id,
                score,
                rank: i + 1,
                stage: Stage::Dense,
            })
            .collect())
    }

    pub fn nli(&self, claim: &str, evidence: &str) -> Result<NliLogits, GatewayError> {
        if claim.is_empty() {
            return Err(GatewayError::precondition(Role::Nli, "empty claim"));
        }
        if evidence.is_empty() {
            return Err(GatewayError::precondition(Role::Nli, "empty evidence"));
        }
        let logits = self.nli.nli(claim, evidence)?;
        if !logits.is_finite() {
            return Err(GatewayError::backend(Role::Nli, "non-finite logits"));
        }
        Ok(logits)
    }

    pub fn reachable(&self, role: Role) -> bool {
        match role {
            Role::Ner => self.ner.reachable(),
            Role::Qg => self.qg.reachable(),
            Role::Cg => self.cg.reachable(),
            Role::Dense => self.dense.reachable(),
            Role::Nli => self.nli.reachable(),
        }
    }
}
