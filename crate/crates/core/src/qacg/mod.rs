//! Question-answering-driven claim generation (QACG) and dataset assembly.
//!
//! Claims are produced per source paragraph:
//!
//! - SUPPORTS: every named entity of the paragraph becomes an answer; a
//!   question is generated for it in the paragraph context and turned back
//!   into a declarative claim.
//! - REFUTES: the SUPPORTS question is paired with a different entity of the
//!   same type from the same paragraph.
//! - NEI: answers come from auxiliary paragraphs of the same page, restricted
//!   to entities that do not occur in the source paragraph.

mod assemble;
mod generate;

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::gateway::Entity;
use crate::jsonl::{self, JsonlError};
use crate::{Label, Split};

pub use assemble::{build_mix, build_sum, dedup_claims, dedup_dataset, stratify_balance};
pub use generate::{
    gen_nei, gen_refutes, gen_supports, generate_dataset, generate_for_paragraph, sample_source_paragraphs,
    GenerationConfig, DEFAULT_NEI_AUX,
};

#[derive(Debug, thiserror::Error)]
pub enum QacgError {
    #[error("corpus has {available} paragraphs, {requested} requested")]
    CorpusTooSmall { requested: usize, available: usize },
    #[error("split {split} has no {label} claims")]
    MissingLabel { split: Split, label: Label },
    #[error("need at least two datasets, got {0}")]
    TooFewDatasets(usize),
    #[error("dataset {name} has splits {found:?}, expected {expected:?}")]
    SplitMismatch {
        name: String,
        expected: Vec<Split>,
        found: Vec<Split>,
    },
    #[error("claim id {0} appears more than once")]
    DuplicateClaimId(String),
    #[error("claim {claim_id}: {message}")]
    InvalidClaim { claim_id: String, message: String },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

/// How a claim was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimTrace {
    pub answer_entity: Entity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substituted_entity: Option<Entity>,
    pub question: String,
    #[serde(default)]
    pub aux_para_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub claim_id: String,
    #[serde(rename = "claim")]
    pub text: String,
    pub label: Label,
    pub language: String,
    pub source_para_id: String,
    pub trace: ClaimTrace,
}

impl Claim {
    /// Checks the per-label trace invariants.
    pub fn validate(&self) -> Result<(), QacgError> {
        let bad = |message: &str| {
            Err(QacgError::InvalidClaim {
                claim_id: self.claim_id.clone(),
                message: message.to_string(),
            })
        };
        let t = &self.trace;
        match self.label {
            Label::Supports => {
                if t.substituted_entity.is_some() || !t.aux_para_ids.is_empty() {
                    return bad("SUPPORTS claims carry neither substitution nor auxiliary paragraphs");
                }
            }
            Label::Refutes => match &t.substituted_entity {
                None => return bad("REFUTES claim without substituted entity"),
                Some(s) if s.entity_type != t.answer_entity.entity_type => {
                    return bad("substituted entity has a different type")
                }
                Some(s) if s.text == t.answer_entity.text => return bad("substituted entity has the same text"),
                Some(_) => {}
            },
            Label::Nei => {
                if t.aux_para_ids.is_empty() {
                    return bad("NEI claim without auxiliary paragraphs");
                }
                if t.aux_para_ids.iter().any(|a| a == &self.source_para_id) {
                    return bad("auxiliary paragraph equals the source paragraph");
                }
            }
        }
        Ok(())
    }
}

/// Claims grouped by split. Only splits present in the map are part of the
/// dataset's split schema.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClaimDataset {
    pub name: String,
    pub splits: BTreeMap<Split, Vec<Claim>>,
}

#[derive(Serialize, Deserialize)]
struct ClaimRecord {
    split: Split,
    #[serde(flatten)]
    claim: Claim,
}

impl ClaimDataset {
    pub fn new(name: impl Into<String>) -> Self {
        ClaimDataset {
            name: name.into(),
            splits: BTreeMap::new(),
        }
    }

    pub fn split(&self, split: Split) -> &[Claim] {
        self.splits.get(&split).map(Vec::as_slice).unwrap_or_default()
    }

    pub fn schema(&self) -> Vec<Split> {
        self.splits.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.splits.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn claims(&self) -> impl Iterator<Item = &Claim> {
        self.splits.values().flatten()
    }

    /// Per-label counts of a split, indexed by [`Label::index`].
    pub fn label_counts(&self, split: Split) -> [usize; 3] {
        let mut counts = [0; 3];
        for c in self.split(split) {
            counts[c.label.index()] += 1;
        }
        counts
    }

    pub fn total_label_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for c in self.claims() {
            counts[c.label.index()] += 1;
        }
        counts
    }

    /// Claim ids unique across splits; every claim satisfies its trace
    /// invariants; every source (and auxiliary) paragraph exists in `corpus`
    /// when one is given.
    pub fn validate(&self, corpus: Option<&Corpus>) -> Result<(), QacgError> {
        let mut ids = HashSet::new();
        for c in self.claims() {
            if !ids.insert(c.claim_id.as_str()) {
                return Err(QacgError::DuplicateClaimId(c.claim_id.clone()));
            }
            c.validate()?;
            if let Some(corpus) = corpus {
                let Some(src) = corpus.get(&c.source_para_id) else {
                    return Err(QacgError::InvalidClaim {
                        claim_id: c.claim_id.clone(),
                        message: format!("source paragraph {} not in corpus", c.source_para_id),
                    });
                };
                for aux in &c.trace.aux_para_ids {
                    if corpus.get(aux).is_none_or(|a| a.page_id != src.page_id) {
                        return Err(QacgError::InvalidClaim {
                            claim_id: c.claim_id.clone(),
                            message: format!("auxiliary paragraph {aux} is not on the source page"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), QacgError> {
        let records: Vec<ClaimRecord> = self
            .splits
            .iter()
            .flat_map(|(&split, claims)| {
                claims.iter().map(move |c| ClaimRecord {
                    split,
                    claim: c.clone(),
                })
            })
            .collect();
        Ok(jsonl::write(path, &records)?)
    }

    /// Reads a dataset; splits appear in the schema iff they have claims.
    pub fn read_jsonl(path: &Path, name: impl Into<String>) -> Result<Self, QacgError> {
        let records: Vec<ClaimRecord> = jsonl::read(path)?;
        let mut ds = ClaimDataset::new(name);
        for r in records {
            ds.splits.entry(r.split).or_default().push(r.claim);
        }
        Ok(ds)
    }

    /// Writes one `<split>.jsonl` per split into `dir` plus `stats.json`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), QacgError> {
        for (split, claims) in &self.splits {
            jsonl::write(&dir.join(format!("{split}.jsonl")), claims)?;
        }
        let stats = self.stats();
        let path = dir.join("stats.json");
        let io = |source| JsonlError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        serde_json::to_writer_pretty(&mut w, &stats).map_err(JsonlError::from)?;
        w.write_all(b"\n").map_err(io)?;
        Ok(())
    }

    /// Per-split label counts, e.g. `{"train": {"SUPPORTS": 10, ...}}`.
    pub fn stats(&self) -> BTreeMap<String, BTreeMap<String, usize>> {
        self.splits
            .keys()
            .map(|&s| {
                let counts = self.label_counts(s);
                let mut row: BTreeMap<String, usize> =
                    Label::ALL.iter().map(|l| (l.to_string(), counts[l.index()])).collect();
                row.insert("total".into(), counts.iter().sum());
                (s.to_string(), row)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn entity(text: &str, ty: &str) -> Entity {
        Entity {
            text: text.into(),
            entity_type: ty.into(),
            span: (0, text.chars().count()),
        }
    }

    fn claim(id: &str, label: Label) -> Claim {
        Claim {
            claim_id: id.into(),
            text: format!("text of {id}"),
            label,
            language: "en".into(),
            source_para_id: "p_0".into(),
            trace: ClaimTrace {
                answer_entity: entity("2017", "NUM"),
                substituted_entity: (label == Label::Refutes).then(|| entity("1995", "NUM")),
                question: "when?".into(),
                aux_para_ids: if label == Label::Nei { vec!["p_1".into()] } else { vec![] },
            },
        }
    }

    #[test]
    fn trace_invariants_are_checked() {
        assert!(claim("a", Label::Supports).validate().is_ok());
        assert!(claim("b", Label::Refutes).validate().is_ok());
        assert!(claim("c", Label::Nei).validate().is_ok());

        let mut c = claim("d", Label::Refutes);
        c.trace.substituted_entity = Some(entity("2017", "NUM"));
        assert!(c.validate().is_err());
        c.trace.substituted_entity = Some(entity("Paris", "LOC"));
        assert!(c.validate().is_err());

        let mut c = claim("e", Label::Nei);
        c.trace.aux_para_ids = vec!["p_0".into()];
        assert!(c.validate().is_err());
    }

    #[test]
    fn jsonl_round_trip_keeps_splits() {
        let mut ds = ClaimDataset::new("qacg-en");
        ds.splits.insert(Split::Train, vec![claim("a", Label::Supports), claim("b", Label::Nei)]);
        ds.splits.insert(Split::Test, vec![claim("c", Label::Refutes)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        ds.write_jsonl(&path).unwrap();
        let back = ClaimDataset::read_jsonl(&path, "qacg-en").unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.label_counts(Split::Train), [1, 0, 1]);
        assert_eq!(back.schema(), [Split::Train, Split::Test]);
    }

    #[test]
    fn duplicate_ids_fail_validation() {
        let mut ds = ClaimDataset::new("x");
        ds.splits.insert(Split::Train, vec![claim("a", Label::Supports)]);
        ds.splits.insert(Split::Dev, vec![claim("a", Label::Supports)]);
        assert!(matches!(ds.validate(None), Err(QacgError::DuplicateClaimId(_))));
    }
}
