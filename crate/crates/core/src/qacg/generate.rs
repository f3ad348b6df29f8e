use std::collections::HashSet;

use rand::seq::index;
use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{Claim, ClaimDataset, ClaimTrace, QacgError};
use crate::corpus::{Corpus, Paragraph};
use crate::gateway::{Entity, Gateway, GatewayError};
use crate::{seed, Label, Split};

/// Auxiliary paragraphs sampled per source paragraph for NEI claims.
pub const DEFAULT_NEI_AUX: usize = 2;

#[derive(Debug, Clone)]
pub struct GenerationConfig {
    pub name: String,
    pub language: String,
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
    pub nei_aux: usize,
    pub seed: u64,
}

impl GenerationConfig {
    pub fn new(name: impl Into<String>, language: impl Into<String>, seed: u64) -> Self {
        GenerationConfig {
            name: name.into(),
            language: language.into(),
            n_train: 10_000,
            n_dev: 1_000,
            n_test: 1_000,
            nei_aux: DEFAULT_NEI_AUX,
            seed,
        }
    }
}

/// Uniform sample without replacement, split into train/dev/test in that
/// order of the draw.
pub fn sample_source_paragraphs(
    corpus: &Corpus,
    n_train: usize,
    n_dev: usize,
    n_test: usize,
    seed: u64,
) -> Result<Vec<(Split, &Paragraph)>, QacgError> {
    let requested = n_train + n_dev + n_test;
    if requested > corpus.len() {
        return Err(QacgError::CorpusTooSmall {
            requested,
            available: corpus.len(),
        });
    }
    let mut rng = seed::rng(seed);
    let picked = index::sample(&mut rng, corpus.len(), requested).into_vec();
    let paragraphs = corpus.paragraphs();
    Ok(picked
        .into_iter()
        .enumerate()
        .map(|(i, idx)| {
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_dev {
                Split::Dev
            } else {
                Split::Test
            };
            (split, &paragraphs[idx])
        })
        .collect())
}

fn skip(para_id: &str, what: &str, err: &GatewayError) {
    tracing::warn!(para_id, role = %err.role(), error = %err, "skipping {what}");
}

/// Question then claim for one answer; `None` (logged) on backend failure.
fn question_and_claim(
    gw: &Gateway,
    answer: &Entity,
    claim_answer: &str,
    context: &str,
    para_id: &str,
) -> Option<(String, String)> {
    let question = gw
        .generate_question(answer, context)
        .map_err(|e| skip(para_id, "entity", &e))
        .ok()?;
    let claim = gw
        .generate_claim(claim_answer, &question)
        .map_err(|e| skip(para_id, "entity", &e))
        .ok()?;
    Some((question, claim))
}

pub(super) fn supports_from(p: &Paragraph, entities: &[Entity], gw: &Gateway, language: &str) -> Vec<Claim> {
    entities
        .iter()
        .enumerate()
        .filter_map(|(j, e)| {
            let (question, text) = question_and_claim(gw, e, &e.text, &p.text, &p.para_id)?;
            Some(Claim {
                claim_id: format!("{}:S{j}", p.para_id),
                text,
                label: Label::Supports,
                language: language.to_string(),
                source_para_id: p.para_id.clone(),
                trace: ClaimTrace {
                    answer_entity: e.clone(),
                    substituted_entity: None,
                    question,
                    aux_para_ids: Vec::new(),
                },
            })
        })
        .collect()
}

pub(super) fn refutes_from<R: Rng>(
    p: &Paragraph,
    entities: &[Entity],
    supports: &[Claim],
    gw: &Gateway,
    rng: &mut R,
) -> Vec<Claim> {
    let mut out = Vec::new();
    for s in supports.iter().filter(|s| s.label == Label::Supports) {
        let answer = &s.trace.answer_entity;
        let candidates: Vec<&Entity> = entities
            .iter()
            .filter(|a| a.entity_type == answer.entity_type && a.text != answer.text)
            .collect();
        let Some(&substitute) = candidates.choose(rng) else {
            continue;
        };
        let text = match gw.generate_claim(&substitute.text, &s.trace.question) {
            Ok(t) => t,
            Err(e) => {
                skip(&p.para_id, "substitution", &e);
                continue;
            }
        };
        let suffix = s.claim_id.rsplit(':').next().unwrap_or_default().trim_start_matches('S');
        out.push(Claim {
            claim_id: format!("{}:R{suffix}", p.para_id),
            text,
            label: Label::Refutes,
            language: s.language.clone(),
            source_para_id: p.para_id.clone(),
            trace: ClaimTrace {
                answer_entity: answer.clone(),
                substituted_entity: Some(substitute.clone()),
                question: s.trace.question.clone(),
                aux_para_ids: Vec::new(),
            },
        });
    }
    out
}

pub(super) fn nei_from<R: Rng>(
    p: &Paragraph,
    source_entities: &[Entity],
    corpus: &Corpus,
    gw: &Gateway,
    aux_count: usize,
    language: &str,
    rng: &mut R,
) -> Vec<Claim> {
    let Some(page) = corpus.page(&p.page_id) else {
        return Vec::new();
    };
    let others: Vec<&Paragraph> = page.into_iter().filter(|q| q.para_id != p.para_id).collect();
    let take = aux_count.min(others.len());
    if take == 0 {
        return Vec::new();
    }
    let mut aux: Vec<&Paragraph> = index::sample(rng, others.len(), take)
        .into_iter()
        .map(|i| others[i])
        .collect();
    aux.sort_by_key(|a| a.ordinal);

    let mut excluded: HashSet<(String, String)> = source_entities
        .iter()
        .map(|e| (e.text.clone(), e.entity_type.clone()))
        .collect();
    let mut out = Vec::new();
    for a in aux {
        let entities = match gw.ner(&a.text) {
            Ok(es) => es,
            Err(e) => {
                skip(&p.para_id, "auxiliary paragraph", &e);
                continue;
            }
        };
        let context = if a.ordinal < p.ordinal {
            format!("{}\n{}", a.text, p.text)
        } else {
            format!("{}\n{}", p.text, a.text)
        };
        for (j, e) in entities.into_iter().enumerate() {
            if !excluded.insert((e.text.clone(), e.entity_type.clone())) {
                continue;
            }
            let Some((question, text)) = question_and_claim(gw, &e, &e.text, &context, &p.para_id) else {
                continue;
            };
            out.push(Claim {
                claim_id: format!("{}:N{}.{j}", p.para_id, a.ordinal),
                text,
                label: Label::Nei,
                language: language.to_string(),
                source_para_id: p.para_id.clone(),
                trace: ClaimTrace {
                    answer_entity: e,
                    substituted_entity: None,
                    question,
                    aux_para_ids: vec![a.para_id.clone()],
                },
            });
        }
    }
    out
}

/// SUPPORTS claims, one per entity of `p` that survives generation.
pub fn gen_supports(p: &Paragraph, gw: &Gateway, language: &str) -> Result<Vec<Claim>, GatewayError> {
    let entities = gw.ner(&p.text)?;
    Ok(supports_from(p, &entities, gw, language))
}

/// REFUTES claims from the SUPPORTS traces of the same paragraph. An answer
/// with no other same-type entity in the paragraph yields no claim.
pub fn gen_refutes<R: Rng>(
    p: &Paragraph,
    supports: &[Claim],
    gw: &Gateway,
    rng: &mut R,
) -> Result<Vec<Claim>, GatewayError> {
    let entities = gw.ner(&p.text)?;
    Ok(refutes_from(p, &entities, supports, gw, rng))
}

/// NEI claims from up to `aux_count` other paragraphs of `p`'s page.
pub fn gen_nei<R: Rng>(
    p: &Paragraph,
    corpus: &Corpus,
    gw: &Gateway,
    aux_count: usize,
    language: &str,
    rng: &mut R,
) -> Result<Vec<Claim>, GatewayError> {
    let entities = gw.ner(&p.text)?;
    Ok(nei_from(p, &entities, corpus, gw, aux_count, language, rng))
}

/// All three claim kinds for one paragraph, drawing randomness from a stream
/// derived from `(seed, para_id)`. A NER failure on the source paragraph
/// skips it entirely.
pub fn generate_for_paragraph(
    p: &Paragraph,
    corpus: &Corpus,
    gw: &Gateway,
    nei_aux: usize,
    language: &str,
    seed: u64,
) -> Vec<Claim> {
    let entities = match gw.ner(&p.text) {
        Ok(es) => es,
        Err(e) => {
            skip(&p.para_id, "paragraph", &e);
            return Vec::new();
        }
    };
    let mut rng = seed::rng_for(seed, &p.para_id);
    let mut claims = supports_from(p, &entities, gw, language);
    let refutes = refutes_from(p, &entities, &claims, gw, &mut rng);
    let nei = nei_from(p, &entities, corpus, gw, nei_aux, language, &mut rng);
    claims.extend(refutes);
    claims.extend(nei);
    claims
}

/// Samples source paragraphs and generates the raw (unbalanced) dataset.
/// Paragraphs are processed in parallel; output order follows the sample.
pub fn generate_dataset(corpus: &Corpus, gw: &Gateway, cfg: &GenerationConfig) -> Result<ClaimDataset, QacgError> {
    let sample = sample_source_paragraphs(corpus, cfg.n_train, cfg.n_dev, cfg.n_test, cfg.seed)?;
    let generated: Vec<(Split, Vec<Claim>)> = sample
        .par_iter()
        .map(|&(split, p)| {
            (
                split,
                generate_for_paragraph(p, corpus, gw, cfg.nei_aux, &cfg.language, cfg.seed),
            )
        })
        .collect();
    let mut ds = ClaimDataset::new(cfg.name.clone());
    for split in Split::ALL {
        let requested = match split {
            Split::Train => cfg.n_train,
            Split::Dev => cfg.n_dev,
            Split::Test => cfg.n_test,
        };
        if requested > 0 {
            ds.splits.insert(split, Vec::new());
        }
    }
    for (split, claims) in generated {
        ds.splits.entry(split).or_default().extend(claims);
    }
    Ok(ds)
}
