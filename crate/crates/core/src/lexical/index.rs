use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;

use super::{tokenize, Bm25Params, RankedEvidence, Stage};
use crate::corpus::Corpus;

/// `(document, term frequency)`; `doc` indexes the id-sorted document table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// Term → postings over a fixed document table. Documents are numbered in
/// ascending `para_id` order, so postings sorted by `doc` are also sorted by
/// paragraph id.
#[derive(Debug, Clone, Default)]
pub struct InvertedIndex {
    pub(super) doc_ids: Vec<String>,
    pub(super) doc_lengths: Vec<u32>,
    pub(super) postings: HashMap<String, Vec<Posting>>,
    pub(super) avg_doc_length: f64,
}

impl InvertedIndex {
    pub(super) fn from_parts(
        doc_ids: Vec<String>,
        doc_lengths: Vec<u32>,
        postings: HashMap<String, Vec<Posting>>,
    ) -> Self {
        let avg_doc_length = if doc_lengths.is_empty() {
            0.0
        } else {
            doc_lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / doc_lengths.len() as f64
        };
        InvertedIndex {
            doc_ids,
            doc_lengths,
            postings,
            avg_doc_length,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.postings.get(term).map(Vec::as_slice)
    }

    pub fn doc_id(&self, doc: u32) -> &str {
        &self.doc_ids[doc as usize]
    }

    fn doc_index(&self, para_id: &str) -> Option<usize> {
        self.doc_ids.binary_search_by(|d| d.as_str().cmp(para_id)).ok()
    }

    pub fn contains(&self, para_id: &str) -> bool {
        self.doc_index(para_id).is_some()
    }

    pub fn doc_length(&self, para_id: &str) -> Option<u32> {
        self.doc_index(para_id).map(|i| self.doc_lengths[i])
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }
}

pub fn build_index(corpus: &Corpus) -> InvertedIndex {
    let mut docs: Vec<(&str, &str)> = corpus
        .paragraphs()
        .iter()
        .map(|p| (p.para_id.as_str(), p.text.as_str()))
        .collect();
    docs.sort_by(|a, b| a.0.cmp(b.0));

    let tokenized: Vec<Vec<String>> = docs.par_iter().map(|(_, text)| tokenize(text)).collect();

    let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
    let mut doc_lengths = Vec::with_capacity(docs.len());
    for (doc, tokens) in tokenized.into_iter().enumerate() {
        doc_lengths.push(tokens.len() as u32);
        let mut tf: HashMap<String, u32> = HashMap::new();
        for t in tokens {
            *tf.entry(t).or_default() += 1;
        }
        for (term, tf) in tf {
            postings.entry(term).or_default().push(Posting {
                doc: doc as u32,
                tf,
            });
        }
    }
    let doc_ids = docs.into_iter().map(|(id, _)| id.to_string()).collect();
    InvertedIndex::from_parts(doc_ids, doc_lengths, postings)
}

/// Top-`k` paragraphs by BM-25, ties broken by ascending paragraph id.
///
/// The score sums, over every query token (repeats included),
/// `idf · tf·(k1+1) / (tf + k1·(1 − b + b·len/avglen))` with the
/// non-negative `idf = ln(1 + (N − df + 0.5)/(df + 0.5))`.
pub fn search(index: &InvertedIndex, query: &str, k: usize, params: Bm25Params) -> Vec<RankedEvidence> {
    if k == 0 || index.doc_count() == 0 {
        return Vec::new();
    }
    let n = index.doc_count() as f64;
    let avgdl = index.avg_doc_length;
    let (k1, b) = (params.k1(), params.b());

    let mut scores: HashMap<u32, f64> = HashMap::new();
    for token in tokenize(query) {
        let Some(list) = index.postings.get(&token) else {
            continue;
        };
        let df = list.len() as f64;
        let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
        for p in list {
            let tf = f64::from(p.tf);
            let len_norm = if avgdl > 0.0 {
                f64::from(index.doc_lengths[p.doc as usize]) / avgdl
            } else {
                0.0
            };
            let weight = tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len_norm));
            *scores.entry(p.doc).or_insert(0.0) += idf * weight;
        }
    }

    let mut hits: Vec<(u32, f64)> = scores.into_iter().collect();
    // doc numbers follow para_id order, so comparing them breaks ties by id
    let cmp = |a: &(u32, f64), b: &(u32, f64)| -> Ordering { b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)) };
    if hits.len() > k {
        hits.select_nth_unstable_by(k - 1, cmp);
        hits.truncate(k);
    }
    hits.sort_unstable_by(cmp);
    hits.into_iter()
        .enumerate()
        .map(|(i, (doc, score))| RankedEvidence {
            para_id: index.doc_ids[doc as usize].clone(),
            score,
            rank: i + 1,
            stage: Stage::Lexical,
        })
        .collect()
}
