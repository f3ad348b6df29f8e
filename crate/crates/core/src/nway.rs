//! Retrieval training tuples: a claim, its gold paragraph and the top lexical
//! hits for the claim text as hard negatives.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lexical::{search, Bm25Params, InvertedIndex};
use crate::qacg::Claim;
use crate::Label;

pub const DEFAULT_N: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NwayTuple {
    pub claim_id: String,
    pub claim: String,
    pub positive: String,
    /// Decreasing lexical score, ties by ascending para id.
    pub negatives: Vec<String>,
    /// Fewer than n−1 negatives were available.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub short: bool,
}

/// A claim that could not be turned into a tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleError {
    pub claim_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TupleSet {
    pub tuples: Vec<NwayTuple>,
    pub errors: Vec<TupleError>,
}

impl TupleSet {
    pub fn short_count(&self) -> usize {
        self.tuples.iter().filter(|t| t.short).count()
    }
}

/// Builds one tuple per SUPPORTS/REFUTES claim with a distinct text. NEI
/// claims and repeated texts are skipped; output follows input order.
pub fn build_tuples<'a, I>(claims: I, index: &InvertedIndex, n: usize, params: Bm25Params) -> TupleSet
where
    I: IntoIterator<Item = &'a Claim>,
{
    let mut seen = HashSet::new();
    let eligible: Vec<&Claim> = claims
        .into_iter()
        .filter(|c| c.label != Label::Nei)
        .filter(|c| seen.insert(c.text.as_str()))
        .collect();

    let outcomes: Vec<Result<NwayTuple, TupleError>> = eligible
        .par_iter()
        .map(|c| tuple_for(c, index, n, params))
        .collect();

    let mut set = TupleSet::default();
    for o in outcomes {
        match o {
            Ok(t) => set.tuples.push(t),
            Err(e) => set.errors.push(e),
        }
    }
    if set.short_count() > 0 {
        tracing::warn!(short = set.short_count(), "tuples with fewer than n-1 negatives");
    }
    set
}

fn tuple_for(c: &Claim, index: &InvertedIndex, n: usize, params: Bm25Params) -> Result<NwayTuple, TupleError> {
    if !index.contains(&c.source_para_id) {
        return Err(TupleError {
            claim_id: c.claim_id.clone(),
            message: format!("source paragraph {} is not indexed", c.source_para_id),
        });
    }
    let want = n.saturating_sub(1);
    let negatives: Vec<String> = search(index, &c.text, n, params)
        .into_iter()
        .map(|r| r.para_id)
        .filter(|id| *id != c.source_para_id)
        .take(want)
        .collect();
    Ok(NwayTuple {
        claim_id: c.claim_id.clone(),
        claim: c.text.clone(),
        positive: c.source_para_id.clone(),
        short: negatives.len() < want,
        negatives,
    })
}
