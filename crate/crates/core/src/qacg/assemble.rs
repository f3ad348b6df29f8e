use std::collections::{BTreeMap, HashSet};

use rand::seq::index;

use super::{Claim, ClaimDataset, QacgError};
use crate::{seed, Label, Split};

/// Drops exact-text duplicates, keeping the first occurrence regardless of
/// label.
pub fn dedup_claims(claims: Vec<Claim>) -> Vec<Claim> {
    let mut seen = HashSet::new();
    claims.into_iter().filter(|c| seen.insert(c.text.clone())).collect()
}

/// Global dedup across splits, visiting train, dev, test in that order.
pub fn dedup_dataset(ds: &ClaimDataset) -> ClaimDataset {
    let mut seen = HashSet::new();
    let splits = ds
        .splits
        .iter()
        .map(|(&split, claims)| {
            let kept = claims.iter().filter(|c| seen.insert(c.text.as_str())).cloned().collect();
            (split, kept)
        })
        .collect();
    ClaimDataset {
        name: ds.name.clone(),
        splits,
    }
}

/// Indices of `n` draws without replacement from `pool`, in ascending order.
fn draw_sorted<R: rand::Rng>(rng: &mut R, pool: usize, n: usize) -> Vec<usize> {
    let mut picked = index::sample(rng, pool, n).into_vec();
    picked.sort_unstable();
    picked
}

/// Downsamples every label of every split to that split's minority-label
/// count. Survivors keep their input order.
pub fn stratify_balance(ds: &ClaimDataset, seed: u64) -> Result<ClaimDataset, QacgError> {
    let mut out = ClaimDataset::new(ds.name.clone());
    for (&split, claims) in &ds.splits {
        let counts = ds.label_counts(split);
        if let Some(missing) = Label::ALL.into_iter().find(|l| counts[l.index()] == 0) {
            return Err(QacgError::MissingLabel { split, label: missing });
        }
        let target = *counts.iter().min().expect("three labels");
        let mut rng = seed::rng_for(seed, split.as_str());
        let mut keep = vec![false; claims.len()];
        for label in Label::ALL {
            let positions: Vec<usize> = (0..claims.len()).filter(|&i| claims[i].label == label).collect();
            for i in draw_sorted(&mut rng, positions.len(), target) {
                keep[positions[i]] = true;
            }
        }
        let kept = claims
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(c, _)| c.clone())
            .collect();
        out.splits.insert(split, kept);
    }
    Ok(out)
}

fn namespaced(ds_name: &str, c: &Claim) -> Claim {
    Claim {
        claim_id: format!("{ds_name}/{}", c.claim_id),
        ..c.clone()
    }
}

fn check_schemas(datasets: &[ClaimDataset]) -> Result<Vec<Split>, QacgError> {
    if datasets.len() < 2 {
        return Err(QacgError::TooFewDatasets(datasets.len()));
    }
    let expected = datasets[0].schema();
    for ds in &datasets[1..] {
        let found = ds.schema();
        if found != expected {
            return Err(QacgError::SplitMismatch {
                name: ds.name.clone(),
                expected,
                found,
            });
        }
    }
    Ok(expected)
}

/// Samples uniformly from the pooled claims of all datasets so that every
/// split has exactly the per-label counts of the first dataset. Claim ids are
/// prefixed with their source dataset name.
pub fn build_mix(datasets: &[ClaimDataset], seed: u64) -> Result<ClaimDataset, QacgError> {
    let schema = check_schemas(datasets)?;
    let template = &datasets[0];
    let mut out = ClaimDataset::new("mix");
    for split in schema {
        let mut pools: BTreeMap<Label, Vec<Claim>> = BTreeMap::new();
        for ds in datasets {
            for c in ds.split(split) {
                pools.entry(c.label).or_default().push(namespaced(&ds.name, c));
            }
        }
        let counts = template.label_counts(split);
        let mut rng = seed::rng_for(seed, split.as_str());
        let mut picked: Vec<Claim> = Vec::new();
        for label in Label::ALL {
            let pool = pools.remove(&label).unwrap_or_default();
            for i in draw_sorted(&mut rng, pool.len(), counts[label.index()]) {
                picked.push(pool[i].clone());
            }
        }
        out.splits.insert(split, picked);
    }
    Ok(out)
}

/// Concatenates all datasets split by split, namespacing claim ids.
pub fn build_sum(datasets: &[ClaimDataset]) -> Result<ClaimDataset, QacgError> {
    let schema = check_schemas(datasets)?;
    let mut out = ClaimDataset::new("sum");
    for split in schema {
        let claims = datasets
            .iter()
            .flat_map(|ds| ds.split(split).iter().map(|c| namespaced(&ds.name, c)))
            .collect();
        out.splits.insert(split, claims);
    }
    Ok(out)
}
