//! Retrieval metrics (MRR@k, P@k against the union of gold evidence) and
//! macro-averaged F1 for three-way classification.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::lexical::RankedEvidence;
use crate::Label;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("claim {0} has no gold evidence")]
    EmptyGold(String),
    #[error("{preds} predictions but {targets} targets")]
    LengthMismatch { preds: usize, targets: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("prediction for unknown id {0}")]
    UnknownId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldEvidence {
    pub claim_id: String,
    /// Union of all annotated evidence sets.
    pub gold_ids: BTreeSet<String>,
}

impl GoldEvidence {
    fn check(&self) -> Result<(), EvalError> {
        if self.gold_ids.is_empty() {
            return Err(EvalError::EmptyGold(self.claim_id.clone()));
        }
        Ok(())
    }
}

/// Retrieved list for one claim, as stored in a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub claim_id: String,
    pub results: Vec<RankedEvidence>,
}

/// Reciprocal list position of the first gold hit within the top `k`.
pub fn mrr_at_k(results: &[RankedEvidence], gold: &GoldEvidence, k: usize) -> Result<f64, EvalError> {
    gold.check()?;
    Ok(results
        .iter()
        .take(k)
        .position(|r| gold.gold_ids.contains(&r.para_id))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64))
}

/// Gold hits in the top `k`, divided by `k` even when fewer were returned.
pub fn precision_at_k(results: &[RankedEvidence], gold: &GoldEvidence, k: usize) -> Result<f64, EvalError> {
    gold.check()?;
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    let hits = results.iter().take(k).filter(|r| gold.gold_ids.contains(&r.para_id)).count();
    Ok(hits as f64 / k as f64)
}

/// Rows are targets, columns predictions, both in label index order.
pub fn confusion(preds: &[Label], targets: &[Label]) -> Result<[[usize; 3]; 3], EvalError> {
    if preds.len() != targets.len() {
        return Err(EvalError::LengthMismatch {
            preds: preds.len(),
            targets: targets.len(),
        });
    }
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut m = [[0; 3]; 3];
    for (p, t) in preds.iter().zip(targets) {
        m[t.index()][p.index()] += 1;
    }
    Ok(m)
}

fn per_class_f1(m: &[[usize; 3]; 3]) -> [f64; 3] {
    std::array::from_fn(|c| {
        let tp = m[c][c];
        let predicted: usize = (0..3).map(|t| m[t][c]).sum();
        let actual: usize = m[c].iter().sum();
        if tp == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (predicted + actual) as f64
        }
    })
}

/// Unweighted mean of per-class F1; a class with no true positives scores 0.
pub fn f1_macro(preds: &[Label], targets: &[Label]) -> Result<f64, EvalError> {
    let m = confusion(preds, targets)?;
    Ok(per_class_f1(&m).iter().sum::<f64>() / 3.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub n: usize,
    pub mrr: BTreeMap<usize, f64>,
    pub precision: BTreeMap<usize, f64>,
}

impl RetrievalReport {
    /// `k,mrr,precision` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,mrr,precision\n");
        for (k, mrr) in &self.mrr {
            s.push_str(&format!("{k},{mrr:.6},{:.6}\n", self.precision[k]));
        }
        s
    }
}

/// Means over every gold claim; a claim without a run counts as an empty list.
pub fn evaluate_retrieval(runs: &[RunRecord], gold: &[GoldEvidence], ks: &[usize]) -> Result<RetrievalReport, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    if ks.contains(&0) {
        return Err(EvalError::ZeroK);
    }
    let mut by_id: HashMap<&str, &[RankedEvidence]> = HashMap::with_capacity(runs.len());
    for r in runs {
        if by_id.insert(&r.claim_id, &r.results).is_some() {
            return Err(EvalError::DuplicateId(r.claim_id.clone()));
        }
    }
    let mut mrr: BTreeMap<usize, f64> = ks.iter().map(|&k| (k, 0.0)).collect();
    let mut precision = mrr.clone();
    for g in gold {
        let results = by_id.get(g.claim_id.as_str()).copied().unwrap_or_default();
        for &k in ks {
            *mrr.get_mut(&k).unwrap() += mrr_at_k(results, g, k)?;
            *precision.get_mut(&k).unwrap() += precision_at_k(results, g, k)?;
        }
    }
    let n = gold.len() as f64;
    mrr.values_mut().for_each(|v| *v /= n);
    precision.values_mut().for_each(|v| *v /= n);
    Ok(RetrievalReport {
        n: gold.len(),
        mrr,
        precision,
    })
}

/// One labeled item of a predictions or targets file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub id: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliReport {
    pub n: usize,
    pub f1_macro: f64,
    pub accuracy: f64,
    pub per_class_f1: BTreeMap<Label, f64>,
    /// Rows are targets, columns predictions.
    pub confusion: [[usize; 3]; 3],
}

impl NliReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,f1\n");
        for (l, f) in &self.per_class_f1 {
            s.push_str(&format!("{l},{f:.6}\n"));
        }
        s.push_str(&format!("macro,{:.6}\n", self.f1_macro));
        s
    }
}

pub fn evaluate_nli(preds: &[Label], targets: &[Label]) -> Result<NliReport, EvalError> {
    let m = confusion(preds, targets)?;
    let f1 = per_class_f1(&m);
    let correct: usize = (0..3).map(|c| m[c][c]).sum();
    Ok(NliReport {
        n: preds.len(),
        f1_macro: f1.iter().sum::<f64>() / 3.0,
        accuracy: correct as f64 / preds.len() as f64,
        per_class_f1: Label::ALL.into_iter().map(|l| (l, f1[l.index()])).collect(),
        confusion: m,
    })
}

/// Aligns predictions to targets by id.
pub fn align_labels(preds: &[LabelRecord], targets: &[LabelRecord]) -> Result<(Vec<Label>, Vec<Label>), EvalError> {
    if preds.len() != targets.len() {
        return Err(EvalError::LengthMismatch {
            preds: preds.len(),
            targets: targets.len(),
        });
    }
    let mut by_id = HashMap::with_capacity(preds.len());
    for p in preds {
        if by_id.insert(p.id.as_str(), p.label).is_some() {
            return Err(EvalError::DuplicateId(p.id.clone()));
        }
    }
    let mut p = Vec::with_capacity(targets.len());
    let mut t = Vec::with_capacity(targets.len());
    for target in targets {
        let label = by_id.remove(target.id.as_str()).ok_or_else(|| EvalError::UnknownId(target.id.clone()))?;
        p.push(label);
        t.push(target.label);
    }
    Ok((p, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexical::Stage;
    use Label::*;

    fn run(ids: &[&str]) -> Vec<RankedEvidence> {
        ids.iter()
            .enumerate()
            .map(|(i, id)| RankedEvidence {
                para_id: id.to_string(),
                score: -(i as f64),
                rank: i + 1,
                stage: Stage::Lexical,
            })
            .collect()
    }

    fn gold(id: &str, ids: &[&str]) -> GoldEvidence {
        GoldEvidence {
            claim_id: id.into(),
            gold_ids: ids.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn mrr_definition() {
        let g = gold("c", &["x"]);
        assert_eq!(mrr_at_k(&run(&["x", "a"]), &g, 1).unwrap(), 1.0);
        let r = run(&["a", "b", "x"]);
        assert_eq!(mrr_at_k(&r, &g, 5).unwrap(), 1.0 / 3.0);
        assert_eq!(mrr_at_k(&r, &g, 2).unwrap(), 0.0);
        assert_eq!(mrr_at_k(&r, &gold("c", &[]), 2), Err(EvalError::EmptyGold("c".into())));
    }

    #[test]
    fn precision_definition() {
        let g = gold("c", &["x", "y"]);
        assert_eq!(precision_at_k(&run(&["x", "y"]), &g, 2).unwrap(), 1.0);
        assert_eq!(precision_at_k(&run(&["x", "z"]), &g, 2).unwrap(), 0.5);
        assert_eq!(precision_at_k(&[], &g, 2).unwrap(), 0.0);
        assert_eq!(precision_at_k(&run(&["x"]), &g, 2).unwrap(), 0.5);
    }

    #[test]
    fn four_claim_mean() {
        let runs = vec![
            RunRecord { claim_id: "1".into(), results: run(&["g1", "a"]) },
            RunRecord { claim_id: "2".into(), results: run(&["a", "g2"]) },
            RunRecord { claim_id: "3".into(), results: run(&["a", "b", "c", "g3"]) },
        ];
        let golds = [gold("1", &["g1"]), gold("2", &["g2"]), gold("3", &["g3"]), gold("4", &["g4"])];
        let r = evaluate_retrieval(&runs, &golds, &[1, 5]).unwrap();
        assert_eq!(r.mrr[&1], 0.25);
        assert!((r.mrr[&5] - (1.0 + 0.5 + 0.25) / 4.0).abs() < 1e-12);
        assert_eq!(r.precision[&1], 0.25);
        assert!(r.to_csv().starts_with("k,mrr,precision\n1,0.250000"));
    }

    #[test]
    fn f1_examples() {
        let t = [Supports, Refutes, Nei];
        assert_eq!(f1_macro(&t, &t).unwrap(), 1.0);
        let all_s = [Supports; 3];
        assert!((f1_macro(&all_s, &t).unwrap() - 0.5 / 3.0).abs() < 1e-12);
        assert!(f1_macro(&all_s, &t[..2]).is_err());
        assert!(f1_macro(&[], &[]).is_err());
    }

    #[test]
    fn report_and_alignment() {
        let preds = vec![
            LabelRecord { id: "b".into(), label: Refutes },
            LabelRecord { id: "a".into(), label: Supports },
        ];
        let targets = vec![
            LabelRecord { id: "a".into(), label: Supports },
            LabelRecord { id: "b".into(), label: Nei },
        ];
        let (p, t) = align_labels(&preds, &targets).unwrap();
        assert_eq!(p, [Supports, Refutes]);
        let r = evaluate_nli(&p, &t).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.confusion[Nei.index()][Refutes.index()], 1);
        assert!((r.f1_macro - 1.0 / 3.0).abs() < 1e-12);
    }
}
