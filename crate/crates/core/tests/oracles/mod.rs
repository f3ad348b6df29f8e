//! Brute-force reference implementations used by the property and
//! acceptance tests. Each one recomputes a result from first principles
//! without touching the structure under test.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use factsearch_core::lexical::tokenize;
use factsearch_core::Label;

/// Scores every document from its token list and sorts by (score desc,
/// id asc). Documents are tokenized once up front.
pub struct Bm25Oracle {
    docs: Vec<(String, Vec<String>)>,
    avg: f64,
}

impl Bm25Oracle {
    pub fn new(docs: &[(String, String)]) -> Self {
        let docs: Vec<(String, Vec<String>)> = docs.iter().map(|(id, t)| (id.clone(), tokenize(t))).collect();
        let total: usize = docs.iter().map(|(_, t)| t.len()).sum();
        let avg = total as f64 / docs.len() as f64;
        Bm25Oracle { docs, avg }
    }

    pub fn search(&self, query: &str, k: usize, k1: f64, b: f64) -> Vec<(String, f64)> {
        let n = self.docs.len() as f64;
        let mut scored = Vec::new();
        for (id, toks) in &self.docs {
            let mut score = 0.0;
            let mut matched = false;
            for q in tokenize(query) {
                let tf = toks.iter().filter(|t| **t == q).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                matched = true;
                let df = self.docs.iter().filter(|(_, d)| d.contains(&q)).count() as f64;
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                let norm = if self.avg > 0.0 { toks.len() as f64 / self.avg } else { 0.0 };
                score += idf * (tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm)));
            }
            if matched {
                scored.push((id.clone(), score));
            }
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(k);
        scored
    }
}

/// Direct simulation of the greedy merge: close a chunk as soon as its
/// length exceeds the threshold.
pub fn greedy_chunks(paragraphs: &[String], threshold: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    for p in paragraphs {
        cur.push(p);
        let len = cur.iter().map(|s| s.chars().count()).sum::<usize>() + cur.len() - 1;
        if len > threshold {
            out.push(cur.join("\n"));
            cur.clear();
        }
    }
    if !cur.is_empty() {
        out.push(cur.join("\n"));
    }
    out
}

/// Macro F1 from per-class precision and recall.
pub fn f1_macro_oracle(preds: &[Label], targets: &[Label]) -> f64 {
    let mut total = 0.0;
    for class in Label::ALL {
        let tp = preds.iter().zip(targets).filter(|(p, t)| **p == class && **t == class).count() as f64;
        let pred_pos = preds.iter().filter(|p| **p == class).count() as f64;
        let true_pos = targets.iter().filter(|t| **t == class).count() as f64;
        let precision = if pred_pos > 0.0 { tp / pred_pos } else { 0.0 };
        let recall = if true_pos > 0.0 { tp / true_pos } else { 0.0 };
        if precision + recall > 0.0 {
            total += 2.0 * precision * recall / (precision + recall);
        }
    }
    total / 3.0
}

pub fn mrr_oracle(ranked: &[&str], gold: &HashSet<&str>, k: usize) -> f64 {
    for (i, id) in ranked.iter().enumerate() {
        if i >= k {
            break;
        }
        if gold.contains(id) {
            return 1.0 / (i as f64 + 1.0);
        }
    }
    0.0
}

pub fn precision_oracle(ranked: &[&str], gold: &HashSet<&str>, k: usize) -> f64 {
    let hits = ranked.iter().take(k).filter(|id| gold.contains(*id)).count();
    hits as f64 / k as f64
}

/// Mean NLL of softmax(z / t), computed naively.
pub fn nll_oracle(logits: &[[f64; 3]], labels: &[Label], t: f64) -> f64 {
    let mut sum = 0.0;
    for (z, y) in logits.iter().zip(labels) {
        let e: Vec<f64> = z.iter().map(|x| (x / t).exp()).collect();
        let s: f64 = e.iter().sum();
        sum -= (e[y.index()] / s).ln();
    }
    sum / logits.len() as f64
}

/// Minimizer of the NLL on a log-spaced grid of `points` temperatures.
pub fn grid_argmin(logits: &[[f64; 3]], labels: &[Label], lo: f64, hi: f64, points: usize) -> f64 {
    let (mut best_t, mut best) = (lo, f64::INFINITY);
    for i in 0..=points {
        let t = (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / points as f64).exp();
        let v = nll_oracle(logits, labels, t);
        if v < best {
            best = v;
            best_t = t;
        }
    }
    best_t
}

/// First-index argmax.
pub fn argmax3(z: &[f64; 3]) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if z[i] > z[best] {
            best = i;
        }
    }
    best
}

/// Mean and negative fraction over a slice of PVI values.
pub fn vui_npr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    (
        values.iter().sum::<f64>() / n,
        values.iter().filter(|v| **v < 0.0).count() as f64 / n,
    )
}

/// Groups results by page at the position of the page's first (best) entry.
pub fn group_by_page<'a>(items: &[(&'a str, &'a str)]) -> Vec<&'a str> {
    let mut order: Vec<&str> = Vec::new();
    let mut members: HashMap<&str, Vec<&str>> = HashMap::new();
    for (id, page) in items {
        if !members.contains_key(page) {
            order.push(page);
        }
        members.entry(page).or_default().push(id);
    }
    order.into_iter().flat_map(|p| members.remove(p).unwrap()).collect()
}
