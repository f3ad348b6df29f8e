//! Jaro–Winkler word highlighting of claim words inside evidence text.

use serde::{Deserialize, Serialize};

use crate::lexical::word_spans;

pub const DEFAULT_THRESHOLD: f64 = 0.8;
pub const DEFAULT_MIN_WORD_LEN: usize = 4;

const PREFIX_SCALE: f64 = 0.1;
const MAX_PREFIX: usize = 4;
/// Jaro score above which the common-prefix boost is applied.
const BOOST_THRESHOLD: f64 = 0.7;

fn jaro_chars(a: &[char], b: &[char]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);
    let mut a_matched = vec![false; a.len()];
    let mut b_matched = vec![false; b.len()];
    let mut matches = 0usize;
    for (i, ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        for j in lo..hi {
            if !b_matched[j] && b[j] == *ca {
                a_matched[i] = true;
                b_matched[j] = true;
                matches += 1;
                break;
            }
        }
    }
    if matches == 0 {
        return 0.0;
    }
    let a_seq = a.iter().zip(&a_matched).filter(|(_, m)| **m).map(|(c, _)| c);
    let b_seq = b.iter().zip(&b_matched).filter(|(_, m)| **m).map(|(c, _)| c);
    let half_transpositions = a_seq.zip(b_seq).filter(|(x, y)| x != y).count();
    let m = matches as f64;
    let t = (half_transpositions / 2) as f64;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

/// Standard Jaro–Winkler similarity over Unicode scalar values.
pub fn jaro_winkler(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let sim = jaro_chars(&a, &b);
    if sim <= BOOST_THRESHOLD {
        return sim;
    }
    let prefix = a.iter().zip(&b).take(MAX_PREFIX).take_while(|(x, y)| x == y).count();
    sim + PREFIX_SCALE * prefix as f64 * (1.0 - sim)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightSpan {
    /// Character offsets into the highlighted text, end exclusive.
    pub start: usize,
    pub end: usize,
    pub matched_claim_word: String,
    pub similarity: f64,
}

/// Paragraph words of at least `min_word_len` characters whose
/// case-insensitive similarity to some equally long claim word exceeds
/// `threshold`. Each span reports its best-matching claim word (earliest in
/// the claim on ties).
pub fn highlight(claim: &str, paragraph: &str, threshold: f64, min_word_len: usize) -> Vec<HighlightSpan> {
    let mut claim_words: Vec<(&str, String)> = Vec::new();
    for w in word_spans(claim) {
        if w.end - w.start < min_word_len {
            continue;
        }
        let lower = w.word.to_lowercase();
        if !claim_words.iter().any(|(_, l)| *l == lower) {
            claim_words.push((w.word, lower));
        }
    }
    if claim_words.is_empty() {
        return Vec::new();
    }
    word_spans(paragraph)
        .into_iter()
        .filter(|w| w.end - w.start >= min_word_len)
        .filter_map(|w| {
            let lower = w.word.to_lowercase();
            let mut best: Option<(&str, f64)> = None;
            for (orig, cw) in &claim_words {
                let s = jaro_winkler(cw, &lower);
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((orig, s));
                }
            }
            let (word, similarity) = best?;
            (similarity > threshold).then(|| HighlightSpan {
                start: w.start,
                end: w.end,
                matched_claim_word: word.to_string(),
                similarity,
            })
        })
        .collect()
}

pub fn highlight_default(claim: &str, paragraph: &str) -> Vec<HighlightSpan> {
    highlight(claim, paragraph, DEFAULT_THRESHOLD, DEFAULT_MIN_WORD_LEN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_empty() {
        assert_eq!(jaro_winkler("prague", "prague"), 1.0);
        assert_eq!(jaro_winkler("", "x"), 0.0);
        assert_eq!(jaro_winkler("x", ""), 0.0);
        assert_eq!(jaro_winkler("", ""), 1.0);
        assert_eq!(jaro_winkler("abc", "xyz"), 0.0);
    }

    #[test]
    fn agrees_with_reference() {
        for (a, b) in [("martha", "marhta"), ("dixon", "dicksonx"), ("jellyfish", "smellyfish"), ("lodi", "lodí")] {
            assert!((jaro_winkler(a, b) - strsim::jaro_winkler(a, b)).abs() < 1e-4, "{a} {b}");
            assert_eq!(jaro_winkler(a, b), jaro_winkler(b, a));
        }
    }

    #[test]
    fn exact_word_every_occurrence() {
        let p = "USS Indianapolis sank. The Indianapolis wreck.";
        let spans = highlight_default("The USS Indianapolis", p);
        let words: Vec<&str> = spans.iter().map(|s| &p[s.start..s.end]).collect();
        assert_eq!(words, ["Indianapolis", "Indianapolis"]);
        assert!(spans.iter().all(|s| s.similarity == 1.0 && s.matched_claim_word == "Indianapolis"));
    }

    #[test]
    fn short_words_never_highlighted() {
        assert!(highlight_default("USS the cat", "USS the cat").is_empty());
    }

    #[test]
    fn inflection_follows_oracle() {
        let claim = "Vrak lodi byl nalezen";
        let para = "Vrak lodí byl nalezen";
        let spans = highlight_default(claim, para);
        let chars: Vec<char> = para.chars().collect();
        let hit = spans.iter().any(|s| chars[s.start..s.end].iter().collect::<String>() == "lodí");
        assert_eq!(hit, strsim::jaro_winkler("lodi", "lodí") > DEFAULT_THRESHOLD);
    }

    #[test]
    fn case_insensitive() {
        let spans = highlight_default("PRAGUE castle", "in prague today");
        assert_eq!(spans.len(), 1);
        assert_eq!((spans[0].start, spans[0].end), (3, 9));
        assert_eq!(spans[0].matched_claim_word, "PRAGUE");
    }
}
