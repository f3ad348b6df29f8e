//! Pointwise V-information between a null model and an input-aware model.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::calibration::NliVerdict;
use crate::Label;

/// Floor applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PviError {
    #[error("probability {0} outside (0, 1]")]
    OutOfRange(f64),
    #[error("no records to analyze")]
    Empty,
    #[error("sample {0} has no {1} verdict")]
    MissingVerdict(String, &'static str),
    #[error("{0} verdict for unknown sample {1}")]
    UnknownSample(&'static str, String),
    #[error("duplicate sample id {0}")]
    DuplicateSample(String),
    #[error("{0} verdict for sample {1} is not calibrated")]
    Uncalibrated(&'static str, String),
}

/// −log2 p_null + log2 p_cond.
pub fn pvi(p_null: f64, p_cond: f64) -> Result<f64, PviError> {
    for p in [p_null, p_cond] {
        if !(p > 0.0 && p <= 1.0) {
            return Err(PviError::OutOfRange(p));
        }
    }
    Ok(-p_null.log2() + p_cond.log2())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PviRecord {
    pub sample_id: String,
    pub label: Label,
    pub p_null: f64,
    pub p_cond: f64,
    pub pvi: f64,
}

impl PviRecord {
    pub fn new(sample_id: impl Into<String>, label: Label, p_null: f64, p_cond: f64) -> Result<Self, PviError> {
        Ok(PviRecord {
            sample_id: sample_id.into(),
            label,
            p_null,
            p_cond,
            pvi: pvi(p_null, p_cond)?,
        })
    }
}

/// Mean PVI (`vui`) and negative-PVI rate (`npr`) over `n` records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PviStats {
    pub vui: f64,
    pub npr: f64,
    pub n: usize,
}

impl PviStats {
    fn of<'a>(pvis: impl Iterator<Item = &'a f64>) -> Option<Self> {
        let (mut sum, mut neg, mut n) = (0.0, 0usize, 0usize);
        for &v in pvis {
            sum += v;
            neg += usize::from(v < 0.0);
            n += 1;
        }
        (n > 0).then(|| PviStats {
            vui: sum / n as f64,
            npr: neg as f64 / n as f64,
            n,
        })
    }
}

/// Per-class rows (classes without records are omitted) plus the total row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PviReport {
    #[serde(flatten)]
    pub per_class: BTreeMap<Label, PviStats>,
    pub total: PviStats,
}

pub fn analyze(records: &[PviRecord]) -> Result<PviReport, PviError> {
    let total = PviStats::of(records.iter().map(|r| &r.pvi)).ok_or(PviError::Empty)?;
    let per_class = Label::ALL
        .into_iter()
        .filter_map(|l| {
            PviStats::of(records.iter().filter(|r| r.label == l).map(|r| &r.pvi)).map(|s| (l, s))
        })
        .collect();
    Ok(PviReport { per_class, total })
}

fn by_id<'a>(
    which: &'static str,
    verdicts: &'a [(String, NliVerdict)],
) -> Result<HashMap<&'a str, &'a NliVerdict>, PviError> {
    let mut map = HashMap::with_capacity(verdicts.len());
    for (id, v) in verdicts {
        if !v.calibrated {
            return Err(PviError::Uncalibrated(which, id.clone()));
        }
        if map.insert(id.as_str(), v).is_some() {
            return Err(PviError::DuplicateSample(id.clone()));
        }
    }
    Ok(map)
}

/// Pairs null and input-aware verdicts by sample id and extracts the
/// true-label probabilities, clamped to [`PROB_FLOOR`], 1.
pub fn build_records(
    samples: &[(String, Label)],
    null: &[(String, NliVerdict)],
    cond: &[(String, NliVerdict)],
) -> Result<Vec<PviRecord>, PviError> {
    let null_map = by_id("null", null)?;
    let cond_map = by_id("input-aware", cond)?;
    let mut ids = std::collections::HashSet::with_capacity(samples.len());
    for (id, _) in samples {
        if !ids.insert(id.as_str()) {
            return Err(PviError::DuplicateSample(id.clone()));
        }
    }
    for (which, map) in [("null", &null_map), ("input-aware", &cond_map)] {
        if let Some(extra) = map.keys().find(|k| !ids.contains(*k)) {
            return Err(PviError::UnknownSample(which, extra.to_string()));
        }
    }
    samples
        .iter()
        .map(|(id, label)| {
            let n = null_map.get(id.as_str()).ok_or_else(|| PviError::MissingVerdict(id.clone(), "null"))?;
            let c = cond_map
                .get(id.as_str())
                .ok_or_else(|| PviError::MissingVerdict(id.clone(), "input-aware"))?;
            let clamp = |p: f64| p.clamp(PROB_FLOOR, 1.0);
            PviRecord::new(id.clone(), *label, clamp(n.prob(*label)), clamp(c.prob(*label)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::TemperatureScaler;
    use crate::gateway::NliLogits;

    #[test]
    fn exact_powers_of_two() {
        assert_eq!(pvi(0.3, 0.3).unwrap(), 0.0);
        assert_eq!(pvi(0.25, 0.5).unwrap(), 1.0);
        assert_eq!(pvi(0.5, 0.25).unwrap(), -1.0);
        assert!(pvi(0.0, 0.5).is_err());
        assert!(pvi(0.5, 1.5).is_err());
        assert!(pvi(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn single_negative_record() {
        let r = analyze(&[PviRecord::new("a", Label::Nei, 0.5, 0.25).unwrap()]).unwrap();
        assert_eq!(r.total, PviStats { vui: -1.0, npr: 1.0, n: 1 });
        assert_eq!(r.per_class.len(), 1);
    }

    #[test]
    fn two_class_arithmetic() {
        let recs = [
            PviRecord::new("a", Label::Supports, 0.25, 0.5).unwrap(),
            PviRecord::new("b", Label::Supports, 0.25, 0.5).unwrap(),
            PviRecord::new("c", Label::Refutes, 0.5, 0.25).unwrap(),
            PviRecord::new("d", Label::Refutes, 0.25, 0.5).unwrap(),
        ];
        let r = analyze(&recs).unwrap();
        assert_eq!(r.per_class[&Label::Supports].vui, 1.0);
        assert_eq!(r.per_class[&Label::Refutes].vui, 0.0);
        assert_eq!(r.per_class[&Label::Refutes].npr, 0.5);
        assert_eq!(r.total.vui, 0.5);
        assert_eq!(r.total.npr, 0.25);
        let json = serde_json::to_value(&r).unwrap();
        assert!(json.get("SUPPORTS").is_some() && json.get("total").is_some());
        assert!(analyze(&[]).is_err());
    }

    fn verdict(probs: [f64; 3]) -> NliVerdict {
        let s = TemperatureScaler::new(1.0).unwrap();
        s.apply(NliLogits(probs.map(f64::ln))).unwrap()
    }

    #[test]
    fn three_sample_fixture() {
        let samples = vec![
            ("x".to_string(), Label::Supports),
            ("y".to_string(), Label::Refutes),
            ("z".to_string(), Label::Nei),
        ];
        let null = vec![
            ("z".to_string(), verdict([0.25, 0.25, 0.5])),
            ("x".to_string(), verdict([0.5, 0.25, 0.25])),
            ("y".to_string(), verdict([0.5, 0.25, 0.25])),
        ];
        let cond = vec![
            ("x".to_string(), verdict([0.5, 0.25, 0.25])),
            ("y".to_string(), verdict([0.25, 0.5, 0.25])),
            ("z".to_string(), verdict([0.5, 0.25, 0.25])),
        ];
        let recs = build_records(&samples, &null, &cond).unwrap();
        let got: Vec<f64> = recs.iter().map(|r| r.pvi).collect();
        for (g, want) in got.iter().zip([0.0, 1.0, -1.0]) {
            assert!((g - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_uncalibrated_and_misaligned() {
        let samples = vec![("x".to_string(), Label::Supports)];
        let ok = vec![("x".to_string(), verdict([0.5, 0.25, 0.25]))];
        let raw = vec![("x".to_string(), NliVerdict::uncalibrated(NliLogits([0.0; 3])))];
        assert!(matches!(build_records(&samples, &raw, &ok), Err(PviError::Uncalibrated(..))));
        let other = vec![("q".to_string(), verdict([0.5, 0.25, 0.25]))];
        assert!(build_records(&samples, &ok, &other).is_err());
        assert!(build_records(&samples, &ok, &[]).is_err());
    }

    #[test]
    fn saturated_probabilities_are_clamped() {
        let samples = vec![("x".to_string(), Label::Nei)];
        let s = TemperatureScaler::new(1.0).unwrap();
        let sat = vec![("x".to_string(), s.apply(NliLogits([0.0, 0.0, -2000.0])).unwrap())];
        let ok = vec![("x".to_string(), verdict([0.25, 0.25, 0.5]))];
        let r = &build_records(&samples, &sat, &ok).unwrap()[0];
        assert_eq!(r.p_null, PROB_FLOOR);
        assert!(r.pvi.is_finite());
    }
}
