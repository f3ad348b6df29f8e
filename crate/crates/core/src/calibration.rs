//! Temperature scaling of NLI logits.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::gateway::{argmax, NliLogits};
use crate::jsonl::{self, JsonlError};
use crate::Label;

/// Search interval for T.
pub const T_MIN: f64 = 0.01;
pub const T_MAX: f64 = 100.0;
/// Width of the final bracket on ln T.
pub const LN_T_TOLERANCE: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum CalibrationError {
    #[error("calibration set is empty")]
    Empty,
    #[error("{logits} logit vectors but {labels} labels")]
    LengthMismatch { logits: usize, labels: usize },
    #[error("non-finite logits {0:?}")]
    NonFinite([f64; 3]),
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("record {0} has no label")]
    MissingLabel(String),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureScaler {
    #[serde(rename = "T")]
    t: f64,
    /// NaN for a scaler that was not fitted (serialized as null).
    #[serde(deserialize_with = "nan_if_null")]
    pub fit_nll: f64,
    pub fit_set_size: usize,
}

impl TemperatureScaler {
    pub fn new(t: f64) -> Result<Self, CalibrationError> {
        if !(t.is_finite() && t > 0.0) {
            return Err(CalibrationError::InvalidTemperature(t));
        }
        Ok(TemperatureScaler {
            t,
            fit_nll: f64::NAN,
            fit_set_size: 0,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.t
    }

    pub fn load(path: &Path) -> Result<Self, CalibrationError> {
        let text = std::fs::read_to_string(path).map_err(|source| JsonlError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let s: TemperatureScaler = serde_json::from_str(&text).map_err(JsonlError::from)?;
        TemperatureScaler::new(s.t)?;
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<(), CalibrationError> {
        let text = serde_json::to_string_pretty(self).map_err(JsonlError::from)? + "\n";
        std::fs::write(path, text).map_err(|source| JsonlError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(())
    }

    pub fn apply(&self, logits: NliLogits) -> Result<NliVerdict, CalibrationError> {
        if !logits.is_finite() {
            return Err(CalibrationError::NonFinite(logits.0));
        }
        Ok(NliVerdict {
            logits,
            probs: softmax(&logits.0, self.t),
            label: logits.argmax(),
            calibrated: true,
        })
    }
}

fn nan_if_null<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Per-evidence classification after (optional) calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliVerdict {
    pub logits: NliLogits,
    pub probs: [f64; 3],
    pub label: Label,
    pub calibrated: bool,
}

impl NliVerdict {
    /// Plain softmax, flagged as uncalibrated.
    pub fn uncalibrated(logits: NliLogits) -> Self {
        NliVerdict {
            logits,
            probs: softmax(&logits.0, 1.0),
            label: logits.argmax(),
            calibrated: false,
        }
    }

    pub fn prob(&self, label: Label) -> f64 {
        self.probs[label.index()]
    }

    /// Probability of the predicted label.
    pub fn confidence(&self) -> f64 {
        self.prob(self.label)
    }
}

pub fn softmax(z: &[f64; 3], t: f64) -> [f64; 3] {
    let scaled = z.map(|x| x / t);
    let m = scaled[argmax(&scaled)];
    let e = scaled.map(|x| (x - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|x| x / s)
}

fn log_softmax_at(z: &[f64; 3], t: f64, i: usize) -> f64 {
    let scaled = z.map(|x| x / t);
    let m = scaled[argmax(&scaled)];
    let lse = m + scaled.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    scaled[i] - lse
}

/// Mean cross-entropy of softmax(z / T) against the labels.
pub fn nll(logits: &[NliLogits], labels: &[Label], t: f64) -> f64 {
    let total: f64 = logits
        .iter()
        .zip(labels)
        .map(|(z, y)| -log_softmax_at(&z.0, t, y.index()))
        .sum();
    total / logits.len() as f64
}

/// Fits T by golden-section search on ln T over [`T_MIN`, `T_MAX`].
pub fn fit_temperature(logits: &[NliLogits], labels: &[Label]) -> Result<TemperatureScaler, CalibrationError> {
    if logits.len() != labels.len() {
        return Err(CalibrationError::LengthMismatch {
            logits: logits.len(),
            labels: labels.len(),
        });
    }
    if logits.is_empty() {
        return Err(CalibrationError::Empty);
    }
    if let Some(bad) = logits.iter().find(|z| !z.is_finite()) {
        return Err(CalibrationError::NonFinite(bad.0));
    }

    let f = |u: f64| nll(logits, labels, u.exp());
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (lo, hi) = (T_MIN.ln(), T_MAX.ln());
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > LN_T_TOLERANCE {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let u = (a + b) / 2.0;
    if u - lo < 10.0 * LN_T_TOLERANCE || hi - u < 10.0 * LN_T_TOLERANCE {
        tracing::warn!(t = u.exp(), "fitted temperature is at the search boundary");
    }
    let t = u.exp();
    Ok(TemperatureScaler {
        t,
        fit_nll: nll(logits, labels, t),
        fit_set_size: logits.len(),
    })
}

/// One line of a logits file: `{"id": .., "logits": [s, r, n], "label": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitRecord {
    #[serde(default)]
    pub id: String,
    pub logits: NliLogits,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

pub fn read_logits(path: &Path) -> Result<Vec<LogitRecord>, CalibrationError> {
    Ok(jsonl::read(path)?)
}

/// Fits on a labeled logits file.
pub fn fit_records(records: &[LogitRecord]) -> Result<TemperatureScaler, CalibrationError> {
    let mut logits = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for r in records {
        logits.push(r.logits);
        labels.push(r.label.ok_or_else(|| CalibrationError::MissingLabel(r.id.clone()))?);
    }
    fit_temperature(&logits, &labels)
}
