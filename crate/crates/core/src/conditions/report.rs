use serde::{Deserialize, Serialize};

use crate::error::EvalError;

/// Residual statistics of one condition over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub id: String,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
    pub skipped: usize,
    pub tol: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip)]
    pub per_sample: Vec<f64>,
}

/// Fraction of samples that may fail to evaluate before a report fails.
pub const MAX_SKIP_FRACTION: f64 = 0.1;

impl ConditionReport {
    /// Summarize per-sample residuals. Evaluation failures are counted as
    /// skipped; the report fails if more than 10% of samples were skipped
    /// or none could be evaluated.
    pub fn from_samples(
        id: impl Into<String>,
        tol: f64,
        samples: impl IntoIterator<Item = Result<f64, EvalError>>,
    ) -> ConditionReport {
        let mut per_sample = Vec::new();
        let mut skipped = 0;
        let mut first_error = None;
        for s in samples {
            match s {
                Ok(r) if r.is_finite() => per_sample.push(r.abs()),
                Ok(r) => {
                    skipped += 1;
                    first_error.get_or_insert_with(|| format!("non-finite residual {r}"));
                }
                Err(e) => {
                    skipped += 1;
                    first_error.get_or_insert_with(|| e.to_string());
                }
            }
        }
        let count = per_sample.len();
        let max = per_sample.iter().fold(0.0f64, |m, v| m.max(*v));
        let mean = if count == 0 {
            0.0
        } else {
            per_sample.iter().sum::<f64>() / count as f64
        };
        let total = count + skipped;
        let too_many_skips = skipped as f64 > MAX_SKIP_FRACTION * total as f64;
        let pass = count > 0 && max <= tol && !too_many_skips;
        let note = first_error.map(|e| format!("{skipped} of {total} samples skipped; first: {e}"));
        ConditionReport {
            id: id.into(),
            max,
            mean,
            count,
            skipped,
            tol,
            pass,
            note,
            per_sample,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> ConditionReport {
        let note = note.into();
        self.note = Some(match self.note.take() {
            Some(prev) => format!("{prev}; {note}"),
            None => note,
        });
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistics_and_pass_flag() {
        let r = ConditionReport::from_samples("X", 0.5, vec![Ok(0.1), Ok(-0.3), Ok(0.2)]);
        assert_eq!(r.max, 0.3);
        assert!((r.mean - 0.2).abs() < 1e-15);
        assert!(r.pass);
        let r = ConditionReport::from_samples("X", 0.25, vec![Ok(0.1), Ok(-0.3)]);
        assert!(!r.pass);
    }

    #[test]
    fn skips_are_capped() {
        let err = || Err(EvalError::new("log(y1)", "outside domain"));
        let mut s: Vec<_> = (0..9).map(|_| Ok(0.0)).collect();
        s.push(err());
        let r = ConditionReport::from_samples("X", 1.0, s.clone());
        assert!(r.pass);
        assert_eq!(r.skipped, 1);
        s.push(err());
        let r = ConditionReport::from_samples("X", 1.0, s);
        assert!(!r.pass);
        assert!(r.note.unwrap().contains("log(y1)"));
        assert!(!ConditionReport::from_samples("X", 1.0, vec![]).pass);
    }

    #[test]
    fn json_shape() {
        let r = ConditionReport::from_samples("D1", 1e-8, vec![Ok(0.0)]);
        let v = serde_json::to_value(&r).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, ["count", "id", "max", "mean", "pass", "skipped", "tol"]);
    }
}
