use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Outcome of a sampled verification.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CheckReport {
    pub check: String,
    pub passed: bool,
    pub tolerance: f64,
    pub max_residual: f64,
    pub worst_point: Option<Vec<f64>>,
    pub samples: usize,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, tolerance: f64, scan: SampleScan) -> CheckReport {
        CheckReport {
            check: check.into(),
            passed: scan.max <= tolerance,
            tolerance,
            max_residual: scan.max,
            worst_point: scan.worst_point,
            samples: scan.count,
            values: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_value(mut self, key: impl Into<String>, value: f64) -> Self {
        self.values.insert(key.into(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// Maximum of a residual over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleScan {
    pub max: f64,
    pub worst_point: Option<Vec<f64>>,
    pub count: usize,
}

impl SampleScan {
    pub fn empty() -> Self {
        SampleScan {
            max: 0.0,
            worst_point: None,
            count: 0,
        }
    }

    pub fn merge(self, other: SampleScan) -> SampleScan {
        let count = self.count + other.count;
        if other.max > self.max || (self.worst_point.is_none() && other.worst_point.is_some()) {
            SampleScan { count, ..other }
        } else {
            SampleScan { count, ..self }
        }
    }
}

/// Evaluates `residual` at every sample (in parallel) and returns the
/// maximum. The first sample attaining the maximum wins, so the result does
/// not depend on thread scheduling. A NaN residual counts as +∞.
pub fn scan_samples<F>(samples: &[Vec<f64>], residual: F) -> Result<SampleScan>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let values: Vec<f64> = samples
        .par_iter()
        .map(|m| residual(m).map(|r| if r.is_nan() { f64::INFINITY } else { r }))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    Ok(SampleScan {
        max: values[best],
        worst_point: Some(samples[best].clone()),
        count: samples.len(),
    })
}
