use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-utterance maximum posteriors split by label.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub positives: Vec<f32>,
    pub negatives: Vec<f32>,
}

impl ScoreSet {
    pub fn new(positives: Vec<f32>, negatives: Vec<f32>) -> Result<Self> {
        if let Some(bad) = positives.iter().chain(&negatives).find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::shape(format!("score {bad} outside [0, 1]")));
        }
        Ok(Self { positives, negatives })
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty() && self.negatives.is_empty()
    }
}

/// Operating point at a target miss rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub target_mr: f64,
    /// Fraction of positives scoring below the threshold.
    pub mr: f64,
    pub threshold: f32,
    pub fa_count: usize,
}

fn check_rate(mr: f64) -> Result<()> {
    if !(0.0..1.0).contains(&mr) {
        return Err(Error::config(format!("miss rate {mr} outside [0, 1)")));
    }
    Ok(())
}

/// Largest threshold that misses at most `mr` of the positives, and the
/// number of negatives at or above it.
///
/// A positive equal to the threshold counts as accepted. The admissible
/// miss count `m` is the largest integer with `m <= mr·P` in f64; the
/// threshold is then the `m`-th smallest positive.
pub fn fa_at_mr(scores: &ScoreSet, mr: f64) -> Result<OperatingPoint> {
    check_rate(mr)?;
    let p = scores.positives.len();
    if p == 0 {
        return Err(Error::UndefinedThreshold);
    }
    let mut sorted = scores.positives.clone();
    sorted.sort_by(f32::total_cmp);
    let budget = mr * p as f64;
    let allowed = (0..p).take_while(|&m| m as f64 <= budget).last().unwrap_or(0);
    let threshold = sorted[allowed];
    let missed = sorted.iter().filter(|&&s| s < threshold).count();
    Ok(OperatingPoint {
        target_mr: mr,
        mr: missed as f64 / p as f64,
        threshold,
        fa_count: scores.negatives.iter().filter(|&&s| s >= threshold).count(),
    })
}

/// Operating points at target miss rates `i / points` for `i` in
/// `0..points`. Thresholds rise and FA counts fall along the sweep.
pub fn det_sweep(scores: &ScoreSet, points: usize) -> Result<Vec<OperatingPoint>> {
    if points == 0 {
        return Err(Error::config("a sweep needs at least one point"));
    }
    (0..points).map(|i| fa_at_mr(scores, i as f64 / points as f64)).collect()
}
