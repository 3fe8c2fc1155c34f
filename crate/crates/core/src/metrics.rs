//! Evaluation metrics and repeat summaries.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    if a == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Fraction of exact matches.
pub fn accuracy<T: PartialEq>(pred: &[T], truth: &[T]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

pub fn mse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sse / pred.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatSummary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n_repeats: usize,
    pub raw: Vec<f64>,
}

pub fn summarize_repeats(values: &[f64]) -> Result<RepeatSummary> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(RepeatSummary {
        mean,
        std: var.sqrt(),
        n_repeats: values.len(),
        raw: values.to_vec(),
    })
}
