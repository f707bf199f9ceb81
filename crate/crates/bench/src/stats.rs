//! Order statistics and moments over small samples.

use serde::{Deserialize, Serialize};

/// Sorts a copy, so results do not depend on input order.
fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Percentile by linear interpolation between order statistics: rank
/// `p * (n - 1)` over the sorted values, `p` in `[0, 1]`.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    percentile_sorted(&sorted(values), p)
}

fn percentile_sorted(v: &[f64], p: f64) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let h = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    Some(sorted(values).iter().sum::<f64>() / values.len() as f64)
}

/// Population variance (divides by the count).
pub fn variance(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    let sq: Vec<f64> = values.iter().map(|x| (x - m) * (x - m)).collect();
    mean(&sq)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub p10: f64,
    pub median: f64,
    pub p90: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        let v = sorted(values);
        Some(Self {
            count: v.len(),
            mean: mean(&v)?,
            p10: percentile_sorted(&v, 0.1)?,
            median: percentile_sorted(&v, 0.5)?,
            p90: percentile_sorted(&v, 0.9)?,
        })
    }
}
