use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Below this many non-zero differences the exact null distribution is used.
const EXACT_LIMIT: usize = 20;
const MIN_PAIRS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
    /// Every difference was zero; p is set to 1.
    AllZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTestResult {
    /// min(W+, W-)
    pub statistic: f64,
    pub p_value: f64,
    pub n_pairs: usize,
    pub n_nonzero: usize,
    pub test_name: String,
    pub method: WilcoxonMethod,
}

/// Two-sided Wilcoxon signed-rank test on `b - a`, zero differences dropped.
pub fn paired_test(a: &[f64], b: &[f64]) -> Result<PairedTestResult> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < MIN_PAIRS {
        return Err(Error::InsufficientRows(format!(
            "paired test needs at least {MIN_PAIRS} pairs, got {}",
            a.len()
        )));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| y - x)
        .filter(|d| d.abs() > 1e-12)
        .collect();
    let n = diffs.len();
    let test_name = "wilcoxon-signed-rank".to_string();
    if n == 0 {
        return Ok(PairedTestResult {
            statistic: 0.0,
            p_value: 1.0,
            n_pairs: a.len(),
            n_nonzero: 0,
            test_name,
            method: WilcoxonMethod::AllZero,
        });
    }

    // Average ranks of |d|, doubled so they stay integral under ties.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut rank2 = vec![0u64; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        for &o in &order[i..=j] {
            rank2[o] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    let w_plus2: u64 = (0..n).filter(|&k| diffs[k] > 0.0).map(|k| rank2[k]).sum();
    let total2: u64 = rank2.iter().sum();
    let w_minus2 = total2 - w_plus2;
    let statistic = w_plus2.min(w_minus2) as f64 / 2.0;

    let (p_value, method) = if n < EXACT_LIMIT {
        (exact_p(&rank2, w_plus2.min(w_minus2)), WilcoxonMethod::Exact)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        let z = (w_plus2 as f64 / 2.0 - mean) / var.sqrt();
        let normal = Normal::standard();
        (2.0 * normal.cdf(-z.abs()), WilcoxonMethod::Normal)
    };
    Ok(PairedTestResult {
        statistic,
        p_value: p_value.clamp(0.0, 1.0),
        n_pairs: a.len(),
        n_nonzero: n,
        test_name,
        method,
    })
}

/// 2·P(T <= observed) under random signs, T the (doubled) positive rank sum.
fn exact_p(rank2: &[u64], observed: u64) -> f64 {
    let total: u64 = rank2.iter().sum();
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in rank2 {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(rank2.len() as i32);
    let tail: f64 = counts[..=observed as usize].iter().sum();
    (2.0 * tail / all).min(1.0)
}
