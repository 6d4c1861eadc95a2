use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Predict positive when score >= threshold. The (0, 0) endpoint uses +inf.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }
}

fn check(y_true: &[u8], scores: &[f64]) -> Result<(usize, usize)> {
    if y_true.len() != scores.len() {
        return Err(Error::ShapeMismatch {
            expected: y_true.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Data("scores must be finite".into()));
    }
    let pos = y_true.iter().filter(|&&y| y == 1).count();
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// Rank (Mann-Whitney) AUC; tied scores share their average rank.
pub fn roc_auc(y_true: &[u8], scores: &[f64]) -> Result<f64> {
    let (pos, neg) = check(y_true, scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1
        let avg = (i + j + 2) as f64 / 2.0;
        for &o in &order[i..=j] {
            if y_true[o] == 1 {
                rank_sum_pos += avg;
            }
        }
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// One point per distinct score, sweeping thresholds from high to low,
/// starting at (0, 0) and ending at (1, 1).
pub fn roc_curve(y_true: &[u8], scores: &[f64]) -> Result<RocCurve> {
    let (pos, neg) = check(y_true, scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if y_true[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(RocCurve { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "criterion", content = "value")]
pub enum ThresholdCriterion {
    /// Maximize tpr - fpr; ties go to the lower threshold.
    Youden,
    /// Highest threshold whose tpr reaches the target.
    TargetTpr(f64),
}

pub fn optimal_threshold(curve: &RocCurve, criterion: ThresholdCriterion) -> Result<f64> {
    let finite: Vec<&RocPoint> = curve.points.iter().filter(|p| p.threshold.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::Data("roc curve has no finite thresholds".into()));
    }
    match criterion {
        ThresholdCriterion::Youden => {
            // points are ordered by descending threshold, so a later equal
            // J means a lower threshold
            let mut best = finite[0];
            for p in &finite[1..] {
                if p.tpr - p.fpr >= best.tpr - best.fpr {
                    best = p;
                }
            }
            Ok(best.threshold)
        }
        ThresholdCriterion::TargetTpr(v) => finite
            .iter()
            .find(|p| p.tpr >= v)
            .map(|p| p.threshold)
            .ok_or_else(|| Error::Data(format!("target tpr {v} is unreachable"))),
    }
}
