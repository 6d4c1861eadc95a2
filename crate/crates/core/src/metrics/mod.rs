//! Confusion-matrix metrics, ROC analysis and paired fold-level tests.
//!
//! Class 1 is the positive class throughout. Undefined ratios (zero
//! denominators) evaluate to 0 and raise the matching degenerate flag.

mod roc;
mod wilcoxon;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use roc::{optimal_threshold, roc_auc, roc_curve, RocCurve, RocPoint, ThresholdCriterion};
pub use wilcoxon::{paired_test, PairedTestResult, WilcoxonMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(Error::ShapeMismatch {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => c.tp += 1,
            (0, 1) => c.fp += 1,
            (0, 0) => c.tn += 1,
            (1, 0) => c.fn_ += 1,
            _ => return Err(Error::Data(format!("labels must be 0/1, got ({t}, {p})"))),
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DegenerateFlags {
    pub accuracy: bool,
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
    pub mcc: bool,
    pub roc_auc: bool,
}

/// The six evaluation metrics, each in [0, 1] (MCC in [-1, 1]).
/// `roc_auc` is `None` when it was not computed or is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mcc: f64,
    pub roc_auc: Option<f64>,
    pub degenerate: DegenerateFlags,
}

/// Metric names in reporting order.
pub const METRIC_NAMES: [&str; 6] = ["accuracy", "f1", "precision", "recall", "roc_auc", "mcc"];

impl MetricReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "accuracy" => Some(self.accuracy),
            "precision" => Some(self.precision),
            "recall" => Some(self.recall),
            "f1" => Some(self.f1),
            "mcc" => Some(self.mcc),
            "roc_auc" => self.roc_auc,
            _ => None,
        }
    }
}

fn ratio(num: f64, den: f64) -> (f64, bool) {
    if den > 0.0 {
        (num / den, false)
    } else {
        (0.0, true)
    }
}

/// Accuracy, precision, recall, F1 and MCC from confusion counts.
pub fn metric_suite(c: &ConfusionCounts) -> MetricReport {
    let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    let (accuracy, d_acc) = ratio(tp + tn, tp + fp + tn + fn_);
    let (precision, d_prec) = ratio(tp, tp + fp);
    let (recall, d_rec) = ratio(tp, tp + fn_);
    let (f1, d_f1) = ratio(tp, tp + 0.5 * (fp + fn_));
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let (mcc, d_mcc) = ratio(tp * tn - fp * fn_, den.sqrt());
    MetricReport {
        accuracy,
        precision,
        recall,
        f1,
        mcc,
        roc_auc: None,
        degenerate: DegenerateFlags {
            accuracy: d_acc,
            precision: d_prec,
            recall: d_rec,
            f1: d_f1,
            mcc: d_mcc,
            roc_auc: false,
        },
    }
}

/// Threshold-based metrics from `y_pred` plus rank AUC from `scores`.
/// A single-class `y_true` leaves AUC undefined and flagged.
pub fn evaluate(y_true: &[u8], scores: &[f64], y_pred: &[u8]) -> Result<(ConfusionCounts, MetricReport)> {
    let c = confusion(y_true, y_pred)?;
    let mut r = metric_suite(&c);
    match roc_auc(y_true, scores) {
        Ok(auc) => r.roc_auc = Some(auc),
        Err(Error::SingleClass) => r.degenerate.roc_auc = true,
        Err(e) => return Err(e),
    }
    Ok((c, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect() {
        let c = confusion(&[1, 0], &[1, 0]).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, fp: 0, tn: 1, fn_: 0 });
        let r = metric_suite(&c);
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1, r.mcc), (1.0, 1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn flipped_predictions_swap_counts() {
        let t = [1, 1, 0, 0, 1, 0, 0];
        let p = [1, 0, 0, 1, 1, 0, 0];
        let flipped: Vec<u8> = p.iter().map(|x| 1 - x).collect();
        let a = confusion(&t, &p).unwrap();
        let b = confusion(&t, &flipped).unwrap();
        assert_eq!((a.tp, a.tn, a.fp, a.fn_), (b.fn_, b.fp, b.tn, b.tp));
    }

    #[test]
    fn hand_evaluated_case() {
        let c = ConfusionCounts { tp: 50, fp: 10, tn: 120, fn_: 20 };
        let r = metric_suite(&c);
        assert!((r.accuracy - 0.85).abs() < 1e-12);
        assert!((r.precision - 0.83333).abs() < 1e-5);
        assert!((r.recall - 0.71429).abs() < 1e-5);
        assert!((r.f1 - 0.76923).abs() < 1e-5);
        assert!((r.mcc - 0.66339).abs() < 1e-5);
    }

    #[test]
    fn all_negative_predictions() {
        let c = confusion(&[1, 0, 1, 0], &[0, 0, 0, 0]).unwrap();
        let r = metric_suite(&c);
        assert_eq!(r.recall, 0.0);
        assert!(!r.degenerate.recall);
        assert_eq!(r.precision, 0.0);
        assert!(r.degenerate.precision);
        assert_eq!(r.mcc, 0.0);
        assert!(r.degenerate.mcc);
    }

    #[test]
    fn mcc_symmetric_f1_not() {
        let c = ConfusionCounts { tp: 7, fp: 3, tn: 40, fn_: 5 };
        let s = ConfusionCounts { tp: 40, fp: 5, tn: 7, fn_: 3 };
        assert!((metric_suite(&c).mcc - metric_suite(&s).mcc).abs() < 1e-15);
        assert!((metric_suite(&c).f1 - metric_suite(&s).f1).abs() > 0.1);
    }

    #[test]
    fn errors() {
        assert!(confusion(&[1], &[1, 0]).is_err());
        assert!(confusion(&[2], &[1]).is_err());
    }

    #[test]
    fn single_class_truth_flags_auc() {
        let (_, r) = evaluate(&[1, 1], &[0.2, 0.9], &[0, 1]).unwrap();
        assert!(r.roc_auc.is_none() && r.degenerate.roc_auc);
    }
}
