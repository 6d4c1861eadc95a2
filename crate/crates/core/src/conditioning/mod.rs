//! Training-partition conditioning: LOF outlier removal and SMOTETomek
//! resampling toward a target minority/majority ratio.

mod lof;
mod smote;
mod tomek;

use serde::{Deserialize, Serialize};

use crate::dataset::class_counts;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use lof::{lof_scores, remove_outliers, LofConfig, LofScores, OutlierRemoval, LRD_EPSILON};
pub use smote::{smote_oversample, SmoteOutput};
pub use tomek::find_tomek_links;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleOrder {
    #[default]
    TomekThenSmote,
    SmoteThenTomek,
}

/// Only the majority member of a Tomek link is removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TomekPolicy {
    #[default]
    RemoveMajority,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResamplePlan {
    /// Target n_minority / n_majority after resampling.
    pub target_mu: f64,
    #[serde(default = "default_smote_k")]
    pub smote_k: usize,
    #[serde(default)]
    pub tomek_policy: TomekPolicy,
    #[serde(default)]
    pub order: ResampleOrder,
    #[serde(default)]
    pub seed: u64,
}

fn default_smote_k() -> usize {
    5
}

impl ResamplePlan {
    pub fn new(target_mu: f64) -> Self {
        Self {
            target_mu,
            smote_k: default_smote_k(),
            tomek_policy: TomekPolicy::RemoveMajority,
            order: ResampleOrder::TomekThenSmote,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_mu > 0.0 && self.target_mu <= 1.0) {
            return Err(Error::Config(format!(
                "target ratio must lie in (0, 1], got {}",
                self.target_mu
            )));
        }
        if self.smote_k == 0 {
            return Err(Error::Config("smote_k must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleReport {
    /// [class 0, class 1] before resampling.
    pub before: [usize; 2],
    /// [class 0, class 1] after resampling.
    pub after: [usize; 2],
    pub minority_label: u8,
    pub n_tomek_removed: usize,
    /// Input rows removed as Tomek-link members, ascending.
    pub tomek_removed: Vec<usize>,
    pub n_synthetic: usize,
    pub ratio_already_met: bool,
    pub achieved_mu: f64,
}

/// Round-half-up of `mu * n_majority`.
pub fn minority_target(mu: f64, n_majority: usize) -> usize {
    (mu * n_majority as f64 + 0.5).floor() as usize
}

/// Remove the majority member of every Tomek link, then SMOTE the minority
/// up to `round(mu * n_majority)` (or the reverse order when the plan asks).
///
/// Output rows are the surviving input rows in their original order
/// followed by the synthetic minority rows.
pub fn smote_tomek(x: &Matrix, y: &[u8], plan: &ResamplePlan) -> Result<(Matrix, Vec<u8>, ResampleReport)> {
    plan.validate()?;
    if y.len() != x.n_rows() {
        return Err(Error::ShapeMismatch {
            expected: x.n_rows(),
            got: y.len(),
        });
    }
    let (n0, n1) = class_counts(y);
    if n0 == 0 || n1 == 0 {
        return Err(Error::SingleClass);
    }
    let minority: u8 = if n1 <= n0 { 1 } else { 0 };
    let count = |labels: &[u8], c: u8| labels.iter().filter(|&&l| l == c).count();
    let n_min = count(y, minority);
    let n_maj = y.len() - n_min;
    if n_min as f64 / n_maj as f64 >= plan.target_mu {
        return Ok((
            x.clone(),
            y.to_vec(),
            ResampleReport {
                before: [n0, n1],
                after: [n0, n1],
                minority_label: minority,
                n_tomek_removed: 0,
                tomek_removed: Vec::new(),
                n_synthetic: 0,
                ratio_already_met: true,
                achieved_mu: n_min as f64 / n_maj as f64,
            },
        ));
    }

    let tomek_majority = |x: &Matrix, y: &[u8]| -> Vec<usize> {
        let mut drop: Vec<usize> = find_tomek_links(x, y)
            .into_iter()
            .map(|(i, j)| if y[i] == minority { j } else { i })
            .collect();
        drop.sort_unstable();
        drop.dedup();
        drop
    };
    let keep_except = |n: usize, drop: &[usize]| -> Vec<usize> {
        (0..n).filter(|i| drop.binary_search(i).is_err()).collect()
    };
    let synthesize = |x: &Matrix, y: &[u8]| -> Result<(Matrix, Vec<u8>, usize)> {
        let n_min = count(y, minority);
        let target = minority_target(plan.target_mu, y.len() - n_min);
        let n_new = target.saturating_sub(n_min);
        if n_new == 0 {
            return Ok((x.clone(), y.to_vec(), 0));
        }
        let min_rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == minority).collect();
        let synth = smote_oversample(&x.select_rows(&min_rows), n_new, plan.smote_k, plan.seed)?;
        let mut out = x.clone();
        for r in synth.rows.rows() {
            out.push_row(r)?;
        }
        let mut labels = y.to_vec();
        labels.extend(std::iter::repeat_n(minority, n_new));
        Ok((out, labels, n_new))
    };

    let (xo, yo, removed, n_synth) = match plan.order {
        ResampleOrder::TomekThenSmote => {
            let drop = tomek_majority(x, y);
            let keep = keep_except(y.len(), &drop);
            let xk = x.select_rows(&keep);
            let yk: Vec<u8> = keep.iter().map(|&i| y[i]).collect();
            let (xs, ys, n_synth) = synthesize(&xk, &yk)?;
            (xs, ys, drop, n_synth)
        }
        ResampleOrder::SmoteThenTomek => {
            let (xs, ys, n_synth) = synthesize(x, y)?;
            // synthetic rows are minority, so every dropped row is an input row
            let drop = tomek_majority(&xs, &ys);
            let keep = keep_except(ys.len(), &drop);
            let xk = xs.select_rows(&keep);
            let yk: Vec<u8> = keep.iter().map(|&i| ys[i]).collect();
            (xk, yk, drop, n_synth)
        }
    };
    let (a0, a1) = class_counts(&yo);
    let after_min = count(&yo, minority);
    let report = ResampleReport {
        before: [n0, n1],
        after: [a0, a1],
        minority_label: minority,
        n_tomek_removed: removed.len(),
        tomek_removed: removed,
        n_synthetic: n_synth,
        ratio_already_met: false,
        achieved_mu: after_min as f64 / (yo.len() - after_min) as f64,
    };
    Ok((xo, yo, report))
}
