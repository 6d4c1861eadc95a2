use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{class_counts, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::{mix, rng_from};

/// Repeated stratified k-fold assignment.
///
/// `assignments[r][i]` is the validation fold of row `i` in repeat `r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub assignments: Vec<Vec<usize>>,
}

impl SplitPlan {
    /// (training rows, validation rows), each ascending.
    pub fn split(&self, repeat: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut valid = Vec::new();
        for (i, &f) in self.assignments[repeat].iter().enumerate() {
            if f == fold {
                valid.push(i);
            } else {
                train.push(i);
            }
        }
        (train, valid)
    }

    pub fn n_rows(&self) -> usize {
        self.assignments.first().map_or(0, Vec::len)
    }

    /// All (repeat, fold) coordinates in canonical order.
    pub fn coordinates(&self) -> Vec<(usize, usize)> {
        (0..self.repeats)
            .flat_map(|r| (0..self.k).map(move |f| (r, f)))
            .collect()
    }
}

pub fn make_repeated_stratified_folds(
    ds: &LabeledDataset,
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<SplitPlan> {
    stratified_folds_for_labels(&ds.labels, k, repeats, seed)
}

/// Each repeat `r` shuffles the two classes with the sub-seed
/// `seed ^ splitmix64(r)` and deals positives round-robin over the folds,
/// then continues dealing negatives from where the positives stopped so fold
/// sizes stay within one of each other.
pub fn stratified_folds_for_labels(
    labels: &[u8],
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<SplitPlan> {
    if k < 2 {
        return Err(Error::Config(format!("fold count must be at least 2, got {k}")));
    }
    if repeats == 0 {
        return Err(Error::Config("repeat count must be at least 1".into()));
    }
    let (n0, n1) = class_counts(labels);
    if n0 < k || n1 < k {
        return Err(Error::InsufficientRows(format!(
            "each class needs at least {k} rows for {k}-fold stratification (have {n0} negatives, {n1} positives)"
        )));
    }
    let assignments = (0..repeats)
        .map(|r| {
            let mut rng = rng_from(mix(seed, r as u64));
            let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
            let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
            pos.shuffle(&mut rng);
            neg.shuffle(&mut rng);
            let mut fold_of = vec![0; labels.len()];
            for (j, &i) in pos.iter().chain(&neg).enumerate() {
                fold_of[i] = j % k;
            }
            fold_of
        })
        .collect();
    Ok(SplitPlan {
        k,
        repeats,
        seed,
        assignments,
    })
}
