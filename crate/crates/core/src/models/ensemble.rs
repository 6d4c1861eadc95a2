use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::sigmoid;
use super::tree::{grow, Criterion, GrowConfig, Tree};
use crate::dataset::class_counts;
use crate::matrix::Matrix;
use crate::rng::{mix, rng_from};

/// Sample `n` row indices with replacement.
pub fn bootstrap_indices<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.into_iter().map(|x| x / total).collect()
    } else {
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    /// Mean decrease in Gini impurity, normalized to sum to 1.
    pub importance: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub class_weight_positive: f64,
}

impl Forest {
    pub fn fit(x: &Matrix, y: &[u8], params: &ForestParams, seed: u64) -> Forest {
        let n = x.n_rows();
        let p = x.n_cols();
        let cfg = GrowConfig {
            criterion: Criterion::Gini,
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
            max_features: Some(((p as f64).sqrt() as usize).max(1)),
        };
        let grown: Vec<(Tree, Vec<f64>)> = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_from(mix(seed, t as u64));
                let rows = bootstrap_indices(n, &mut rng);
                let stats: Vec<[f64; 2]> = rows
                    .iter()
                    .map(|&i| {
                        let w = if y[i] == 1 { params.class_weight_positive } else { 1.0 };
                        [w, w * y[i] as f64]
                    })
                    .collect();
                let (tree, imp) = grow(x, &rows, &stats, &cfg, &mut rng);
                (tree, normalized(imp))
            })
            .collect();
        let mut importance = vec![0.0; p];
        for (_, imp) in &grown {
            for (a, b) in importance.iter_mut().zip(imp) {
                *a += b;
            }
        }
        Forest {
            trees: grown.into_iter().map(|(t, _)| t).collect(),
            importance: normalized(importance),
        }
    }

    /// Mean leaf positive fraction.
    pub fn score_row(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>() / self.trees.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosted {
    pub base_score: f64,
    pub shrinkage: f64,
    pub trees: Vec<Tree>,
    /// Total split gain per feature, normalized to sum to 1.
    pub importance: Vec<f64>,
    pub class_weight_positive: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct BoostParams {
    pub n_rounds: usize,
    pub shrinkage: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub l2: f64,
    /// `None` → n_negative / n_positive of the training labels.
    pub class_weight_positive: Option<f64>,
}

impl Boosted {
    /// Second-order logistic boosting: each round fits a depth-limited tree
    /// to (g, h) = w·(p − y), w·p(1 − p), with positives weighted by
    /// `class_weight_positive`.
    pub fn fit(x: &Matrix, y: &[u8], params: &BoostParams, seed: u64) -> Boosted {
        let (n_neg, n_pos) = class_counts(y);
        let w_pos = params
            .class_weight_positive
            .unwrap_or(n_neg as f64 / n_pos.max(1) as f64);
        let weights: Vec<f64> = y.iter().map(|&v| if v == 1 { w_pos } else { 1.0 }).collect();
        let pos_mass = n_pos as f64 * w_pos;
        let prior = (pos_mass / (pos_mass + n_neg as f64)).clamp(1e-6, 1.0 - 1e-6);
        let base_score = (prior / (1.0 - prior)).ln();
        let cfg = GrowConfig {
            criterion: Criterion::Newton { lambda: params.l2 },
            max_depth: Some(params.max_depth),
            min_samples_leaf: params.min_samples_leaf,
            max_features: None,
        };
        let rows: Vec<usize> = (0..x.n_rows()).collect();
        let mut f = vec![base_score; x.n_rows()];
        let mut trees = Vec::with_capacity(params.n_rounds);
        let mut importance = vec![0.0; x.n_cols()];
        let mut rng = rng_from(seed);
        let mut stats = vec![[0.0, 0.0]; x.n_rows()];
        for _ in 0..params.n_rounds {
            for i in 0..x.n_rows() {
                let p = sigmoid(f[i]);
                stats[i] = [weights[i] * (p - y[i] as f64), weights[i] * p * (1.0 - p)];
            }
            let (tree, imp) = grow(x, &rows, &stats, &cfg, &mut rng);
            for (a, b) in importance.iter_mut().zip(&imp) {
                *a += b;
            }
            for (i, fi) in f.iter_mut().enumerate() {
                *fi += params.shrinkage * tree.predict_row(x.row(i));
            }
            trees.push(tree);
        }
        Boosted {
            base_score,
            shrinkage: params.shrinkage,
            trees,
            importance: normalized(importance),
            class_weight_positive: w_pos,
        }
    }

    pub fn raw_row(&self, x: &[f64]) -> f64 {
        self.base_score
            + self.shrinkage * self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>()
    }

    pub fn score_row(&self, x: &[f64]) -> f64 {
        sigmoid(self.raw_row(x))
    }
}

/// All minority rows plus an equal-size random draw (without replacement)
/// from the majority class, ascending.
pub fn balanced_subset<R: Rng>(y: &[u8], rng: &mut R) -> Vec<usize> {
    let (n_neg, n_pos) = class_counts(y);
    let minority: u8 = if n_pos <= n_neg { 1 } else { 0 };
    let min_rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == minority).collect();
    let maj_rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] != minority).collect();
    let mut out: Vec<usize> = sample(rng, maj_rows.len(), min_rows.len())
        .into_iter()
        .map(|j| maj_rows[j])
        .chain(min_rows.iter().copied())
        .collect();
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EasyEnsemble {
    pub members: Vec<Boosted>,
    /// Row count of each balanced training subset.
    pub subset_sizes: Vec<usize>,
    pub importance: Vec<f64>,
}

impl EasyEnsemble {
    pub fn fit(x: &Matrix, y: &[u8], n_subsets: usize, base: &BoostParams, seed: u64) -> EasyEnsemble {
        let fitted: Vec<(Boosted, usize)> = (0..n_subsets)
            .into_par_iter()
            .map(|s| {
                let sub_seed = mix(seed, s as u64);
                let rows = balanced_subset(y, &mut rng_from(sub_seed));
                let xs = x.select_rows(&rows);
                let ys: Vec<u8> = rows.iter().map(|&i| y[i]).collect();
                let params = BoostParams {
                    class_weight_positive: Some(1.0),
                    ..*base
                };
                (Boosted::fit(&xs, &ys, &params, sub_seed), rows.len())
            })
            .collect();
        let mut importance = vec![0.0; x.n_cols()];
        for (m, _) in &fitted {
            for (a, b) in importance.iter_mut().zip(&m.importance) {
                *a += b;
            }
        }
        let (members, subset_sizes) = fitted.into_iter().unzip();
        EasyEnsemble {
            members,
            subset_sizes,
            importance: normalized(importance),
        }
    }

    pub fn score_row(&self, x: &[f64]) -> f64 {
        self.members.iter().map(|m| m.score_row(x)).sum::<f64>() / self.members.len() as f64
    }
}
