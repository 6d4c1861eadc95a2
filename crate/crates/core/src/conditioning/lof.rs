use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{knn_within, Matrix};

/// Added to mean reachability distances so duplicate points keep a finite
/// local reachability density.
pub const LRD_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LofConfig {
    pub n_neighbors: usize,
    /// Rows scoring strictly above this are removed.
    #[serde(default = "default_threshold")]
    pub score_threshold: f64,
}

fn default_threshold() -> f64 {
    1.5
}

impl LofConfig {
    pub fn new(n_neighbors: usize) -> Self {
        Self {
            n_neighbors,
            score_threshold: default_threshold(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_neighbors == 0 {
            return Err(Error::Config("lof needs n_neighbors >= 1".into()));
        }
        if self.score_threshold.is_nan() || self.score_threshold <= 1.0 {
            return Err(Error::Config(format!(
                "lof score threshold must exceed 1, got {}",
                self.score_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LofScores {
    pub scores: Vec<f64>,
}

/// Local outlier factor of every row using exactly `n_neighbors` nearest
/// neighbors (distance ties broken by row index).
pub fn lof_scores(x: &Matrix, n_neighbors: usize) -> Result<LofScores> {
    let n = x.n_rows();
    if n_neighbors == 0 || n <= n_neighbors {
        return Err(Error::InsufficientRows(format!(
            "lof with {n_neighbors} neighbors needs more than {n_neighbors} rows, got {n}"
        )));
    }
    let neighbors: Vec<_> = (0..n)
        .into_par_iter()
        .map(|i| knn_within(x, i, n_neighbors))
        .collect();
    let k_distance: Vec<f64> = neighbors.iter().map(|nn| nn[n_neighbors - 1].distance).collect();
    let lrd: Vec<f64> = neighbors
        .iter()
        .map(|nn| {
            let reach: f64 = nn.iter().map(|o| o.distance.max(k_distance[o.index])).sum();
            1.0 / (reach / n_neighbors as f64 + LRD_EPSILON)
        })
        .collect();
    let scores = neighbors
        .iter()
        .enumerate()
        .map(|(i, nn)| nn.iter().map(|o| lrd[o.index]).sum::<f64>() / n_neighbors as f64 / lrd[i])
        .collect();
    Ok(LofScores { scores })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierRemoval {
    /// Rows kept, ascending.
    pub kept: Vec<usize>,
    /// Rows dropped, ascending.
    pub removed: Vec<usize>,
    pub scores: Vec<f64>,
}

/// Drop rows whose LOF exceeds the threshold. Both classes are screened;
/// emptying either class is an error.
pub fn remove_outliers(x: &Matrix, y: &[u8], cfg: &LofConfig) -> Result<OutlierRemoval> {
    cfg.validate()?;
    if y.len() != x.n_rows() {
        return Err(Error::ShapeMismatch {
            expected: x.n_rows(),
            got: y.len(),
        });
    }
    let scores = lof_scores(x, cfg.n_neighbors)?.scores;
    let (kept, removed): (Vec<usize>, Vec<usize>) =
        (0..x.n_rows()).partition(|&i| scores[i] <= cfg.score_threshold);
    for class in [0u8, 1] {
        let before = y.contains(&class);
        let after = kept.iter().any(|&i| y[i] == class);
        if before && !after {
            return Err(Error::Data(format!(
                "outlier removal at threshold {} would remove every class-{class} row",
                cfg.score_threshold
            )));
        }
    }
    Ok(OutlierRemoval {
        kept,
        removed,
        scores,
    })
}
