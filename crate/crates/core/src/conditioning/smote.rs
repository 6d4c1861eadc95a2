use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{knn_within, Matrix};
use crate::rng::{mix, rng_from};

#[derive(Debug, Clone, PartialEq)]
pub struct SmoteOutput {
    pub rows: Matrix,
    /// (base row, neighbor row, interpolation weight) per synthetic row,
    /// indices into the minority matrix.
    pub provenance: Vec<(usize, usize, f64)>,
}

/// Generate `n_synthetic` rows by interpolating between minority rows and
/// one of their `k` nearest minority neighbors.
///
/// Base rows cycle round-robin through the minority set; draw `d` takes its
/// neighbor choice and weight from its own RNG stream `mix(seed, d)`.
pub fn smote_oversample(x_min: &Matrix, n_synthetic: usize, k: usize, seed: u64) -> Result<SmoteOutput> {
    let m = x_min.n_rows();
    if k == 0 || m <= k {
        return Err(Error::InsufficientRows(format!(
            "smote with k={k} needs more than {k} minority rows, got {m}"
        )));
    }
    let neighbors: Vec<Vec<usize>> = (0..m)
        .into_par_iter()
        .map(|i| knn_within(x_min, i, k).into_iter().map(|n| n.index).collect())
        .collect();
    let mut rows = Matrix::zeros(0, x_min.n_cols());
    let mut provenance = Vec::with_capacity(n_synthetic);
    for d in 0..n_synthetic {
        let base = d % m;
        let mut rng = rng_from(mix(seed, d as u64));
        let nn = neighbors[base][rng.random_range(0..k)];
        let mut u: f64 = rng.random();
        while u == 0.0 {
            u = rng.random();
        }
        let a = x_min.row(base);
        let b = x_min.row(nn);
        let synth: Vec<f64> = a.iter().zip(b).map(|(p, q)| p + u * (q - p)).collect();
        rows.push_row(&synth)?;
        provenance.push((base, nn, u));
    }
    Ok(SmoteOutput { rows, provenance })
}
