use rayon::prelude::*;

use crate::matrix::{knn_within, Matrix};

/// Cross-class mutual nearest-neighbor pairs `(i, j)` with `i < j`.
pub fn find_tomek_links(x: &Matrix, y: &[u8]) -> Vec<(usize, usize)> {
    if x.n_rows() < 2 {
        return Vec::new();
    }
    let nearest: Vec<usize> = (0..x.n_rows())
        .into_par_iter()
        .map(|i| knn_within(x, i, 1)[0].index)
        .collect();
    (0..x.n_rows())
        .filter_map(|i| {
            let j = nearest[i];
            (i < j && nearest[j] == i && y[i] != y[j]).then_some((i, j))
        })
        .collect()
}
