//! Binary decision trees grown on additive two-component node statistics.
//!
//! Classification trees carry (weight, positive weight) per sample and split
//! on weighted Gini; boosting trees carry (gradient, hessian) and split on
//! the second-order logistic gain.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// `nodes[0]` is the root.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, at: usize) -> usize {
            match t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// Stats: (sample weight, weight of positive samples).
    Gini,
    /// Stats: (gradient, hessian); `lambda` is the leaf L2 penalty.
    Newton { lambda: f64 },
}

impl Criterion {
    /// Node loss; a split's gain is parent loss minus the children's.
    fn loss(self, s: [f64; 2]) -> f64 {
        match self {
            Criterion::Gini => {
                if s[0] <= 0.0 {
                    0.0
                } else {
                    2.0 * s[1] * (s[0] - s[1]) / s[0]
                }
            }
            Criterion::Newton { lambda } => {
                let d = s[1] + lambda;
                if d <= 0.0 {
                    0.0
                } else {
                    -s[0] * s[0] / d
                }
            }
        }
    }

    fn leaf_value(self, s: [f64; 2]) -> f64 {
        match self {
            Criterion::Gini => {
                if s[0] <= 0.0 {
                    0.0
                } else {
                    (s[1] / s[0]).clamp(0.0, 1.0)
                }
            }
            Criterion::Newton { lambda } => {
                let d = s[1] + lambda;
                if d <= 0.0 {
                    0.0
                } else {
                    -s[0] / d
                }
            }
        }
    }

    fn is_pure(self, s: [f64; 2]) -> bool {
        match self {
            Criterion::Gini => s[1] <= 0.0 || s[1] >= s[0],
            Criterion::Newton { .. } => false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GrowConfig {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` examines all.
    pub max_features: Option<usize>,
}

/// Minimum gain for a split to count as a strict improvement.
const MIN_GAIN: f64 = 1e-12;

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    /// Number of (sorted) samples going left.
    n_left: usize,
}

/// Grow a tree on `samples` (row indices, repeats allowed) with per-sample
/// statistics `stats[j]` for `samples[j]`. Returns the tree and the total
/// gain credited to each feature.
pub fn grow<R: Rng>(
    x: &Matrix,
    samples: &[usize],
    stats: &[[f64; 2]],
    cfg: &GrowConfig,
    rng: &mut R,
) -> (Tree, Vec<f64>) {
    let p = x.n_cols();
    let mut importance = vec![0.0; p];
    let mut nodes = Vec::new();
    // (slot, positions into samples/stats, depth)
    let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, (0..samples.len()).collect(), 0)];
    nodes.push(Node::Leaf { value: 0.0 });
    let mut buf: Vec<(f64, usize)> = Vec::with_capacity(samples.len());

    while let Some((slot, members, depth)) = stack.pop() {
        let total = sum_stats(stats, &members);
        nodes[slot] = Node::Leaf {
            value: cfg.criterion.leaf_value(total),
        };
        let depth_ok = cfg.max_depth.is_none_or(|d| depth < d);
        if !depth_ok || members.len() < 2 * cfg.min_samples_leaf || cfg.criterion.is_pure(total) {
            continue;
        }
        let features: Vec<usize> = match cfg.max_features {
            Some(m) if m < p => sample(rng, p, m).into_vec(),
            _ => (0..p).collect(),
        };
        let parent_loss = cfg.criterion.loss(total);
        let mut best: Option<(Candidate, Vec<usize>)> = None;
        for &f in &features {
            buf.clear();
            buf.extend(members.iter().map(|&m| (x.get(samples[m], f), m)));
            buf.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if buf[0].0 == buf[buf.len() - 1].0 {
                continue;
            }
            if let Some(c) = best_split_sorted(&buf, stats, total, parent_loss, f, cfg) {
                if best.as_ref().is_none_or(|(b, _)| c.gain > b.gain) {
                    let order = buf.iter().map(|&(_, m)| m).collect();
                    best = Some((c, order));
                }
            }
        }
        let Some((c, order)) = best else { continue };
        importance[c.feature] += c.gain;
        let left = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        let right = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[slot] = Node::Split {
            feature: c.feature,
            threshold: c.threshold,
            left,
            right,
        };
        let (l, r) = order.split_at(c.n_left);
        stack.push((right, r.to_vec(), depth + 1));
        stack.push((left, l.to_vec(), depth + 1));
    }
    (Tree { nodes }, importance)
}

fn sum_stats(stats: &[[f64; 2]], members: &[usize]) -> [f64; 2] {
    members.iter().fold([0.0, 0.0], |acc, &m| {
        [acc[0] + stats[m][0], acc[1] + stats[m][1]]
    })
}

fn best_split_sorted(
    sorted: &[(f64, usize)],
    stats: &[[f64; 2]],
    total: [f64; 2],
    parent_loss: f64,
    feature: usize,
    cfg: &GrowConfig,
) -> Option<Candidate> {
    let n = sorted.len();
    let min_leaf = cfg.min_samples_leaf.max(1);
    let mut left = [0.0, 0.0];
    let mut best: Option<Candidate> = None;
    for i in 0..n - 1 {
        let s = stats[sorted[i].1];
        left[0] += s[0];
        left[1] += s[1];
        let n_left = i + 1;
        if sorted[i].0 == sorted[i + 1].0 || n_left < min_leaf || n - n_left < min_leaf {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let gain = parent_loss - cfg.criterion.loss(left) - cfg.criterion.loss(right);
        if gain > MIN_GAIN && best.as_ref().is_none_or(|b| gain > b.gain) {
            best = Some(Candidate {
                feature,
                threshold: 0.5 * (sorted[i].0 + sorted[i + 1].0),
                gain,
                n_left,
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    fn gini_impurity(s: [f64; 2]) -> f64 {
        let p = s[1] / s[0];
        1.0 - p * p - (1.0 - p) * (1.0 - p)
    }

    fn class_stats(y: &[u8]) -> Vec<[f64; 2]> {
        y.iter().map(|&v| [1.0, v as f64]).collect()
    }

    fn full() -> GrowConfig {
        GrowConfig {
            criterion: Criterion::Gini,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
        }
    }

    #[test]
    fn gini_loss_is_weighted_impurity() {
        for s in [[4.0, 1.0], [10.0, 5.0], [3.0, 0.0], [7.5, 2.5]] {
            let expected = s[0] * gini_impurity(s);
            assert!((Criterion::Gini.loss(s) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_data_yields_pure_leaves() {
        let x = Matrix::from_rows(&(0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect::<Vec<_>>()).unwrap();
        let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 13)).collect();
        let samples: Vec<usize> = (0..20).collect();
        let (t, imp) = grow(&x, &samples, &class_stats(&y), &full(), &mut rng_from(0));
        assert_eq!(t.n_leaves(), 2);
        assert_eq!(t.nodes[0], Node::Split { feature: 0, threshold: 12.5, left: 1, right: 2 });
        for i in 0..20 {
            assert_eq!(t.predict_row(x.row(i)), y[i] as f64);
        }
        assert!(imp[0] > 0.0 && imp[1] == 0.0);
    }

    #[test]
    fn every_split_strictly_reduces_gini() {
        let mut rng = rng_from(7);
        let rows: Vec<Vec<f64>> = (0..120).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + 0.3 * r[1] > 0.6 || rng.random::<f64>() < 0.1)).collect();
        let samples: Vec<usize> = (0..120).collect();
        let cfg = GrowConfig { max_features: Some(2), ..full() };
        let (t, _) = grow(&x, &samples, &class_stats(&y), &cfg, &mut rng_from(1));

        fn walk(t: &Tree, at: usize, rows: Vec<usize>, x: &Matrix, y: &[u8]) {
            let stats = |r: &[usize]| [r.len() as f64, r.iter().map(|&i| y[i] as f64).sum::<f64>()];
            match t.nodes[at] {
                Node::Leaf { value } => {
                    let s = stats(&rows);
                    assert!((value - s[1] / s[0]).abs() < 1e-12);
                }
                Node::Split { feature, threshold, left, right } => {
                    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x.get(i, feature) <= threshold);
                    assert!(!l.is_empty() && !r.is_empty());
                    let parent = Criterion::Gini.loss(stats(&rows));
                    let children = Criterion::Gini.loss(stats(&l)) + Criterion::Gini.loss(stats(&r));
                    assert!(children < parent);
                    walk(t, left, l, x, y);
                    walk(t, right, r, x, y);
                }
            }
        }
        walk(&t, 0, samples, &x, &y);
    }

    #[test]
    fn depth_and_leaf_size_limits() {
        let x = Matrix::from_rows(&(0..64).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let y: Vec<u8> = (0..64).map(|i| (i % 2) as u8).collect();
        let samples: Vec<usize> = (0..64).collect();
        let cfg = GrowConfig { max_depth: Some(3), ..full() };
        let (t, _) = grow(&x, &samples, &class_stats(&y), &cfg, &mut rng_from(0));
        assert!(t.depth() <= 3);
        let cfg = GrowConfig { min_samples_leaf: 10, ..full() };
        let (t, _) = grow(&x, &samples, &class_stats(&y), &cfg, &mut rng_from(0));
        fn leaf_sizes(t: &Tree, x: &Matrix) -> Vec<usize> {
            let mut counts = std::collections::BTreeMap::<u64, usize>::new();
            for i in 0..x.n_rows() {
                let mut at = 0;
                while let Node::Split { feature, threshold, left, right } = t.nodes[at] {
                    at = if x.get(i, feature) <= threshold { left } else { right };
                }
                *counts.entry(at as u64).or_default() += 1;
            }
            counts.into_values().collect()
        }
        assert!(leaf_sizes(&t, &x).iter().all(|&c| c >= 10));
    }

    #[test]
    fn newton_leaf_is_regularized_step() {
        let x = Matrix::from_rows(&[vec![0.0], vec![0.0]]).unwrap();
        let stats = [[-0.5, 0.25], [-0.5, 0.25]];
        let cfg = GrowConfig { criterion: Criterion::Newton { lambda: 1.0 }, ..full() };
        let (t, _) = grow(&x, &[0, 1], &stats, &cfg, &mut rng_from(0));
        assert_eq!(t.nodes, vec![Node::Leaf { value: 1.0 / 1.5 }]);
    }
}
