//! Parent-level feature ranking and selection: Laplacian score, forest
//! importance, and recursive feature elimination scored by inner-CV F1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_folds_for_labels, DataTable};
use crate::error::{Error, Result};
use crate::matrix::{knn_within, Matrix};
use crate::metrics::evaluate;
use crate::models::{train, ModelConfig, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LowerIsBetter,
    HigherIsBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingMethod {
    Laplacian,
    TreeImportance,
    RfeOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub name: String,
    pub score: f64,
    /// Constant feature; always ranked last.
    pub degenerate: bool,
}

/// One entry per parent feature, in schema order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub method: RankingMethod,
    pub direction: Direction,
    pub features: Vec<RankedFeature>,
}

impl FeatureRanking {
    /// Feature positions best-first; degenerate features last, ties by schema order.
    pub fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.features.len()).collect();
        let key = |i: usize| {
            let s = self.features[i].score;
            match self.direction {
                Direction::LowerIsBetter => s,
                Direction::HigherIsBetter => -s,
            }
        };
        idx.sort_by(|&a, &b| {
            self.features[a]
                .degenerate
                .cmp(&self.features[b].degenerate)
                .then(key(a).total_cmp(&key(b)))
                .then(a.cmp(&b))
        });
        idx
    }

    pub fn ranked_names(&self) -> Vec<String> {
        self.order()
            .into_iter()
            .map(|i| self.features[i].name.clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeStep {
    pub features: Vec<String>,
    pub fold_f1: Vec<f64>,
    pub mean_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: String,
    /// Kept parent features in schema order.
    pub kept: Vec<String>,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<FeatureRanking>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rfe_trace: Vec<RfeStep>,
}

fn numeric_matrix(t: &DataTable) -> Result<Matrix> {
    if t.has_categorical() {
        return Err(Error::Config(
            "feature selection needs encoded numeric columns; add a one_hot stage first".into(),
        ));
    }
    if !t.is_complete() {
        return Err(Error::Config(
            "feature selection needs complete data; add mvae or impute first".into(),
        ));
    }
    t.to_matrix()
}

/// Column scores grouped by parent, in first-appearance order.
fn by_parent(t: &DataTable, col_scores: &[f64], col_degenerate: &[bool], mean: bool) -> Vec<RankedFeature> {
    let parents = t.parents();
    let index = t.parent_index();
    parents
        .into_iter()
        .enumerate()
        .map(|(p, name)| {
            let cols: Vec<usize> = (0..index.len()).filter(|&j| index[j] == p).collect();
            let live: Vec<usize> = cols.iter().copied().filter(|&j| !col_degenerate[j]).collect();
            let degenerate = live.is_empty();
            let total: f64 = live.iter().map(|&j| col_scores[j]).sum();
            let score = if degenerate {
                0.0
            } else if mean {
                total / live.len() as f64
            } else {
                total
            };
            RankedFeature {
                name,
                score,
                degenerate,
            }
        })
        .collect()
}

fn is_constant(col: &[f64]) -> bool {
    col.iter().all(|&v| v == col[0])
}

/// Laplacian score per column on a symmetrized kNN graph with heat-kernel
/// weights S_ij = exp(−‖x_i − x_j‖² / t), t = mean squared edge length.
/// Lower is better. Returns (scores, degenerate flags) per column.
pub fn laplacian_column_scores(x: &Matrix, k_graph: usize) -> Result<(Vec<f64>, Vec<bool>)> {
    let n = x.n_rows();
    if k_graph == 0 || n <= k_graph {
        return Err(Error::InsufficientRows(format!(
            "laplacian score with k={k_graph} needs more than {k_graph} rows, got {n}"
        )));
    }
    let knn: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| knn_within(x, i, k_graph).into_iter().map(|nb| nb.index).collect())
        .collect();
    let mut edges: Vec<(usize, usize)> = knn
        .iter()
        .enumerate()
        .flat_map(|(i, nbrs)| nbrs.iter().map(move |&j| (i.min(j), i.max(j))))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let sq: Vec<f64> = edges
        .iter()
        .map(|&(i, j)| crate::matrix::sq_euclidean(x.row(i), x.row(j)))
        .collect();
    let t = sq.iter().sum::<f64>() / sq.len() as f64;
    let w: Vec<f64> = sq
        .iter()
        .map(|&d| if t > 0.0 { (-d / t).exp() } else { 1.0 })
        .collect();
    let mut degree = vec![0.0; n];
    for (&(i, j), &wij) in edges.iter().zip(&w) {
        degree[i] += wij;
        degree[j] += wij;
    }
    let total_degree: f64 = degree.iter().sum();
    let mut scores = Vec::with_capacity(x.n_cols());
    let mut degenerate = Vec::with_capacity(x.n_cols());
    for c in 0..x.n_cols() {
        let f = x.column(c);
        let centre = f.iter().zip(&degree).map(|(v, d)| v * d).sum::<f64>() / total_degree;
        let var: f64 = f
            .iter()
            .zip(&degree)
            .map(|(v, d)| d * (v - centre) * (v - centre))
            .sum();
        // fᵀLf = Σ_edges S_ij (f_i − f_j)², invariant to the centring shift
        let smooth: f64 = edges
            .iter()
            .zip(&w)
            .map(|(&(i, j), &wij)| wij * (f[i] - f[j]) * (f[i] - f[j]))
            .sum();
        if is_constant(&f) || var <= 1e-12 * total_degree {
            scores.push(0.0);
            degenerate.push(true);
        } else {
            scores.push(smooth / var);
            degenerate.push(false);
        }
    }
    Ok((scores, degenerate))
}

/// Parent-level Laplacian score (mean over a parent's encoded columns).
pub fn laplacian_score(t: &DataTable, k_graph: usize) -> Result<FeatureRanking> {
    let x = numeric_matrix(t)?;
    let (scores, degenerate) = laplacian_column_scores(&x, k_graph)?;
    Ok(FeatureRanking {
        method: RankingMethod::Laplacian,
        direction: Direction::LowerIsBetter,
        features: by_parent(t, &scores, &degenerate, true),
    })
}

fn column_degenerate(x: &Matrix) -> Vec<bool> {
    (0..x.n_cols()).map(|c| is_constant(&x.column(c))).collect()
}

/// Forest impurity importance summed over each parent's columns; sums to 1.
pub fn tree_importance(t: &DataTable, y: &[u8], forest: &ModelConfig) -> Result<FeatureRanking> {
    if !forest.kind.is_tree_model() {
        return Err(Error::Config(format!(
            "tree importance needs a tree model, got {}",
            forest.kind
        )));
    }
    let x = numeric_matrix(t)?;
    let m = train(forest, &x, y)?;
    Ok(FeatureRanking {
        method: RankingMethod::TreeImportance,
        direction: Direction::HigherIsBetter,
        features: by_parent(t, &m.feature_importance(), &column_degenerate(&x), false),
    })
}

fn in_schema_order(r: &FeatureRanking, chosen: &[usize]) -> Vec<String> {
    let mut c = chosen.to_vec();
    c.sort_unstable();
    c.into_iter().map(|i| r.features[i].name.clone()).collect()
}

/// Keep floor(fraction · p) best-ranked parents (at least one).
pub fn select_top_fraction(r: &FeatureRanking, fraction: f64) -> Result<SelectionResult> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("selection fraction must lie in (0, 1], got {fraction}")));
    }
    let p = r.features.len();
    let n_keep = ((fraction * p as f64).floor() as usize).clamp(1, p.max(1));
    let order = r.order();
    Ok(SelectionResult {
        method: format!("{:?}", r.method).to_lowercase(),
        kept: in_schema_order(r, &order[..n_keep.min(p)]),
        config: serde_json::json!({ "fraction": fraction }),
        ranking: Some(r.clone()),
        rfe_trace: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeConfig {
    #[serde(default = "default_rfe_estimator")]
    pub estimator: ModelConfig,
    #[serde(default = "default_step")]
    pub step: usize,
    #[serde(default = "default_inner_cv")]
    pub inner_cv: usize,
    #[serde(default)]
    pub seed: u64,
}

/// A 50-tree, depth-8 forest: cheap enough to refit at every elimination step.
pub fn default_rfe_estimator() -> ModelConfig {
    ModelConfig::new(ModelKind::RandomForest)
        .with_param("n_trees", Some(50.0))
        .with_param("max_depth", Some(8.0))
}

fn default_step() -> usize {
    1
}

fn default_inner_cv() -> usize {
    3
}

impl Default for RfeConfig {
    fn default() -> Self {
        Self {
            estimator: default_rfe_estimator(),
            step: default_step(),
            inner_cv: default_inner_cv(),
            seed: 0,
        }
    }
}

impl RfeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.estimator.kind == ModelKind::EasyEnsemble {
            return Err(Error::Unsupported(
                "easy_ensemble has no importance ranking usable by RFE".into(),
            ));
        }
        if self.step == 0 {
            return Err(Error::Config("rfe step must be at least 1".into()));
        }
        if self.inner_cv < 2 {
            return Err(Error::Config("rfe inner_cv must be at least 2".into()));
        }
        self.estimator.validate().map(|_| ())
    }
}

/// Recursive elimination over parent features. Each round scores the
/// current subset by mean inner-CV F1, then refits the estimator on all
/// rows and drops the `step` weakest parents (degenerate first, then lowest
/// summed importance, later schema position first on ties). The subset with
/// the best mean F1 wins; ties go to the smaller subset.
pub fn rfe(t: &DataTable, y: &[u8], cfg: &RfeConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    let x = numeric_matrix(t)?;
    let parents = t.parents();
    let index = t.parent_index();
    let col_degenerate = column_degenerate(&x);
    let plan = stratified_folds_for_labels(y, cfg.inner_cv, 1, cfg.seed)?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..cfg.inner_cv).map(|f| plan.split(0, f)).collect();

    let mut current: Vec<usize> = (0..parents.len()).collect();
    let mut trace: Vec<RfeStep> = Vec::new();
    loop {
        let cols: Vec<usize> = (0..index.len()).filter(|&j| current.contains(&index[j])).collect();
        let xs = x.select_cols(&cols);
        let fold_f1 = splits
            .par_iter()
            .map(|(tr, va)| {
                let ytr: Vec<u8> = tr.iter().map(|&i| y[i]).collect();
                let yva: Vec<u8> = va.iter().map(|&i| y[i]).collect();
                let m = train(&cfg.estimator, &xs.select_rows(tr), &ytr)?;
                let xva = xs.select_rows(va);
                let (_, report) = evaluate(&yva, &m.score(&xva)?, &m.predict(&xva, 0.5)?)?;
                Ok(report.f1)
            })
            .collect::<Result<Vec<f64>>>()?;
        trace.push(RfeStep {
            features: current.iter().map(|&p| parents[p].clone()).collect(),
            mean_f1: fold_f1.iter().sum::<f64>() / fold_f1.len() as f64,
            fold_f1,
        });
        if current.len() == 1 {
            break;
        }
        let m = train(&cfg.estimator, &xs, y)?;
        let imp = m.feature_importance();
        // (position in `current`, degenerate, importance)
        let mut weakest: Vec<(usize, bool, f64)> = current
            .iter()
            .enumerate()
            .map(|(pos, &p)| {
                let mine: Vec<usize> = (0..cols.len()).filter(|&c| index[cols[c]] == p).collect();
                let degenerate = mine.iter().all(|&c| col_degenerate[cols[c]]);
                (pos, degenerate, mine.iter().map(|&c| imp[c]).sum())
            })
            .collect();
        weakest.sort_by(|a, b| {
            b.1.cmp(&a.1)
                .then(a.2.total_cmp(&b.2))
                .then(b.0.cmp(&a.0))
        });
        let n_drop = cfg.step.min(current.len() - 1);
        let mut drop: Vec<usize> = weakest[..n_drop].iter().map(|w| w.0).collect();
        drop.sort_unstable_by(|a, b| b.cmp(a));
        for pos in drop {
            current.remove(pos);
        }
    }
    let mut best = 0;
    for (i, s) in trace.iter().enumerate() {
        // later entries are smaller subsets, so ties move to them
        if s.mean_f1 >= trace[best].mean_f1 {
            best = i;
        }
    }
    Ok(SelectionResult {
        method: "rfe".into(),
        kept: trace[best].features.clone(),
        config: serde_json::to_value(cfg)?,
        ranking: None,
        rfe_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Column;
    use crate::rng::rng_from;
    use rand::Rng;

    fn table(cols: Vec<(&str, Vec<f64>)>) -> DataTable {
        DataTable::new(cols.into_iter().map(|(n, v)| Column::numerical(n, v)).collect()).unwrap()
    }

    fn ranking(scores: &[f64], direction: Direction) -> FeatureRanking {
        FeatureRanking {
            method: RankingMethod::TreeImportance,
            direction,
            features: scores
                .iter()
                .enumerate()
                .map(|(i, &s)| RankedFeature { name: format!("f{i}"), score: s, degenerate: false })
                .collect(),
        }
    }

    #[test]
    fn top_fraction_counts() {
        let r = ranking(&(0..42).map(|i| i as f64).collect::<Vec<_>>(), Direction::HigherIsBetter);
        assert_eq!(select_top_fraction(&r, 0.7).unwrap().kept.len(), 29);
        assert_eq!(select_top_fraction(&r, 1.0).unwrap().kept.len(), 42);
        let small = ranking(&[1.0, 2.0, 3.0], Direction::HigherIsBetter);
        assert_eq!(select_top_fraction(&small, 0.1).unwrap().kept, vec!["f2"]);
        assert!(select_top_fraction(&small, 0.0).is_err());
    }

    #[test]
    fn ties_break_by_schema_order_and_degenerate_last() {
        let mut r = ranking(&[0.5, 0.2, 0.2, 0.1], Direction::LowerIsBetter);
        r.features[3].degenerate = true;
        assert_eq!(r.order(), vec![1, 2, 0, 3]);
    }

    #[test]
    fn aligned_feature_beats_noise_on_laplacian() {
        let mut rng = rng_from(3);
        let n = 50;
        let aligned: Vec<f64> = (0..n).map(|i| if i < 25 { 0.0 } else { 5.0 } + 0.1 * rng.random::<f64>()).collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let t = table(vec![("aligned", aligned.clone()), ("noise", noise), ("copy", aligned), ("flat", vec![2.0; n])]);
        let r = laplacian_score(&t, 5).unwrap();
        assert!(r.features[0].score < r.features[1].score);
        assert_eq!(r.features[0].score, r.features[2].score);
        assert!(r.features[3].degenerate);
        assert_eq!(r.order()[3], 3);
    }

    #[test]
    fn copied_label_feature_tops_importance() {
        let mut rng = rng_from(5);
        let n = 200;
        let y: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.4)).collect();
        let mut cols = vec![("signal", y.iter().map(|&v| v as f64).collect::<Vec<_>>())];
        for name in ["n1", "n2", "n3", "n4"] {
            cols.push((name, (0..n).map(|_| rng.random::<f64>()).collect()));
        }
        let r = tree_importance(&table(cols), &y, &ModelConfig::new(ModelKind::RandomForest).with_param("n_trees", Some(30.0))).unwrap();
        assert_eq!(r.order()[0], 0);
        assert!((r.features.iter().map(|f| f.score).sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn one_hot_importances_aggregate_by_sum() {
        let mut rng = rng_from(8);
        let n = 150;
        let y: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect();
        let level: Vec<usize> = (0..n).map(|i| if y[i] == 1 { rng.random_range(0..2) } else { rng.random_range(1..3) }).collect();
        let mut cols = Vec::new();
        for l in 0..3 {
            let mut c = Column::numerical(format!("cat={l}"), level.iter().map(|&v| f64::from(u8::from(v == l))).collect());
            c.source = "cat".into();
            cols.push(c);
        }
        cols.push(Column::numerical("x", (0..n).map(|_| rng.random::<f64>()).collect()));
        let t = DataTable::new(cols).unwrap();
        let forest = ModelConfig::new(ModelKind::RandomForest).with_param("n_trees", Some(20.0));
        let r = tree_importance(&t, &y, &forest).unwrap();
        assert_eq!(r.features.len(), 2);
        let m = train(&forest, &t.to_matrix().unwrap(), &y).unwrap();
        let raw = m.feature_importance();
        assert!((r.features[0].score - raw[..3].iter().sum::<f64>()).abs() < 1e-12);
        assert!(r.features.iter().all(|f| f.score >= 0.0));
    }

    #[test]
    fn rfe_rejects_easy_ensemble() {
        let t = table(vec![("a", vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0])]);
        let cfg = RfeConfig { estimator: ModelConfig::new(ModelKind::EasyEnsemble), ..RfeConfig::default() };
        assert!(matches!(rfe(&t, &[0, 1, 0, 1, 0, 1], &cfg), Err(Error::Unsupported(_))));
    }

    #[test]
    fn rfe_trace_is_monotone_in_size() {
        let mut rng = rng_from(9);
        let n = 120;
        let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
        let y: Vec<u8> = (0..n).map(|i| u8::from(cols[0][i] > 0.5)).collect();
        let t = table(vec![("a", cols[0].clone()), ("b", cols[1].clone()), ("c", cols[2].clone()), ("d", cols[3].clone())]);
        let r = rfe(&t, &y, &RfeConfig::default()).unwrap();
        let sizes: Vec<usize> = r.rfe_trace.iter().map(|s| s.features.len()).collect();
        assert_eq!(sizes, vec![4, 3, 2, 1]);
        assert!(r.kept.contains(&"a".to_string()));
        assert_eq!(r, rfe(&t, &y, &RfeConfig::default()).unwrap());
    }
}
