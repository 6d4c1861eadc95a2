use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, Hyperparameters, ModelConfig, ModelKind};
use crate::dataset::stratified_folds_for_labels;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::evaluate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    #[default]
    F1,
    Mcc,
    RocAuc,
}

impl Scoring {
    fn metric(self) -> &'static str {
        match self {
            Scoring::F1 => "f1",
            Scoring::Mcc => "mcc",
            Scoring::RocAuc => "roc_auc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: ModelKind,
    /// Candidate values per hyperparameter; keys not listed keep their defaults.
    pub grid: BTreeMap<String, Vec<Option<f64>>>,
    #[serde(default)]
    pub scoring: Scoring,
    #[serde(default = "default_cv")]
    pub cv_folds: usize,
}

fn default_cv() -> usize {
    3
}

impl GridSpec {
    /// Every combination in grid order: keys ascending, last key varying fastest.
    pub fn combinations(&self) -> Result<Vec<Hyperparameters>> {
        if self.grid.is_empty() || self.grid.values().any(Vec::is_empty) {
            return Err(Error::Config(format!("{}: empty hyperparameter grid", self.kind)));
        }
        let mut combos = vec![Hyperparameters::new()];
        for (key, values) in &self.grid {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    values.iter().map(move |v| {
                        let mut next = c.clone();
                        next.insert(key.clone(), *v);
                        next
                    })
                })
                .collect();
        }
        Ok(combos)
    }
}

/// The documented small default grids.
pub fn default_grid(kind: ModelKind) -> GridSpec {
    let g: Vec<(&str, Vec<Option<f64>>)> = match kind {
        ModelKind::LogisticRegression => vec![("l2", vec![Some(0.001), Some(0.01), Some(0.1)])],
        ModelKind::LinearSvm => vec![("l2", vec![Some(0.0001), Some(0.001), Some(0.01)])],
        ModelKind::RandomForest => vec![
            ("n_trees", vec![Some(100.0), Some(300.0)]),
            ("max_depth", vec![None, Some(10.0)]),
        ],
        ModelKind::BoostedTrees => vec![
            ("n_rounds", vec![Some(100.0), Some(300.0)]),
            ("shrinkage", vec![Some(0.05), Some(0.1)]),
        ],
        ModelKind::EasyEnsemble => vec![("ee_subsets", vec![Some(5.0), Some(10.0)])],
    };
    GridSpec {
        kind,
        grid: g.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        scoring: Scoring::F1,
        cv_folds: default_cv(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEvaluation {
    pub params: Hyperparameters,
    pub fold_scores: Vec<f64>,
    pub mean_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: ModelConfig,
    pub scoring: Scoring,
    pub evaluations: Vec<GridEvaluation>,
}

/// Exhaustive inner-CV search; the first combination with the highest mean
/// score wins. `base` supplies the seed, name, and any fixed hyperparameters.
pub fn grid_search(spec: &GridSpec, base: &ModelConfig, x: &Matrix, y: &[u8], seed: u64) -> Result<GridResult> {
    if base.kind != spec.kind {
        return Err(Error::Config(format!(
            "grid is for {} but the base model is {}",
            spec.kind, base.kind
        )));
    }
    let combos = spec.combinations()?;
    let configs: Vec<ModelConfig> = combos
        .iter()
        .map(|c| {
            let mut cfg = base.clone();
            cfg.params.extend(c.clone());
            cfg.validate().map(|_| cfg)
        })
        .collect::<Result<_>>()?;
    let plan = stratified_folds_for_labels(y, spec.cv_folds, 1, seed)?;
    let metric = spec.scoring.metric();
    let evaluations: Vec<GridEvaluation> = configs
        .par_iter()
        .zip(&combos)
        .map(|(cfg, combo)| {
            let fold_scores = (0..spec.cv_folds)
                .map(|f| {
                    let (tr, va) = plan.split(0, f);
                    let ytr: Vec<u8> = tr.iter().map(|&i| y[i]).collect();
                    let yva: Vec<u8> = va.iter().map(|&i| y[i]).collect();
                    let m = train(cfg, &x.select_rows(&tr), &ytr)?;
                    let xva = x.select_rows(&va);
                    let scores = m.score(&xva)?;
                    let pred = m.predict(&xva, 0.5)?;
                    let (_, report) = evaluate(&yva, &scores, &pred)?;
                    Ok(report.get(metric).unwrap_or(0.0))
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean_score = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
            Ok(GridEvaluation {
                params: combo.clone(),
                fold_scores,
                mean_score,
            })
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, e) in evaluations.iter().enumerate() {
        if e.mean_score > evaluations[best].mean_score {
            best = i;
        }
    }
    Ok(GridResult {
        best: configs[best].clone(),
        scoring: spec.scoring,
        evaluations,
    })
}
