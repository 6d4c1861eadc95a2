//! Classifiers behind one train / score / predict contract.

mod ensemble;
mod grid;
mod linear;
mod params;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use ensemble::{balanced_subset, bootstrap_indices, BoostParams, Boosted, EasyEnsemble, Forest, ForestParams};
pub use grid::{default_grid, grid_search, GridEvaluation, GridResult, GridSpec, Scoring};
pub use linear::{class_weights, fit_linear_svm, fit_logistic, logistic_loss_and_gradient, sigmoid, LinearModel};
pub use params::{defaults, resolve, Hyperparameters, ModelKind, Resolved};
pub use tree::{grow, Criterion, GrowConfig, Node, Tree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Display label; defaults to the kind name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub params: Hyperparameters,
    #[serde(default)]
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            name: None,
            params: Hyperparameters::new(),
            seed: 0,
        }
    }

    pub fn with_param(mut self, key: &str, value: Option<f64>) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.to_string())
    }

    pub fn validate(&self) -> Result<Resolved> {
        resolve(self.kind, &self.params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Fitted {
    Linear(LinearModel),
    Forest(Forest),
    Boosted(Boosted),
    EasyEnsemble(EasyEnsemble),
}

/// A fitted classifier, self-describing when serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub hyperparameters: Hyperparameters,
    pub n_features: usize,
    pub fitted: Fitted,
}

pub fn train(cfg: &ModelConfig, x: &Matrix, y: &[u8]) -> Result<TrainedModel> {
    let hp = cfg.validate()?;
    if y.len() != x.n_rows() {
        return Err(Error::ShapeMismatch {
            expected: x.n_rows(),
            got: y.len(),
        });
    }
    if !x.is_finite() {
        return Err(Error::Data("training matrix contains non-finite values".into()));
    }
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(Error::SingleClass);
    }
    let fitted = match cfg.kind {
        ModelKind::LogisticRegression => Fitted::Linear(
            fit_logistic(
                x,
                y,
                hp.real("learning_rate"),
                hp.count("epochs"),
                hp.real("l2"),
                hp.real("class_weight_positive"),
            )
            .0,
        ),
        ModelKind::LinearSvm => Fitted::Linear(fit_linear_svm(
            x,
            y,
            hp.real("learning_rate"),
            hp.count("epochs"),
            hp.real("l2"),
            hp.real("class_weight_positive"),
            cfg.seed,
        )),
        ModelKind::RandomForest => Fitted::Forest(Forest::fit(
            x,
            y,
            &ForestParams {
                n_trees: hp.count("n_trees"),
                max_depth: hp.opt_count("max_depth"),
                min_samples_leaf: hp.count("min_samples_leaf"),
                class_weight_positive: hp.real("class_weight_positive"),
            },
            cfg.seed,
        )),
        ModelKind::BoostedTrees => Fitted::Boosted(Boosted::fit(x, y, &boost_params(&hp), cfg.seed)),
        ModelKind::EasyEnsemble => Fitted::EasyEnsemble(EasyEnsemble::fit(
            x,
            y,
            hp.count("ee_subsets"),
            &boost_params(&hp),
            cfg.seed,
        )),
    };
    Ok(TrainedModel {
        kind: cfg.kind,
        hyperparameters: hp.0,
        n_features: x.n_cols(),
        fitted,
    })
}

fn boost_params(hp: &Resolved) -> BoostParams {
    BoostParams {
        n_rounds: hp.count("n_rounds"),
        shrinkage: hp.real("shrinkage"),
        max_depth: hp.count("max_depth"),
        min_samples_leaf: hp.opt_count("min_samples_leaf").unwrap_or(1),
        l2: hp.real("l2"),
        class_weight_positive: hp.opt_real("class_weight_positive"),
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

impl TrainedModel {
    pub fn score_row(&self, x: &[f64]) -> f64 {
        match &self.fitted {
            Fitted::Linear(m) if self.kind == ModelKind::LogisticRegression => sigmoid(m.decision(x)),
            Fitted::Linear(m) => m.decision(x),
            Fitted::Forest(f) => f.score_row(x),
            Fitted::Boosted(b) => b.score_row(x),
            Fitted::EasyEnsemble(e) => e.score_row(x),
        }
    }

    /// Probabilities for every kind except the SVM, which returns its margin.
    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_features {
            return Err(Error::ShapeMismatch {
                expected: self.n_features,
                got: x.n_cols(),
            });
        }
        Ok(x.rows().map(|r| self.score_row(r)).collect())
    }

    /// Score cut corresponding to probability threshold `tau`: `tau` itself
    /// for probabilistic kinds, `logit(tau)` on the SVM margin (so 0.5 → 0).
    pub fn cutoff(&self, tau: f64) -> f64 {
        if self.kind.is_probabilistic() {
            tau
        } else if tau <= 0.0 {
            f64::NEG_INFINITY
        } else if tau >= 1.0 {
            f64::INFINITY
        } else {
            logit(tau)
        }
    }

    /// Label 1 iff score ≥ cutoff(tau).
    pub fn predict(&self, x: &Matrix, tau: f64) -> Result<Vec<u8>> {
        let cut = self.cutoff(tau);
        Ok(self
            .score(x)?
            .into_iter()
            .map(|s| u8::from(s >= cut))
            .collect())
    }

    /// Per-column importance: |w| for linear kinds, normalized impurity /
    /// gain totals for tree kinds.
    pub fn feature_importance(&self) -> Vec<f64> {
        match &self.fitted {
            Fitted::Linear(m) => m.weights.iter().map(|w| w.abs()).collect(),
            Fitted::Forest(f) => f.importance.clone(),
            Fitted::Boosted(b) => b.importance.clone(),
            Fitted::EasyEnsemble(e) => e.importance.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
