use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameter map; `null` means "unbounded" or "derive from data"
/// depending on the key.
pub type Hyperparameters = BTreeMap<String, Option<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LogisticRegression,
    LinearSvm,
    RandomForest,
    BoostedTrees,
    EasyEnsemble,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::LogisticRegression,
        ModelKind::LinearSvm,
        ModelKind::RandomForest,
        ModelKind::BoostedTrees,
        ModelKind::EasyEnsemble,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::LinearSvm => "linear_svm",
            ModelKind::RandomForest => "random_forest",
            ModelKind::BoostedTrees => "boosted_trees",
            ModelKind::EasyEnsemble => "easy_ensemble",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind `{s}`")))
    }

    pub fn is_tree_model(self) -> bool {
        matches!(
            self,
            ModelKind::RandomForest | ModelKind::BoostedTrees | ModelKind::EasyEnsemble
        )
    }

    /// Scores are probabilities in [0, 1] (everything except the SVM margin).
    pub fn is_probabilistic(self) -> bool {
        self != ModelKind::LinearSvm
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy)]
enum Rule {
    Positive,
    NonNegative,
    UnitInterval,
    Count,
    /// Count, or null for "no limit".
    OptCount,
    /// Positive, or null for "derive from class counts".
    OptPositive,
}

fn table(kind: ModelKind) -> &'static [(&'static str, Rule, Option<f64>)] {
    use Rule::*;
    match kind {
        ModelKind::LogisticRegression => &[
            ("learning_rate", Positive, Some(0.1)),
            ("epochs", Count, Some(500.0)),
            ("l2", NonNegative, Some(0.01)),
            ("class_weight_positive", Positive, Some(1.0)),
        ],
        ModelKind::LinearSvm => &[
            ("learning_rate", Positive, Some(0.1)),
            ("epochs", Count, Some(20.0)),
            ("l2", Positive, Some(0.001)),
            ("class_weight_positive", Positive, Some(1.0)),
        ],
        ModelKind::RandomForest => &[
            ("n_trees", Count, Some(100.0)),
            ("max_depth", OptCount, None),
            ("min_samples_leaf", Count, Some(1.0)),
            ("class_weight_positive", Positive, Some(1.0)),
        ],
        ModelKind::BoostedTrees => &[
            ("n_rounds", Count, Some(100.0)),
            ("shrinkage", UnitInterval, Some(0.1)),
            ("max_depth", Count, Some(3.0)),
            ("min_samples_leaf", Count, Some(1.0)),
            ("l2", NonNegative, Some(1.0)),
            ("class_weight_positive", OptPositive, None),
        ],
        ModelKind::EasyEnsemble => &[
            ("ee_subsets", Count, Some(10.0)),
            ("n_rounds", Count, Some(10.0)),
            ("shrinkage", UnitInterval, Some(0.5)),
            ("max_depth", Count, Some(2.0)),
            ("l2", NonNegative, Some(1.0)),
        ],
    }
}

fn check(kind: ModelKind, key: &str, rule: Rule, v: Option<f64>) -> Result<()> {
    let bad = |why: &str| {
        Err(Error::Config(format!(
            "{kind}: hyperparameter `{key}` = {v:?} {why}"
        )))
    };
    let Some(x) = v else {
        return match rule {
            Rule::OptCount | Rule::OptPositive => Ok(()),
            _ => bad("must not be null"),
        };
    };
    if !x.is_finite() {
        return bad("must be finite");
    }
    match rule {
        Rule::Positive | Rule::OptPositive if x <= 0.0 => bad("must be > 0"),
        Rule::NonNegative if x < 0.0 => bad("must be >= 0"),
        Rule::UnitInterval if !(x > 0.0 && x <= 1.0) => bad("must lie in (0, 1]"),
        Rule::Count | Rule::OptCount if x < 1.0 || x.fract() != 0.0 => {
            bad("must be a positive integer")
        }
        _ => Ok(()),
    }
}

/// Every accepted key for `kind` with its default value.
pub fn defaults(kind: ModelKind) -> Hyperparameters {
    table(kind)
        .iter()
        .map(|&(k, _, d)| (k.to_string(), d))
        .collect()
}

/// Merge `given` over the defaults, rejecting unknown keys and out-of-range values.
pub fn resolve(kind: ModelKind, given: &Hyperparameters) -> Result<Resolved> {
    let spec = table(kind);
    for key in given.keys() {
        if !spec.iter().any(|(k, _, _)| k == key) {
            return Err(Error::Config(format!(
                "{kind}: unknown hyperparameter `{key}`"
            )));
        }
    }
    let mut values = BTreeMap::new();
    for &(key, rule, default) in spec {
        let v = given.get(key).copied().unwrap_or(default);
        check(kind, key, rule, v)?;
        values.insert(key.to_string(), v);
    }
    Ok(Resolved(values))
}

/// A validated, fully populated hyperparameter map.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved(pub Hyperparameters);

impl Resolved {
    pub fn real(&self, key: &str) -> f64 {
        self.opt_real(key)
            .unwrap_or_else(|| panic!("hyperparameter `{key}` unresolved"))
    }

    pub fn opt_real(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied().flatten()
    }

    pub fn count(&self, key: &str) -> usize {
        self.real(key) as usize
    }

    pub fn opt_count(&self, key: &str) -> Option<usize> {
        self.opt_real(key).map(|v| v as usize)
    }
}
