use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conditioning::{LofConfig, ResamplePlan};
use crate::error::{Error, Result};
use crate::feature_select::RfeConfig;
use crate::models::{GridSpec, ModelConfig, ModelKind};
use crate::transforms::{ImputeStrategy, ScalerKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SelectMethod {
    Rfe(RfeConfig),
    Laplacian {
        #[serde(default = "default_k_graph")]
        k_graph: usize,
        fraction: f64,
    },
    TreeImportance {
        fraction: f64,
        #[serde(default = "default_importance_forest")]
        forest: ModelConfig,
    },
}

fn default_k_graph() -> usize {
    5
}

fn default_importance_forest() -> ModelConfig {
    ModelConfig::new(ModelKind::RandomForest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectSpec {
    #[serde(flatten)]
    pub method: SelectMethod,
    /// Fixed parent-feature list used in every fold instead of refitting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Stage {
    Mvae,
    Impute(ImputeStrategy),
    Scale {
        kind: ScalerKind,
        #[serde(default)]
        exempt_sentinel: bool,
    },
    OneHot,
    Select(SelectSpec),
    LofRemove(LofConfig),
    SmoteTomek(ResamplePlan),
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Mvae => "mvae",
            Stage::Impute(_) => "impute",
            Stage::Scale { .. } => "scale",
            Stage::OneHot => "one_hot",
            Stage::Select(_) => "select",
            Stage::LofRemove(_) => "lof_remove",
            Stage::SmoteTomek(_) => "smote_tomek",
        }
    }

    fn completes(&self) -> bool {
        matches!(self, Stage::Mvae | Stage::Impute(_))
    }

    fn needs_complete(&self) -> bool {
        matches!(self, Stage::Select(_) | Stage::LofRemove(_) | Stage::SmoteTomek(_))
    }

    /// Applied to the training partition only.
    pub fn is_train_only(&self) -> bool {
        matches!(self, Stage::LofRemove(_) | Stage::SmoteTomek(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            k: 10,
            repeats: 3,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub stages: Vec<Stage>,
    pub models: Vec<ModelConfig>,
    #[serde(default)]
    pub cv: CvConfig,
    /// Optional per-kind grids, searched inside each training fold.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grids: BTreeMap<ModelKind, GridSpec>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_name() -> String {
    "custom".into()
}

fn default_threshold() -> f64 {
    0.5
}

impl PipelineConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn model_labels(&self) -> Vec<String> {
        self.models.iter().map(ModelConfig::label).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut complete = false;
        let mut seen_conditioning = false;
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, s) in self.stages.iter().enumerate() {
            let at = |msg: String| Error::Config(format!("stage {i} ({}): {msg}", s.name()));
            *counts.entry(s.name()).or_default() += 1;
            if s.needs_complete() && !complete {
                return Err(at("needs complete data; place mvae or impute before it".into()));
            }
            if s.is_train_only() {
                seen_conditioning = true;
            } else if seen_conditioning {
                return Err(at(
                    "fit-on-train stages must precede lof_remove / smote_tomek".into(),
                ));
            }
            if s.completes() && complete {
                return Err(at("data is already complete".into()));
            }
            complete |= s.completes();
            match s {
                Stage::Select(spec) => {
                    match &spec.method {
                        SelectMethod::Rfe(r) => r.validate()?,
                        SelectMethod::Laplacian { fraction, k_graph } => {
                            check_fraction(*fraction).map_err(at)?;
                            if *k_graph == 0 {
                                return Err(at("k_graph must be at least 1".into()));
                            }
                        }
                        SelectMethod::TreeImportance { fraction, forest } => {
                            check_fraction(*fraction).map_err(at)?;
                            forest.validate()?;
                            if !forest.kind.is_tree_model() {
                                return Err(at("importance needs a tree model".into()));
                            }
                        }
                    }
                    if spec.frozen.as_ref().is_some_and(Vec::is_empty) {
                        return Err(at("frozen feature list is empty".into()));
                    }
                }
                Stage::LofRemove(c) => c.validate()?,
                Stage::SmoteTomek(p) => p.validate()?,
                _ => {}
            }
        }
        for (name, n) in counts {
            if n > 1 && name != "select" {
                return Err(Error::Config(format!("stage `{name}` appears {n} times")));
            }
        }
        if !complete {
            return Err(Error::Config(
                "models need complete data; add an mvae or impute stage".into(),
            ));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no models configured".into()));
        }
        let mut labels = self.model_labels();
        for m in &self.models {
            m.validate()?;
        }
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("model labels must be unique".into()));
        }
        for (kind, g) in &self.grids {
            if g.kind != *kind {
                return Err(Error::Config(format!("grid under `{kind}` is for {}", g.kind)));
            }
            g.combinations()?;
        }
        if self.cv.k < 2 || self.cv.repeats < 1 {
            return Err(Error::Config("cv needs k >= 2 and repeats >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config("threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

fn check_fraction(f: f64) -> std::result::Result<(), String> {
    if f > 0.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(format!("fraction must lie in (0, 1], got {f}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetId {
    #[serde(rename = "SET1")]
    Set1,
    #[serde(rename = "SET2")]
    Set2,
    #[serde(rename = "SET3")]
    Set3,
    #[serde(rename = "SET4")]
    Set4,
}

impl SetId {
    pub const ALL: [SetId; 4] = [SetId::Set1, SetId::Set2, SetId::Set3, SetId::Set4];

    pub fn as_str(self) -> &'static str {
        match self {
            SetId::Set1 => "SET1",
            SetId::Set2 => "SET2",
            SetId::Set3 => "SET3",
            SetId::Set4 => "SET4",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown set `{s}` (expected SET1..SET4)")))
    }
}

pub const SET_MU: f64 = 0.7;
pub const SET_LOF_NEIGHBORS: usize = 2;

/// The four preset pipelines, each with all five model kinds at defaults.
///
/// SET1: mvae → one_hot → standard scale.
/// SET2: SET1 → rfe → lof (2 neighbors).
/// SET3: SET2 → smote_tomek (μ = 0.7).
/// SET4: SET1 → rfe → smote_tomek (μ = 0.7); no outlier removal.
pub fn build_set(id: SetId) -> PipelineConfig {
    let base = vec![
        Stage::Mvae,
        Stage::OneHot,
        Stage::Scale {
            kind: ScalerKind::Standard,
            exempt_sentinel: false,
        },
    ];
    let rfe = Stage::Select(SelectSpec {
        method: SelectMethod::Rfe(RfeConfig::default()),
        frozen: None,
    });
    let lof = Stage::LofRemove(LofConfig::new(SET_LOF_NEIGHBORS));
    let smote = Stage::SmoteTomek(ResamplePlan::new(SET_MU));
    let extra = match id {
        SetId::Set1 => vec![],
        SetId::Set2 => vec![rfe, lof],
        SetId::Set3 => vec![rfe, lof, smote],
        SetId::Set4 => vec![rfe, smote],
    };
    PipelineConfig {
        name: id.as_str().into(),
        stages: base.into_iter().chain(extra).collect(),
        models: ModelKind::ALL.into_iter().map(ModelConfig::new).collect(),
        cv: CvConfig::default(),
        grids: BTreeMap::new(),
        threshold: default_threshold(),
    }
}
