use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{PipelineConfig, SelectMethod, Stage};
use super::report::{aggregate, Aggregate};
use crate::conditioning::{remove_outliers, smote_tomek, ResampleReport};
use crate::dataset::{make_repeated_stratified_folds, DataTable, LabeledDataset, SplitPlan};
use crate::error::{Error, Result};
use crate::feature_select::{laplacian_score, rfe, select_top_fraction, tree_importance, RfeConfig, SelectionResult};
use crate::metrics::{evaluate, optimal_threshold, roc_curve, ConfusionCounts, DegenerateFlags, MetricReport, ThresholdCriterion};
use crate::models::{grid_search, train, Hyperparameters, TrainedModel};
use crate::rng::{derive, mix};
use crate::transforms::{
    apply_impute, apply_mvae, apply_one_hot, apply_scaler, fit_impute, fit_mvae, fit_one_hot, fit_scaler_with,
    FittedTransform, UnseenCategories,
};

/// Metrics in percent (MCC in percent of its [-1, 1] range).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub roc_auc: Option<f64>,
    pub mcc: f64,
}

impl PercentMetrics {
    pub fn from_report(r: &MetricReport) -> Self {
        Self {
            accuracy: 100.0 * r.accuracy,
            f1: 100.0 * r.f1,
            precision: 100.0 * r.precision,
            recall: 100.0 * r.recall,
            roc_auc: r.roc_auc.map(|v| 100.0 * v),
            mcc: 100.0 * r.mcc,
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "accuracy" => Some(self.accuracy),
            "f1" => Some(self.f1),
            "precision" => Some(self.precision),
            "recall" => Some(self.recall),
            "roc_auc" => self.roc_auc,
            "mcc" => Some(self.mcc),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub model: String,
    pub repeat: usize,
    pub fold: usize,
    pub metrics: PercentMetrics,
    pub counts: ConfusionCounts,
    pub degenerate: DegenerateFlags,
    /// Youden-optimal validation threshold; auxiliary, not used for metrics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub youden_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldManifest {
    pub repeat: usize,
    pub fold: usize,
    pub n_train: usize,
    pub n_valid: usize,
    /// Training rows reaching the models (after LOF / resampling).
    pub n_train_conditioned: usize,
    /// Validation rows reaching the models; always equals `n_valid`.
    pub n_valid_scored: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionResult>,
    /// Dataset row indices removed as LOF outliers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lof_removed: Option<Vec<usize>>,
    /// Tomek removals are reported as dataset row indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample: Option<ResampleReport>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub unseen_categories: UnseenCategories,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grid_choices: BTreeMap<String, Hyperparameters>,
    /// Digest of every fitted transform, selection and model in this fold.
    pub state_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: PipelineConfig,
    pub seed: u64,
    pub dataset_fingerprint: String,
    pub n_rows: usize,
    /// [negatives, positives]
    pub class_counts: [usize; 2],
    pub split_digest: String,
    pub folds: Vec<FoldManifest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub manifest: Manifest,
    pub folds: Vec<FoldRecord>,
    pub aggregates: BTreeMap<String, BTreeMap<String, Aggregate>>,
}

impl ExperimentResult {
    pub fn name(&self) -> &str {
        &self.manifest.config.name
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Everything fitted in one fold, for inspection and leakage probes.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldArtifacts {
    pub transforms: Vec<FittedTransform>,
    pub selection: Option<SelectionResult>,
    pub models: Vec<TrainedModel>,
    pub manifest: FoldManifest,
    pub records: Vec<FoldRecord>,
}

fn digest_hex(parts: &[String]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update(b"\n");
    }
    let d = h.finalize();
    d[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn split_digest(plan: &SplitPlan) -> String {
    digest_hex(&[serde_json::to_string(plan).unwrap_or_default()])
}

const STAGE_STREAM: u64 = 100;
const MODEL_STREAM: u64 = 200;
const GRID_STREAM: u64 = 300;

fn to_model_matrix(t: &DataTable, part: &str) -> Result<crate::matrix::Matrix> {
    if t.has_categorical() {
        return Err(Error::Config(format!(
            "{part} data still has categorical columns; add a one_hot stage"
        )));
    }
    t.to_matrix()
}

/// Fit every stage on the training partition of (repeat, fold), apply the
/// fit-on-train stages to the validation partition, condition the training
/// partition, train and score every model.
pub fn fit_fold(
    ds: &LabeledDataset,
    cfg: &PipelineConfig,
    plan: &SplitPlan,
    repeat: usize,
    fold: usize,
) -> Result<FoldArtifacts> {
    let (train_rows, valid_rows) = plan.split(repeat, fold);
    let mut tr = ds.table.select_rows(&train_rows);
    let mut va = ds.table.select_rows(&valid_rows);
    let mut ytr: Vec<u8> = train_rows.iter().map(|&i| ds.labels[i]).collect();
    let yva: Vec<u8> = valid_rows.iter().map(|&i| ds.labels[i]).collect();
    // dataset row behind each current training row (synthetic rows: none)
    let mut origin: Vec<Option<usize>> = train_rows.iter().map(|&i| Some(i)).collect();

    let mut transforms = Vec::new();
    let mut selection = None;
    let mut lof_removed = None;
    let mut resample = None;
    let mut unseen = UnseenCategories::new();
    let seed = cfg.cv.seed;
    let coord = [repeat as u64, fold as u64];

    for (si, stage) in cfg.stages.iter().enumerate() {
        let stage_seed = derive(seed, &[coord[0], coord[1], STAGE_STREAM + si as u64]);
        match stage {
            Stage::Mvae => {
                let s = fit_mvae(&tr)?;
                tr = apply_mvae(&s, &tr)?;
                va = apply_mvae(&s, &va)?;
                transforms.push(FittedTransform::Mvae(s));
            }
            Stage::Impute(strategy) => {
                let s = fit_impute(*strategy, &tr)?;
                tr = apply_impute(&s, &tr)?;
                va = apply_impute(&s, &va)?;
                transforms.push(FittedTransform::Imputer(s));
            }
            Stage::Scale {
                kind,
                exempt_sentinel,
            } => {
                let s = fit_scaler_with(*kind, &tr, *exempt_sentinel)?;
                tr = apply_scaler(&s, &tr)?;
                va = apply_scaler(&s, &va)?;
                transforms.push(FittedTransform::Scaler(s));
            }
            Stage::OneHot => {
                let s = fit_one_hot(&tr);
                tr = apply_one_hot(&s, &tr)?.0;
                let (v, u) = apply_one_hot(&s, &va)?;
                va = v;
                for (k, n) in u {
                    *unseen.entry(k).or_default() += n;
                }
                transforms.push(FittedTransform::OneHot(s));
            }
            Stage::Select(spec) => {
                let result = match (&spec.frozen, &spec.method) {
                    (Some(kept), _) => {
                        let parents = tr.parents();
                        if let Some(bad) = kept.iter().find(|k| !parents.contains(k)) {
                            return Err(Error::UnknownColumn(bad.clone()));
                        }
                        SelectionResult {
                            method: "frozen".into(),
                            kept: parents.into_iter().filter(|p| kept.contains(p)).collect(),
                            config: serde_json::to_value(kept)?,
                            ranking: None,
                            rfe_trace: Vec::new(),
                        }
                    }
                    (None, SelectMethod::Rfe(r)) => {
                        let r = RfeConfig {
                            seed: mix(r.seed, stage_seed),
                            estimator: {
                                let mut e = r.estimator.clone();
                                e.seed = mix(e.seed, stage_seed);
                                e
                            },
                            ..r.clone()
                        };
                        rfe(&tr, &ytr, &r)?
                    }
                    (None, SelectMethod::Laplacian { k_graph, fraction }) => {
                        select_top_fraction(&laplacian_score(&tr, *k_graph)?, *fraction)?
                    }
                    (None, SelectMethod::TreeImportance { fraction, forest }) => {
                        let mut f = forest.clone();
                        f.seed = mix(f.seed, stage_seed);
                        select_top_fraction(&tree_importance(&tr, &ytr, &f)?, *fraction)?
                    }
                };
                tr = tr.keep_parents(&result.kept);
                va = va.keep_parents(&result.kept);
                selection = Some(result);
            }
            Stage::LofRemove(lof) => {
                let x = to_model_matrix(&tr, "training")?;
                let out = remove_outliers(&x, &ytr, lof)?;
                tr = tr.select_rows(&out.kept);
                ytr = out.kept.iter().map(|&i| ytr[i]).collect();
                lof_removed = Some(out.removed.iter().filter_map(|&i| origin[i]).collect());
                origin = out.kept.iter().map(|&i| origin[i]).collect();
            }
            Stage::SmoteTomek(p) => {
                let x = to_model_matrix(&tr, "training")?;
                let mut p = *p;
                p.seed = mix(p.seed, stage_seed);
                let (xo, yo, mut report) = smote_tomek(&x, &ytr, &p)?;
                report.tomek_removed = report.tomek_removed.iter().filter_map(|&i| origin[i]).collect();
                tr = tr.with_matrix(&xo)?;
                ytr = yo;
                origin.clear();
                resample = Some(report);
            }
        }
    }

    if va.n_rows() != valid_rows.len() {
        return Err(Error::Data(format!(
            "validation partition changed size: {} -> {}",
            valid_rows.len(),
            va.n_rows()
        )));
    }
    let xtr = to_model_matrix(&tr, "training")?;
    let xva = to_model_matrix(&va, "validation")?;
    if !(ytr.contains(&0) && ytr.contains(&1)) {
        return Err(Error::SingleClass);
    }

    let mut models = Vec::with_capacity(cfg.models.len());
    let mut records = Vec::with_capacity(cfg.models.len());
    let mut grid_choices = BTreeMap::new();
    for (mi, mc) in cfg.models.iter().enumerate() {
        let mut mc = mc.clone();
        mc.seed = mix(mc.seed, derive(seed, &[coord[0], coord[1], MODEL_STREAM + mi as u64]));
        if let Some(spec) = cfg.grids.get(&mc.kind) {
            let grid_seed = derive(seed, &[coord[0], coord[1], GRID_STREAM + mi as u64]);
            let found = grid_search(spec, &mc, &xtr, &ytr, grid_seed)?;
            grid_choices.insert(mc.label(), found.best.params.clone());
            mc = found.best;
        }
        let m = train(&mc, &xtr, &ytr)?;
        let scores = m.score(&xva)?;
        let pred = m.predict(&xva, cfg.threshold)?;
        let (counts, report) = evaluate(&yva, &scores, &pred)?;
        let youden_threshold = roc_curve(&yva, &scores)
            .and_then(|c| optimal_threshold(&c, ThresholdCriterion::Youden))
            .ok()
            .filter(|t| t.is_finite());
        records.push(FoldRecord {
            model: mc.label(),
            repeat,
            fold,
            metrics: PercentMetrics::from_report(&report),
            counts,
            degenerate: report.degenerate,
            youden_threshold,
        });
        models.push(m);
    }

    let mut parts: Vec<String> = transforms
        .iter()
        .map(|t| t.to_json())
        .collect::<Result<_>>()?;
    parts.push(serde_json::to_string(&selection.as_ref().map(|s| &s.kept))?);
    for m in &models {
        parts.push(m.to_json()?);
    }
    let manifest = FoldManifest {
        repeat,
        fold,
        n_train: train_rows.len(),
        n_valid: valid_rows.len(),
        n_train_conditioned: xtr.n_rows(),
        n_valid_scored: xva.n_rows(),
        selection: selection.clone(),
        lof_removed,
        resample,
        unseen_categories: unseen,
        grid_choices,
        state_digest: digest_hex(&parts),
    };
    Ok(FoldArtifacts {
        transforms,
        selection,
        models,
        manifest,
        records,
    })
}

/// Repeated stratified CV of every configured model under the pipeline.
pub fn run_experiment(ds: &LabeledDataset, cfg: &PipelineConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let plan = make_repeated_stratified_folds(ds, cfg.cv.k, cfg.cv.repeats, cfg.cv.seed)?;
    run_experiment_with_plan(ds, cfg, &plan)
}

pub fn run_experiment_with_plan(ds: &LabeledDataset, cfg: &PipelineConfig, plan: &SplitPlan) -> Result<ExperimentResult> {
    cfg.validate()?;
    if plan.n_rows() != ds.n_rows() {
        return Err(Error::ShapeMismatch {
            expected: ds.n_rows(),
            got: plan.n_rows(),
        });
    }
    let outcomes: Vec<FoldArtifacts> = plan
        .coordinates()
        .into_par_iter()
        .map(|(r, f)| fit_fold(ds, cfg, plan, r, f).map_err(|e| e.at_fold(r, f)))
        .collect::<Result<_>>()?;
    let labels = cfg.model_labels();
    let mut folds: Vec<FoldRecord> = Vec::new();
    let mut manifests = Vec::new();
    for o in outcomes {
        folds.extend(o.records);
        manifests.push(o.manifest);
    }
    let model_pos = |m: &str| labels.iter().position(|l| l == m).unwrap_or(usize::MAX);
    folds.sort_by(|a, b| {
        model_pos(&a.model)
            .cmp(&model_pos(&b.model))
            .then(a.repeat.cmp(&b.repeat))
            .then(a.fold.cmp(&b.fold))
    });
    let (n0, n1) = ds.class_counts();
    Ok(ExperimentResult {
        aggregates: aggregate(&folds),
        manifest: Manifest {
            config: cfg.clone(),
            seed: cfg.cv.seed,
            dataset_fingerprint: ds.fingerprint(),
            n_rows: ds.n_rows(),
            class_counts: [n0, n1],
            split_digest: split_digest(plan),
            folds: manifests,
        },
        folds,
    })
}
