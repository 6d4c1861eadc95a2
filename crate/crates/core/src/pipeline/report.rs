use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::{ExperimentResult, FoldRecord};
use crate::error::{Error, Result};
use crate::metrics::{paired_test, WilcoxonMethod, METRIC_NAMES};
use crate::models::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Population standard deviation over folds.
    pub std: f64,
    /// Folds contributing (AUC skips folds where it is undefined).
    pub n: usize,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean ± std of every metric per model, from stored fold records.
pub fn aggregate(folds: &[FoldRecord]) -> BTreeMap<String, BTreeMap<String, Aggregate>> {
    let mut by_model: BTreeMap<String, Vec<&FoldRecord>> = BTreeMap::new();
    for r in folds {
        by_model.entry(r.model.clone()).or_default().push(r);
    }
    by_model
        .into_iter()
        .map(|(model, recs)| {
            let metrics = METRIC_NAMES
                .iter()
                .filter_map(|&name| {
                    let vals: Vec<f64> = recs.iter().filter_map(|r| r.metrics.get(name)).collect();
                    if vals.is_empty() {
                        return None;
                    }
                    let (mean, std) = mean_std(&vals);
                    Some((
                        name.to_string(),
                        Aggregate {
                            mean,
                            std,
                            n: vals.len(),
                        },
                    ))
                })
                .collect();
            (model, metrics)
        })
        .collect()
}

/// Table cell in percent with one decimal, e.g. "38.2 (± 5.6)".
pub fn format_cell_percent(mean: f64, std: f64) -> String {
    format!("{mean:.1} (± {std:.1})")
}

/// Same as [`format_cell_percent`] for values given as fractions.
pub fn format_cell(mean: f64, std: f64) -> String {
    format_cell_percent(100.0 * mean, 100.0 * std)
}

/// Plain-text results table: one row per model, one column per metric.
pub fn render_table(r: &ExperimentResult) -> String {
    let mut out = format!("{} ({} folds per model)\n", r.name(), r.manifest.folds.len());
    out.push_str(&format!("{:<22}", "model"));
    for m in METRIC_NAMES {
        out.push_str(&format!("{m:>16}"));
    }
    out.push('\n');
    for label in r.manifest.config.model_labels() {
        out.push_str(&format!("{label:<22}"));
        for m in METRIC_NAMES {
            let cell = r
                .aggregates
                .get(&label)
                .and_then(|a| a.get(m))
                .map_or_else(|| "n/a".to_string(), |a| format_cell_percent(a.mean, a.std));
            out.push_str(&format!("{cell:>16}"));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub mean_a: f64,
    pub mean_b: f64,
    /// mean_b − mean_a, in percentage points.
    pub delta: f64,
    pub n_pairs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_method: Option<WilcoxonMethod>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub model: String,
    pub kind: ModelKind,
    pub metrics: BTreeMap<String, MetricComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub a: String,
    pub b: String,
    pub dataset_fingerprint: String,
    pub models: Vec<ModelComparison>,
    pub tree_models: Vec<String>,
    /// Mean over tree models of the F1 and MCC deltas.
    pub tree_average_delta: BTreeMap<String, f64>,
    /// Reference tree-model deltas carried as an annotation; never asserted.
    pub reference_tree_average_delta: BTreeMap<String, f64>,
}

fn fold_values(r: &ExperimentResult, model: &str, metric: &str) -> BTreeMap<(usize, usize), Option<f64>> {
    r.folds
        .iter()
        .filter(|f| f.model == model)
        .map(|f| ((f.repeat, f.fold), f.metrics.get(metric)))
        .collect()
}

/// Per-model, per-metric deltas (b − a) with paired Wilcoxon tests over
/// aligned folds.
pub fn compare(a: &ExperimentResult, b: &ExperimentResult) -> Result<ComparisonReport> {
    let (ma, mb) = (&a.manifest, &b.manifest);
    if ma.dataset_fingerprint != mb.dataset_fingerprint {
        return Err(Error::Config(format!(
            "results come from different datasets ({} vs {})",
            ma.dataset_fingerprint, mb.dataset_fingerprint
        )));
    }
    if ma.config.cv != mb.config.cv || ma.split_digest != mb.split_digest {
        return Err(Error::Config("results use different cross-validation plans".into()));
    }
    let labels = ma.config.model_labels();
    let mut lb = mb.config.model_labels();
    let mut la = labels.clone();
    la.sort();
    lb.sort();
    if la != lb {
        return Err(Error::Config("results have different model lists".into()));
    }
    let mut models = Vec::new();
    for (label, cfg) in labels.iter().zip(&ma.config.models) {
        let mut metrics = BTreeMap::new();
        for metric in METRIC_NAMES {
            let va = fold_values(a, label, metric);
            let vb = fold_values(b, label, metric);
            let (xs, ys): (Vec<f64>, Vec<f64>) = va
                .iter()
                .filter_map(|(k, x)| Some(((*x)?, vb.get(k).copied().flatten()?)))
                .unzip();
            if xs.is_empty() {
                continue;
            }
            let mean_a = xs.iter().sum::<f64>() / xs.len() as f64;
            let mean_b = ys.iter().sum::<f64>() / ys.len() as f64;
            let test = paired_test(&xs, &ys).ok();
            metrics.insert(
                metric.to_string(),
                MetricComparison {
                    mean_a,
                    mean_b,
                    delta: mean_b - mean_a,
                    n_pairs: xs.len(),
                    p_value: test.as_ref().map(|t| t.p_value),
                    test_method: test.map(|t| t.method),
                },
            );
        }
        models.push(ModelComparison {
            model: label.clone(),
            kind: cfg.kind,
            metrics,
        });
    }
    let tree: Vec<&ModelComparison> = models.iter().filter(|m| m.kind.is_tree_model()).collect();
    let mut tree_average_delta = BTreeMap::new();
    if !tree.is_empty() {
        for metric in ["f1", "mcc"] {
            let deltas: Vec<f64> = tree.iter().filter_map(|m| m.metrics.get(metric).map(|c| c.delta)).collect();
            if !deltas.is_empty() {
                tree_average_delta.insert(metric.to_string(), deltas.iter().sum::<f64>() / deltas.len() as f64);
            }
        }
    }
    Ok(ComparisonReport {
        a: a.name().to_string(),
        b: b.name().to_string(),
        dataset_fingerprint: ma.dataset_fingerprint.clone(),
        tree_models: tree.iter().map(|m| m.model.clone()).collect(),
        models,
        tree_average_delta,
        reference_tree_average_delta: [("f1".to_string(), 3.6), ("mcc".to_string(), 2.7)].into(),
    })
}

impl ComparisonReport {
    pub fn render(&self) -> String {
        let mut out = format!("{} → {} (deltas in percentage points, Wilcoxon p)\n", self.a, self.b);
        for m in &self.models {
            out.push_str(&format!("{:<22}", m.model));
            for metric in METRIC_NAMES {
                if let Some(c) = m.metrics.get(metric) {
                    let p = c.p_value.map_or_else(|| "n/a".into(), |p| format!("{p:.3}"));
                    out.push_str(&format!("  {metric} {:+.2} (p={p})", c.delta));
                }
            }
            out.push('\n');
        }
        for (metric, d) in &self.tree_average_delta {
            out.push_str(&format!("tree-model average {metric} delta: {d:+.2}\n"));
        }
        out
    }
}

pub fn export_result(r: &ExperimentResult, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, r.to_json()?)?;
    Ok(())
}

pub fn import_result(path: impl AsRef<Path>) -> Result<ExperimentResult> {
    ExperimentResult::from_json(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarRow {
    pub group: String,
    pub model: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
}

/// One row per (result, model, metric) for bar charts.
pub fn bar_rows(results: &[&ExperimentResult]) -> Vec<BarRow> {
    let mut rows = Vec::new();
    for r in results {
        for label in r.manifest.config.model_labels() {
            for metric in METRIC_NAMES {
                if let Some(a) = r.aggregates.get(&label).and_then(|m| m.get(metric)) {
                    rows.push(BarRow {
                        group: r.name().to_string(),
                        model: label.clone(),
                        metric: metric.to_string(),
                        mean: a.mean,
                        std: a.std,
                    });
                }
            }
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    pub group: String,
    pub model: String,
    pub repeat: usize,
    pub fold: usize,
    pub metric: String,
    pub value: f64,
}

/// Long format: one row per (result, model, fold, metric) for box plots.
pub fn fold_rows(results: &[&ExperimentResult]) -> Vec<FoldRow> {
    let mut rows = Vec::new();
    for r in results {
        for f in &r.folds {
            for metric in METRIC_NAMES {
                if let Some(value) = f.metrics.get(metric) {
                    rows.push(FoldRow {
                        group: r.name().to_string(),
                        model: f.model.clone(),
                        repeat: f.repeat,
                        fold: f.fold,
                        metric: metric.to_string(),
                        value,
                    });
                }
            }
        }
    }
    rows
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Write `bars.csv` and `folds.csv` into `dir`; returns the two paths.
pub fn export_plot_data(results: &[&ExperimentResult], dir: impl AsRef<Path>) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let bars = dir.join("bars.csv");
    let folds = dir.join("folds.csv");
    write_csv(&bars, &bar_rows(results))?;
    write_csv(&folds, &fold_rows(results))?;
    Ok((bars, folds))
}
