//! Schema-driven tabular data: ingestion, typed column storage, class ratio,
//! stratified cross-validation plans and cohort statistics.

mod cohort;
mod folds;
mod synth;
mod table;

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use cohort::{cohort_summary, CategoryCount, CohortReport, FeatureSummary, NumericSummary};
pub use folds::{make_repeated_stratified_folds, stratified_folds_for_labels, SplitPlan};
pub use synth::{synthetic_dataset, SynthConfig};
pub use table::{Column, ColumnData, DataTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numerical,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default)]
    pub missing_markers: Vec<String>,
}

/// Column typing for a labeled CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub label_column: String,
    pub positive_label: String,
    pub features: Vec<FeatureSpec>,
}

impl FeatureSchema {
    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Schema("schema declares no features".into()));
        }
        let mut seen = HashSet::new();
        for f in &self.features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature `{}`", f.name)));
            }
        }
        if seen.contains(self.label_column.as_str()) {
            return Err(Error::Schema(format!(
                "label column `{}` is also declared as a feature",
                self.label_column
            )));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let schema: FeatureSchema = serde_json::from_str(s)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureSpec> {
        self.features.iter().find(|f| f.name == name)
    }
}

/// A typed table plus one binary label per row (1 = positive / minority).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub schema: FeatureSchema,
    pub table: DataTable,
    pub labels: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_in_file: usize,
    pub rows_loaded: usize,
    pub rows_excluded_missing_label: usize,
}

impl LabeledDataset {
    pub fn new(schema: FeatureSchema, table: DataTable, labels: Vec<u8>) -> Result<Self> {
        schema.validate()?;
        if labels.len() != table.n_rows() {
            return Err(Error::ShapeMismatch {
                expected: table.n_rows(),
                got: labels.len(),
            });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::Data("labels must be 0 or 1".into()));
        }
        Ok(Self {
            schema,
            table,
            labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    /// (negatives, positives)
    pub fn class_counts(&self) -> (usize, usize) {
        class_counts(&self.labels)
    }

    pub fn is_single_class(&self) -> bool {
        let (n0, n1) = self.class_counts();
        n0 == 0 || n1 == 0
    }

    pub fn subset(&self, rows: &[usize]) -> LabeledDataset {
        LabeledDataset {
            schema: self.schema.clone(),
            table: self.table.select_rows(rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Render as CSV with the empty string standing in for missing cells.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let header: Vec<&str> = self
            .table
            .columns()
            .iter()
            .map(|c| c.name.as_str())
            .chain(std::iter::once(self.schema.label_column.as_str()))
            .collect();
        out.push_str(&csv_line(header.iter().copied()));
        let negative = negative_label(&self.schema);
        for i in 0..self.n_rows() {
            let mut cells: Vec<String> = self.table.columns().iter().map(|c| c.cell_text(i)).collect();
            cells.push(if self.labels[i] == 1 {
                self.schema.positive_label.clone()
            } else {
                negative.clone()
            });
            out.push_str(&csv_line(cells.iter().map(String::as_str)));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    /// 64-bit fingerprint of the canonical CSV rendering plus the schema JSON.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_string(&self.schema).unwrap_or_default().as_bytes());
        h.update(b"\n");
        h.update(self.to_csv_string().as_bytes());
        let digest = h.finalize();
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        format!("{:016x}", u64::from_be_bytes(word))
    }
}

fn negative_label(schema: &FeatureSchema) -> String {
    if schema.positive_label == "0" {
        "1".into()
    } else if schema.positive_label == "1" {
        "0".into()
    } else {
        format!("not_{}", schema.positive_label)
    }
}

fn csv_line<'a>(cells: impl Iterator<Item = &'a str>) -> String {
    let mut line = cells
        .map(|c| {
            if c.contains([',', '"', '\n', '\r']) {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}

pub fn class_counts(labels: &[u8]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    (labels.len() - pos, pos)
}

/// Read a labeled CSV according to `schema`.
///
/// Rows whose label cell is empty are dropped and counted in the report.
pub fn load_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<(LabeledDataset, LoadReport)> {
    let file = fs::File::open(path)?;
    load_csv_reader(file, schema)
}

pub fn load_csv_reader<R: std::io::Read>(
    reader: R,
    schema: &FeatureSchema,
) -> Result<(LabeledDataset, LoadReport)> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();

    let mut label_pos = None;
    let mut feature_pos = vec![None; schema.features.len()];
    for (i, h) in headers.iter().enumerate() {
        let h = h.trim();
        if h == schema.label_column {
            label_pos = Some(i);
        } else if let Some(j) = schema.features.iter().position(|f| f.name == h) {
            feature_pos[j] = Some(i);
        } else {
            return Err(Error::UnknownColumn(h.to_string()));
        }
    }
    let label_pos = label_pos
        .ok_or_else(|| Error::Schema(format!("label column `{}` not in header", schema.label_column)))?;
    let feature_pos: Vec<usize> = feature_pos
        .into_iter()
        .zip(&schema.features)
        .map(|(p, f)| p.ok_or_else(|| Error::Schema(format!("feature `{}` not in header", f.name))))
        .collect::<Result<_>>()?;

    let mut builders: Vec<table::ColumnBuilder> = schema
        .features
        .iter()
        .map(|f| table::ColumnBuilder::new(f.name.clone(), f.kind))
        .collect();
    let mut labels = Vec::new();
    let mut rows_in_file = 0;
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        rows_in_file += 1;
        let label = record.get(label_pos).unwrap_or("").trim();
        if label.is_empty() {
            continue;
        }
        for ((spec, &pos), b) in schema.features.iter().zip(&feature_pos).zip(&mut builders) {
            let raw = record.get(pos).unwrap_or("");
            let token = raw.trim();
            if spec.missing_markers.iter().any(|m| m == raw || m.trim() == token) {
                b.push_missing();
                continue;
            }
            match spec.kind {
                FeatureKind::Numerical => {
                    let v: f64 = token.parse().map_err(|_| Error::NonNumeric {
                        column: spec.name.clone(),
                        row: line + 1,
                        token: raw.to_string(),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::NonNumeric {
                            column: spec.name.clone(),
                            row: line + 1,
                            token: raw.to_string(),
                        });
                    }
                    b.push_numeric(v);
                }
                FeatureKind::Categorical => b.push_token(token.to_string()),
            }
        }
        labels.push(u8::from(label == schema.positive_label));
    }
    let table = DataTable::new(builders.into_iter().map(table::ColumnBuilder::finish).collect())?;
    let report = LoadReport {
        rows_in_file,
        rows_loaded: labels.len(),
        rows_excluded_missing_label: rows_in_file - labels.len(),
    };
    Ok((LabeledDataset::new(schema.clone(), table, labels)?, report))
}

/// n_minority / n_majority.
pub fn class_ratio(ds: &LabeledDataset) -> Result<f64> {
    class_ratio_of(&ds.labels)
}

pub fn class_ratio_of(labels: &[u8]) -> Result<f64> {
    let (n0, n1) = class_counts(labels);
    if n0 == 0 || n1 == 0 {
        return Err(Error::SingleClass);
    }
    Ok(n0.min(n1) as f64 / n0.max(n1) as f64)
}
