use serde::{Deserialize, Serialize};

use super::FeatureKind;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Cell storage for one column.
///
/// `Indicator` columns come out of one-hot encoding; scalers leave them alone.
/// Missing numeric cells hold NaN, missing categorical cells the empty string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "values")]
pub enum ColumnData {
    Numerical(Vec<f64>),
    Indicator(Vec<f64>),
    Categorical(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    /// Parent schema feature this column derives from.
    pub source: String,
    pub data: ColumnData,
    pub missing: Vec<bool>,
}

impl Column {
    pub fn numerical(name: impl Into<String>, values: Vec<f64>) -> Self {
        let name = name.into();
        let missing = values.iter().map(|v| v.is_nan()).collect();
        Self {
            source: name.clone(),
            name,
            data: ColumnData::Numerical(values),
            missing,
        }
    }

    pub fn categorical(name: impl Into<String>, values: Vec<Option<String>>) -> Self {
        let name = name.into();
        let missing = values.iter().map(Option::is_none).collect();
        Self {
            source: name.clone(),
            name,
            data: ColumnData::Categorical(values.into_iter().map(Option::unwrap_or_default).collect()),
            missing,
        }
    }

    pub fn len(&self) -> usize {
        self.missing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.data, ColumnData::Categorical(_))
    }

    pub fn is_numerical(&self) -> bool {
        matches!(self.data, ColumnData::Numerical(_))
    }

    pub fn feature_kind(&self) -> FeatureKind {
        if self.is_categorical() {
            FeatureKind::Categorical
        } else {
            FeatureKind::Numerical
        }
    }

    /// Values of a numerical or indicator column.
    pub fn numeric_values(&self) -> Option<&[f64]> {
        match &self.data {
            ColumnData::Numerical(v) | ColumnData::Indicator(v) => Some(v),
            ColumnData::Categorical(_) => None,
        }
    }

    pub fn tokens(&self) -> Option<&[String]> {
        match &self.data {
            ColumnData::Categorical(v) => Some(v),
            _ => None,
        }
    }

    /// Non-missing numeric values.
    pub fn observed_numeric(&self) -> Vec<f64> {
        self.numeric_values()
            .map(|v| {
                v.iter()
                    .zip(&self.missing)
                    .filter(|(_, &m)| !m)
                    .map(|(&x, _)| x)
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn n_missing(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    pub(crate) fn cell_text(&self, i: usize) -> String {
        if self.missing[i] {
            return String::new();
        }
        match &self.data {
            ColumnData::Numerical(v) | ColumnData::Indicator(v) => format!("{}", v[i]),
            ColumnData::Categorical(v) => v[i].clone(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Column {
        let data = match &self.data {
            ColumnData::Numerical(v) => ColumnData::Numerical(rows.iter().map(|&i| v[i]).collect()),
            ColumnData::Indicator(v) => ColumnData::Indicator(rows.iter().map(|&i| v[i]).collect()),
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(rows.iter().map(|&i| v[i].clone()).collect())
            }
        };
        Column {
            name: self.name.clone(),
            source: self.source.clone(),
            data,
            missing: rows.iter().map(|&i| self.missing[i]).collect(),
        }
    }

    fn data_len(&self) -> usize {
        match &self.data {
            ColumnData::Numerical(v) | ColumnData::Indicator(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }
}

/// Column-major table with a per-cell missing mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    n_rows: usize,
    columns: Vec<Column>,
}

impl DataTable {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Column::len);
        for c in &columns {
            if c.len() != n_rows || c.data_len() != n_rows {
                return Err(Error::ShapeMismatch {
                    expected: n_rows,
                    got: c.len().min(c.data_len()),
                });
            }
        }
        Ok(Self { n_rows, columns })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn into_columns(self) -> Vec<Column> {
        self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn is_complete(&self) -> bool {
        self.columns.iter().all(|c| c.missing.iter().all(|&m| !m))
    }

    pub fn has_categorical(&self) -> bool {
        self.columns.iter().any(Column::is_categorical)
    }

    /// Parent feature names in first-appearance order.
    pub fn parents(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.columns {
            if !out.contains(&c.source) {
                out.push(c.source.clone());
            }
        }
        out
    }

    /// Keep only columns whose parent feature is in `parents`.
    pub fn keep_parents(&self, parents: &[String]) -> DataTable {
        DataTable {
            n_rows: self.n_rows,
            columns: self
                .columns
                .iter()
                .filter(|c| parents.contains(&c.source))
                .cloned()
                .collect(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> DataTable {
        DataTable {
            n_rows: rows.len(),
            columns: self.columns.iter().map(|c| c.select_rows(rows)).collect(),
        }
    }

    /// Numeric view; fails on categorical columns or missing cells.
    pub fn to_matrix(&self) -> Result<Matrix> {
        let mut m = Matrix::zeros(self.n_rows, self.columns.len());
        for (j, c) in self.columns.iter().enumerate() {
            let v = c.numeric_values().ok_or_else(|| {
                Error::Data(format!("column `{}` is categorical; encode it first", c.name))
            })?;
            if c.missing.iter().any(|&m| m) {
                return Err(Error::Data(format!(
                    "column `{}` has missing cells; impute or encode first",
                    c.name
                )));
            }
            for (i, &x) in v.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        Ok(m)
    }

    /// Rebuild a fully numeric table from a matrix, reusing this table's
    /// column names, parents and kinds. Row count may differ.
    pub fn with_matrix(&self, m: &Matrix) -> Result<DataTable> {
        if m.n_cols() != self.columns.len() {
            return Err(Error::ShapeMismatch {
                expected: self.columns.len(),
                got: m.n_cols(),
            });
        }
        let columns = self
            .columns
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let v = m.column(j);
                let data = match c.data {
                    ColumnData::Indicator(_) => ColumnData::Indicator(v),
                    ColumnData::Numerical(_) => ColumnData::Numerical(v),
                    ColumnData::Categorical(_) => {
                        return Err(Error::Data(format!("column `{}` is categorical", c.name)))
                    }
                };
                Ok(Column {
                    name: c.name.clone(),
                    source: c.source.clone(),
                    data,
                    missing: vec![false; m.n_rows()],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DataTable {
            n_rows: m.n_rows(),
            columns,
        })
    }

    /// Column index → parent index (into [`DataTable::parents`]).
    pub fn parent_index(&self) -> Vec<usize> {
        let parents = self.parents();
        self.columns
            .iter()
            .map(|c| parents.iter().position(|p| *p == c.source).unwrap_or(0))
            .collect()
    }
}

pub(crate) struct ColumnBuilder {
    name: String,
    kind: FeatureKind,
    numeric: Vec<f64>,
    tokens: Vec<String>,
    missing: Vec<bool>,
}

impl ColumnBuilder {
    pub(crate) fn new(name: String, kind: FeatureKind) -> Self {
        Self {
            name,
            kind,
            numeric: Vec::new(),
            tokens: Vec::new(),
            missing: Vec::new(),
        }
    }

    pub(crate) fn push_missing(&mut self) {
        match self.kind {
            FeatureKind::Numerical => self.numeric.push(f64::NAN),
            FeatureKind::Categorical => self.tokens.push(String::new()),
        }
        self.missing.push(true);
    }

    pub(crate) fn push_numeric(&mut self, v: f64) {
        self.numeric.push(v);
        self.missing.push(false);
    }

    pub(crate) fn push_token(&mut self, t: String) {
        self.tokens.push(t);
        self.missing.push(false);
    }

    pub(crate) fn finish(self) -> Column {
        let data = match self.kind {
            FeatureKind::Numerical => ColumnData::Numerical(self.numeric),
            FeatureKind::Categorical => ColumnData::Categorical(self.tokens),
        };
        Column {
            source: self.name.clone(),
            name: self.name,
            data,
            missing: self.missing,
        }
    }
}
