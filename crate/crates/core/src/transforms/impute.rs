use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::column_index;
use crate::dataset::{Column, ColumnData, DataTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "strategy")]
pub enum ImputeStrategy {
    /// Mean for numerical columns, mode for categorical ones.
    Mean,
    /// Most frequent value everywhere (ties: smallest value).
    Mode,
    /// Fill from the k nearest complete training rows.
    Knn { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FillValue {
    Number(f64),
    Token(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnFill {
    pub column: String,
    pub value: FillValue,
}

/// Complete training rows retained for KNN imputation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnReference {
    pub columns: Vec<String>,
    /// Per column: Some((min, max)) for numeric columns, None for categorical.
    pub ranges: Vec<Option<(f64, f64)>>,
    pub rows: Vec<Vec<FillValue>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedImputer {
    pub strategy: ImputeStrategy,
    pub fills: Vec<ColumnFill>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<KnnReference>,
}

pub fn fit_impute(strategy: ImputeStrategy, train: &DataTable) -> Result<FittedImputer> {
    match strategy {
        ImputeStrategy::Mean | ImputeStrategy::Mode => {
            let fills = train
                .columns()
                .iter()
                .map(|c| {
                    let value = simple_fill(c, strategy)?;
                    Ok(ColumnFill {
                        column: c.name.clone(),
                        value,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(FittedImputer {
                strategy,
                fills,
                reference: None,
            })
        }
        ImputeStrategy::Knn { k } => {
            if k == 0 {
                return Err(Error::Config("knn imputation needs k >= 1".into()));
            }
            let complete: Vec<usize> = (0..train.n_rows())
                .filter(|&i| train.columns().iter().all(|c| !c.missing[i]))
                .collect();
            if complete.len() < k {
                return Err(Error::InsufficientRows(format!(
                    "knn imputation with k={k} needs {k} complete training rows, found {}",
                    complete.len()
                )));
            }
            let ranges = train
                .columns()
                .iter()
                .map(|c| {
                    c.numeric_values().map(|_| {
                        let v = c.observed_numeric();
                        (
                            v.iter().copied().fold(f64::INFINITY, f64::min),
                            v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                        )
                    })
                })
                .collect();
            let rows = complete
                .iter()
                .map(|&i| train.columns().iter().map(|c| cell(c, i)).collect())
                .collect();
            Ok(FittedImputer {
                strategy,
                fills: Vec::new(),
                reference: Some(KnnReference {
                    columns: train.columns().iter().map(|c| c.name.clone()).collect(),
                    ranges,
                    rows,
                }),
            })
        }
    }
}

fn cell(c: &Column, i: usize) -> FillValue {
    match &c.data {
        ColumnData::Numerical(v) | ColumnData::Indicator(v) => FillValue::Number(v[i]),
        ColumnData::Categorical(v) => FillValue::Token(v[i].clone()),
    }
}

fn simple_fill(c: &Column, strategy: ImputeStrategy) -> Result<FillValue> {
    let empty = || Error::Data(format!("column `{}` has no observed training values", c.name));
    match &c.data {
        ColumnData::Categorical(v) => {
            let observed = v.iter().zip(&c.missing).filter(|(_, &m)| !m).map(|(t, _)| t.clone());
            mode(observed).map(FillValue::Token).ok_or_else(empty)
        }
        ColumnData::Numerical(_) | ColumnData::Indicator(_) => {
            let v = c.observed_numeric();
            if v.is_empty() {
                return Err(empty());
            }
            if strategy == ImputeStrategy::Mode {
                let m = mode(v.iter().map(|x| OrderedF64(*x))).ok_or_else(empty)?;
                Ok(FillValue::Number(m.0))
            } else {
                Ok(FillValue::Number(v.iter().sum::<f64>() / v.len() as f64))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrderedF64(f64);
impl Eq for OrderedF64 {}
impl PartialOrd for OrderedF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrderedF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Most frequent item; ties resolve to the smallest.
fn mode<T: Ord>(items: impl Iterator<Item = T>) -> Option<T> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for it in items {
        *counts.entry(it).or_default() += 1;
    }
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|(_, c)| *c == best).map(|(t, _)| t)
}

pub fn apply_impute(imp: &FittedImputer, t: &DataTable) -> Result<DataTable> {
    let mut columns: Vec<Column> = t.columns().to_vec();
    match &imp.reference {
        None => {
            for f in &imp.fills {
                let j = column_index(t, &f.column)?;
                fill_column(&mut columns[j], |_| f.value.clone())?;
            }
        }
        Some(reference) => {
            let idx: Vec<usize> = reference
                .columns
                .iter()
                .map(|c| column_index(t, c))
                .collect::<Result<_>>()?;
            let k = match imp.strategy {
                ImputeStrategy::Knn { k } => k,
                _ => unreachable!("reference only exists for knn"),
            };
            for i in 0..t.n_rows() {
                if idx.iter().all(|&j| !t.columns()[j].missing[i]) {
                    continue;
                }
                let neighbors = knn_reference_neighbors(reference, t, &idx, i, k);
                for (r, &j) in idx.iter().enumerate() {
                    if !t.columns()[j].missing[i] {
                        continue;
                    }
                    let value = neighbor_fill(reference, r, &neighbors);
                    set_cell(&mut columns[j], i, value)?;
                }
            }
        }
    }
    DataTable::new(columns)
}

/// Distance from row `i` of `t` to every reference row over the query's
/// observed columns: min-max scaled squared differences for numeric
/// columns plus a 0/1 mismatch for categorical ones. Nearest `k`, ties by
/// reference row order.
pub(crate) fn knn_reference_neighbors(
    reference: &KnnReference,
    t: &DataTable,
    idx: &[usize],
    i: usize,
    k: usize,
) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = reference
        .rows
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let mut s = 0.0;
            for (c, &j) in idx.iter().enumerate() {
                let col = &t.columns()[j];
                if col.missing[i] {
                    continue;
                }
                match (&row[c], reference.ranges[c]) {
                    (FillValue::Number(x), Some((lo, hi))) => {
                        let q = col.numeric_values().map_or(0.0, |v| v[i]);
                        let span = if hi > lo { hi - lo } else { 1.0 };
                        s += ((q - x) / span).powi(2);
                    }
                    (FillValue::Token(tok), _) => {
                        let q = col.tokens().map_or("", |v| v[i].as_str());
                        if q != tok {
                            s += 1.0;
                        }
                    }
                    _ => {}
                }
            }
            (s, r)
        })
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, r)| r).collect()
}

fn neighbor_fill(reference: &KnnReference, col: usize, neighbors: &[usize]) -> FillValue {
    match reference.ranges[col] {
        Some(_) => {
            let sum: f64 = neighbors
                .iter()
                .map(|&r| match &reference.rows[r][col] {
                    FillValue::Number(x) => *x,
                    FillValue::Token(_) => 0.0,
                })
                .sum();
            FillValue::Number(sum / neighbors.len() as f64)
        }
        None => {
            let tokens = neighbors.iter().filter_map(|&r| match &reference.rows[r][col] {
                FillValue::Token(t) => Some(t.clone()),
                FillValue::Number(_) => None,
            });
            FillValue::Token(mode(tokens).unwrap_or_default())
        }
    }
}

fn fill_column(col: &mut Column, value: impl Fn(usize) -> FillValue) -> Result<()> {
    for i in 0..col.len() {
        if col.missing[i] {
            set_cell(col, i, value(i))?;
        }
    }
    Ok(())
}

fn set_cell(col: &mut Column, i: usize, value: FillValue) -> Result<()> {
    match (&mut col.data, value) {
        (ColumnData::Numerical(v) | ColumnData::Indicator(v), FillValue::Number(x)) => v[i] = x,
        (ColumnData::Categorical(v), FillValue::Token(t)) => v[i] = t,
        _ => {
            return Err(Error::Data(format!(
                "fill value kind does not match column `{}`",
                col.name
            )))
        }
    }
    col.missing[i] = false;
    Ok(())
}
