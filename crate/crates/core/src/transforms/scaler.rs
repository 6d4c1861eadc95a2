use serde::{Deserialize, Serialize};

use super::{column_index, MVAE_SENTINEL};
use crate::dataset::{Column, ColumnData, DataTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerKind {
    MinMax,
    Standard,
    Robust,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScaleParams {
    MinMax { min: f64, max: f64 },
    Standard { mean: f64, std: f64 },
    Robust { q1: f64, q2: f64, q3: f64 },
}

impl ScaleParams {
    /// (center, spread); a zero spread maps every value to 0.
    fn center_spread(&self) -> (f64, f64) {
        match *self {
            ScaleParams::MinMax { min, max } => (min, max - min),
            ScaleParams::Standard { mean, std } => (mean, std),
            ScaleParams::Robust { q1, q2, q3 } => (q2, q3 - q1),
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        let (c, s) = self.center_spread();
        if s > 0.0 {
            (x - c) / s
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub column: String,
    pub params: ScaleParams,
}

/// Per-column scaling parameters for the numerical columns of a table.
/// Indicator (one-hot) and categorical columns are left untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedScaler {
    pub kind: ScalerKind,
    /// When set, cells equal to the MVAE sentinel (-1) are neither used for
    /// fitting nor transformed.
    #[serde(default)]
    pub exempt_sentinel: bool,
    pub columns: Vec<ColumnScale>,
}

pub fn fit_scaler(kind: ScalerKind, train: &DataTable) -> Result<FittedScaler> {
    fit_scaler_with(kind, train, false)
}

pub fn fit_scaler_with(kind: ScalerKind, train: &DataTable, exempt_sentinel: bool) -> Result<FittedScaler> {
    let mut columns = Vec::new();
    for col in train.columns() {
        if !col.is_numerical() {
            continue;
        }
        let mut v = col.observed_numeric();
        if exempt_sentinel {
            v.retain(|&x| x != MVAE_SENTINEL);
        }
        if v.is_empty() {
            return Err(Error::Data(format!(
                "numerical column `{}` has no observed training values",
                col.name
            )));
        }
        let params = match kind {
            ScalerKind::MinMax => ScaleParams::MinMax {
                min: v.iter().copied().fold(f64::INFINITY, f64::min),
                max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            },
            ScalerKind::Standard => {
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                ScaleParams::Standard {
                    mean,
                    std: var.sqrt(),
                }
            }
            ScalerKind::Robust => {
                v.sort_by(f64::total_cmp);
                ScaleParams::Robust {
                    q1: quantile_sorted(&v, 0.25),
                    q2: quantile_sorted(&v, 0.5),
                    q3: quantile_sorted(&v, 0.75),
                }
            }
        };
        columns.push(ColumnScale {
            column: col.name.clone(),
            params,
        });
    }
    Ok(FittedScaler {
        kind,
        exempt_sentinel,
        columns,
    })
}

/// Linear interpolation between order statistics (position q·(n-1)).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn apply_scaler(s: &FittedScaler, t: &DataTable) -> Result<DataTable> {
    let mut columns: Vec<Column> = t.columns().to_vec();
    for cs in &s.columns {
        let j = column_index(t, &cs.column)?;
        let col = &mut columns[j];
        let ColumnData::Numerical(values) = &mut col.data else {
            return Err(Error::Data(format!("column `{}` is not numerical", cs.column)));
        };
        for (v, &m) in values.iter_mut().zip(&col.missing) {
            if m || (s.exempt_sentinel && *v == MVAE_SENTINEL) {
                continue;
            }
            *v = cs.params.apply(*v);
        }
    }
    DataTable::new(columns)
}
