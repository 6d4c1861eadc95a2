use serde::{Deserialize, Serialize};

use super::{column_index, MVAE_SENTINEL};
use crate::dataset::{Column, ColumnData, DataTable};
use crate::error::{Error, Result};

pub const DEFAULT_MISSING_TOKEN: &str = "__MISSING__";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericRange {
    pub column: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryVocabulary {
    pub column: String,
    pub categories: Vec<String>,
}

/// Missing-value-aware encoding state.
///
/// Numerical columns are min-max scaled into [0, 1] with training extrema
/// (apply-time values outside the range are clamped) and missing cells
/// become -1. Categorical missing cells become `missing_token`, a category
/// that never collides with an observed one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvaeState {
    pub numeric: Vec<NumericRange>,
    pub categorical: Vec<CategoryVocabulary>,
    pub missing_token: String,
}

pub fn fit_mvae(train: &DataTable) -> Result<MvaeState> {
    let mut numeric = Vec::new();
    let mut categorical = Vec::new();
    for col in train.columns() {
        match &col.data {
            ColumnData::Categorical(tokens) => {
                let mut cats: Vec<String> = tokens
                    .iter()
                    .zip(&col.missing)
                    .filter(|(_, &m)| !m)
                    .map(|(t, _)| t.clone())
                    .collect();
                cats.sort();
                cats.dedup();
                categorical.push(CategoryVocabulary {
                    column: col.name.clone(),
                    categories: cats,
                });
            }
            _ => {
                let v = col.observed_numeric();
                if v.is_empty() {
                    return Err(Error::Data(format!(
                        "numerical column `{}` has no observed training values",
                        col.name
                    )));
                }
                numeric.push(NumericRange {
                    column: col.name.clone(),
                    min: v.iter().copied().fold(f64::INFINITY, f64::min),
                    max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                });
            }
        }
    }
    let mut missing_token = DEFAULT_MISSING_TOKEN.to_string();
    while categorical
        .iter()
        .any(|c| c.categories.contains(&missing_token))
    {
        missing_token.push('_');
    }
    Ok(MvaeState {
        numeric,
        categorical,
        missing_token,
    })
}

pub fn apply_mvae(state: &MvaeState, t: &DataTable) -> Result<DataTable> {
    let mut columns: Vec<Column> = t.columns().to_vec();
    for r in &state.numeric {
        let j = column_index(t, &r.column)?;
        let col = &mut columns[j];
        let (ColumnData::Numerical(values) | ColumnData::Indicator(values)) = &mut col.data else {
            return Err(Error::Data(format!("column `{}` is not numeric", r.column)));
        };
        let span = r.max - r.min;
        for (v, m) in values.iter_mut().zip(col.missing.iter_mut()) {
            if *m {
                *v = MVAE_SENTINEL;
                *m = false;
            } else if span > 0.0 {
                *v = ((*v - r.min) / span).clamp(0.0, 1.0);
            } else {
                *v = 0.0;
            }
        }
    }
    for c in &state.categorical {
        let j = column_index(t, &c.column)?;
        let col = &mut columns[j];
        let ColumnData::Categorical(tokens) = &mut col.data else {
            return Err(Error::Data(format!("column `{}` is not categorical", c.column)));
        };
        for (tok, m) in tokens.iter_mut().zip(col.missing.iter_mut()) {
            if *m {
                *tok = state.missing_token.clone();
                *m = false;
            }
        }
    }
    DataTable::new(columns)
}
