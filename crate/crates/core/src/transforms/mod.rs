//! Fit-on-train / apply-anywhere preprocessing transforms.
//!
//! Every `fit_*` function reads a training table and returns an immutable,
//! serializable state; the matching `apply_*` is a pure function of that
//! state and the table it transforms.

mod impute;
mod mvae;
mod onehot;
mod scaler;

use serde::{Deserialize, Serialize};

use crate::dataset::DataTable;
use crate::error::{Error, Result};

pub use impute::{apply_impute, fit_impute, ColumnFill, FillValue, FittedImputer, ImputeStrategy, KnnReference};
pub use mvae::{apply_mvae, fit_mvae, CategoryVocabulary, MvaeState, NumericRange, DEFAULT_MISSING_TOKEN};
pub use onehot::{apply_one_hot, fit_one_hot, OneHotFeature, OneHotMap, UnseenCategories};
pub use scaler::{
    apply_scaler, fit_scaler, fit_scaler_with, quantile_sorted, ColumnScale, FittedScaler, ScaleParams, ScalerKind,
};

/// Value MVAE writes into missing numerical cells.
pub const MVAE_SENTINEL: f64 = -1.0;

/// Any fitted transform, tagged for JSON persistence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "transform", content = "state")]
pub enum FittedTransform {
    Scaler(FittedScaler),
    Imputer(FittedImputer),
    Mvae(MvaeState),
    OneHot(OneHotMap),
}

impl FittedTransform {
    pub fn apply(&self, t: &DataTable) -> Result<DataTable> {
        match self {
            FittedTransform::Scaler(s) => apply_scaler(s, t),
            FittedTransform::Imputer(i) => apply_impute(i, t),
            FittedTransform::Mvae(m) => apply_mvae(m, t),
            FittedTransform::OneHot(o) => apply_one_hot(o, t).map(|(t, _)| t),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub(crate) fn column_index(t: &DataTable, name: &str) -> Result<usize> {
    t.columns()
        .iter()
        .position(|c| c.name == name)
        .ok_or_else(|| Error::UnknownColumn(name.to_string()))
}
