use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, ColumnData, DataTable};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotFeature {
    pub column: String,
    /// Lexicographic; output column `i` is `{column}={categories[i]}`.
    pub categories: Vec<String>,
}

/// Category vocabularies for every categorical column seen at fit time.
/// Apply-time categories outside the vocabulary encode as all zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotMap {
    pub features: Vec<OneHotFeature>,
}

/// Per feature, how many rows carried a category unseen at fit time.
pub type UnseenCategories = BTreeMap<String, usize>;

pub fn fit_one_hot(train: &DataTable) -> OneHotMap {
    let features = train
        .columns()
        .iter()
        .filter_map(|col| {
            let tokens = col.tokens()?;
            let mut cats: Vec<String> = tokens
                .iter()
                .zip(&col.missing)
                .filter(|(_, &m)| !m)
                .map(|(t, _)| t.clone())
                .collect();
            cats.sort();
            cats.dedup();
            Some(OneHotFeature {
                column: col.name.clone(),
                categories: cats,
            })
        })
        .collect();
    OneHotMap { features }
}

pub fn apply_one_hot(map: &OneHotMap, t: &DataTable) -> Result<(DataTable, UnseenCategories)> {
    let mut out = Vec::new();
    let mut unseen = UnseenCategories::new();
    for col in t.columns() {
        let Some(feature) = map.features.iter().find(|f| f.column == col.name) else {
            out.push(col.clone());
            continue;
        };
        let tokens = col.tokens().unwrap_or(&[]);
        let mut expanded: Vec<Vec<f64>> = vec![vec![0.0; t.n_rows()]; feature.categories.len()];
        for (i, tok) in tokens.iter().enumerate() {
            if col.missing[i] {
                for e in expanded.iter_mut() {
                    e[i] = f64::NAN;
                }
                continue;
            }
            match feature.categories.binary_search(tok) {
                Ok(pos) => expanded[pos][i] = 1.0,
                Err(_) => *unseen.entry(col.name.clone()).or_default() += 1,
            }
        }
        for (cat, values) in feature.categories.iter().zip(expanded) {
            out.push(Column {
                name: format!("{}={}", col.name, cat),
                source: col.source.clone(),
                data: ColumnData::Indicator(values),
                missing: col.missing.clone(),
            });
        }
    }
    Ok((DataTable::new(out)?, unseen))
}
