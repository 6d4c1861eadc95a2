use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Column, DataTable, FeatureKind, FeatureSchema, FeatureSpec, LabeledDataset};
use crate::rng::rng_from;

/// Parameters of the built-in synthetic cohort.
///
/// Layout: two class-shifted Gaussian features (`inf_1`, `inf_2`), eight
/// standard-normal noise features, one weakly informative categorical
/// (`cat_1`) and two noise categoricals. `inf_2` and `cat_1` lose cells
/// not-at-random: high `inf_2` values and the `C` level of `cat_1` go
/// missing more often.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub minority_fraction: f64,
    /// Mean shift of the informative features for class 1.
    pub shift: f64,
    /// Overall target missing rate in the two NMAR features.
    pub missing_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_rows: 2000,
            minority_fraction: 0.13,
            shift: 1.5,
            missing_rate: 0.2,
            seed: 2023,
        }
    }
}

pub fn synthetic_dataset(cfg: &SynthConfig) -> LabeledDataset {
    let mut rng = rng_from(cfg.seed);
    let n = cfg.n_rows;
    let n_pos = ((cfg.minority_fraction * n as f64).round() as usize).min(n);
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < n_pos)).collect();
    labels.shuffle(&mut rng);

    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let informative = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        labels
            .iter()
            .map(|&y| std_normal.sample(rng) + cfg.shift * f64::from(y))
            .collect()
    };
    let inf_1 = informative(&mut rng);
    let mut inf_2 = informative(&mut rng);

    // NMAR: values above the class-0 median are missing at 1.6x the base
    // rate, the rest at 0.4x, averaging to roughly `missing_rate`.
    for v in inf_2.iter_mut() {
        let p = if *v > 0.0 { 1.6 } else { 0.4 } * cfg.missing_rate;
        if rng.random::<f64>() < p {
            *v = f64::NAN;
        }
    }

    let mut columns = vec![Column::numerical("inf_1", inf_1), Column::numerical("inf_2", inf_2)];
    for j in 0..8 {
        let v: Vec<f64> = (0..n).map(|_| std_normal.sample(&mut rng)).collect();
        columns.push(Column::numerical(format!("noise_{}", j + 1), v));
    }

    let cat_1: Vec<Option<String>> = labels
        .iter()
        .map(|&y| {
            let probs = if y == 1 { [0.25, 0.35, 0.40] } else { [0.45, 0.35, 0.20] };
            let level = pick(&mut rng, &["A", "B", "C"], &probs);
            let p_miss = if level == "C" { 2.0 } else { 0.7 } * cfg.missing_rate;
            if rng.random::<f64>() < p_miss {
                None
            } else {
                Some(level.to_string())
            }
        })
        .collect();
    let cat_2: Vec<Option<String>> = (0..n)
        .map(|_| Some(pick(&mut rng, &["no", "yes"], &[0.6, 0.4]).to_string()))
        .collect();
    let cat_3: Vec<Option<String>> = (0..n)
        .map(|_| Some(pick(&mut rng, &["x", "y", "z"], &[0.3, 0.3, 0.4]).to_string()))
        .collect();
    columns.push(Column::categorical("cat_1", cat_1));
    columns.push(Column::categorical("cat_2", cat_2));
    columns.push(Column::categorical("cat_3", cat_3));

    let schema = FeatureSchema {
        label_column: "outcome".into(),
        positive_label: "Dead".into(),
        features: columns
            .iter()
            .map(|c| FeatureSpec {
                name: c.name.clone(),
                kind: c.feature_kind(),
                missing_markers: vec![String::new()],
            })
            .collect(),
    };
    debug_assert!(schema.features.iter().filter(|f| f.kind == FeatureKind::Categorical).count() == 3);
    let table = DataTable::new(columns).expect("equal-length columns");
    LabeledDataset::new(schema, table, labels).expect("valid synthetic dataset")
}

fn pick<'a, R: Rng>(rng: &mut R, levels: &[&'a str], probs: &[f64]) -> &'a str {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (l, p) in levels.iter().zip(probs) {
        acc += p;
        if u < acc {
            return l;
        }
    }
    levels[levels.len() - 1]
}
