use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use super::{FeatureKind, LabeledDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub category: String,
    /// [class 0, class 1]
    pub count: [usize; 2],
    /// Percent of non-missing rows within each class.
    pub percent: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSummary {
    pub n: [usize; 2],
    pub mean: [f64; 2],
    pub sd: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<CategoryCount>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric: Option<NumericSummary>,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub test_name: String,
    pub test_skipped: bool,
}

/// Per-feature class-conditional descriptives with a significance test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    /// Rows per class: [class 0, class 1].
    pub group_sizes: [usize; 2],
    pub features: Vec<FeatureSummary>,
}

impl CohortReport {
    /// Plain-text table: `n (%)` for categories and `mean (± SD)` for numbers.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<28} {:<14} {:>18} {:>18} {:>10}  {}\n",
            "feature",
            "value",
            format!("class 0 n={}", self.group_sizes[0]),
            format!("class 1 n={}", self.group_sizes[1]),
            "p-value",
            "test"
        );
        for f in &self.features {
            let p = match f.p_value {
                Some(p) if p < 0.001 => "<0.001".to_string(),
                Some(p) => format!("{p:.4}"),
                None => "skipped".to_string(),
            };
            if let Some(cats) = &f.categories {
                for (i, c) in cats.iter().enumerate() {
                    out.push_str(&format!(
                        "{:<28} {:<14} {:>18} {:>18} {:>10}  {}\n",
                        if i == 0 { f.name.as_str() } else { "" },
                        c.category,
                        format!("{}({:.1}%)", c.count[0], c.percent[0]),
                        format!("{}({:.1}%)", c.count[1], c.percent[1]),
                        if i == 0 { p.as_str() } else { "" },
                        if i == 0 { f.test_name.as_str() } else { "" },
                    ));
                }
            }
            if let Some(n) = &f.numeric {
                out.push_str(&format!(
                    "{:<28} {:<14} {:>18} {:>18} {:>10}  {}\n",
                    f.name,
                    "",
                    format!("{:.2}(± {:.2})", n.mean[0], n.sd[0]),
                    format!("{:.2}(± {:.2})", n.mean[1], n.sd[1]),
                    p,
                    f.test_name
                ));
            }
        }
        out
    }
}

pub fn cohort_summary(ds: &LabeledDataset) -> CohortReport {
    let (n0, n1) = ds.class_counts();
    let features = ds
        .table
        .columns()
        .iter()
        .map(|col| {
            if let Some(tokens) = col.tokens() {
                categorical_summary(&col.name, tokens, &col.missing, &ds.labels)
            } else {
                let values = col.numeric_values().unwrap_or(&[]);
                numeric_summary(&col.name, values, &col.missing, &ds.labels)
            }
        })
        .collect();
    CohortReport {
        group_sizes: [n0, n1],
        features,
    }
}

fn categorical_summary(name: &str, tokens: &[String], missing: &[bool], labels: &[u8]) -> FeatureSummary {
    let mut table: BTreeMap<&str, [usize; 2]> = BTreeMap::new();
    for ((t, &m), &y) in tokens.iter().zip(missing).zip(labels) {
        if !m {
            table.entry(t.as_str()).or_default()[y as usize] += 1;
        }
    }
    let row_totals = table.values().fold([0usize; 2], |acc, c| [acc[0] + c[0], acc[1] + c[1]]);
    let categories = table
        .iter()
        .map(|(cat, c)| CategoryCount {
            category: cat.to_string(),
            count: *c,
            percent: [pct(c[0], row_totals[0]), pct(c[1], row_totals[1])],
        })
        .collect();
    let counts: Vec<[usize; 2]> = table.values().copied().collect();
    let test = chi_square_independence(&counts);
    FeatureSummary {
        name: name.to_string(),
        kind: FeatureKind::Categorical,
        categories: Some(categories),
        numeric: None,
        statistic: test.map(|t| t.0),
        p_value: test.map(|t| t.1),
        test_name: "chi-square".into(),
        test_skipped: test.is_none(),
    }
}

fn pct(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        100.0 * a as f64 / b as f64
    }
}

fn numeric_summary(name: &str, values: &[f64], missing: &[bool], labels: &[u8]) -> FeatureSummary {
    let mut groups: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for ((&v, &m), &y) in values.iter().zip(missing).zip(labels) {
        if !m {
            groups[y as usize].push(v);
        }
    }
    let stats = [mean_sd(&groups[0]), mean_sd(&groups[1])];
    let test = welch_t_test(&groups[0], &groups[1]);
    FeatureSummary {
        name: name.to_string(),
        kind: FeatureKind::Numerical,
        categories: None,
        numeric: Some(NumericSummary {
            n: [groups[0].len(), groups[1].len()],
            mean: [stats[0].0, stats[1].0],
            sd: [stats[0].1, stats[1].1],
        }),
        statistic: test.map(|t| t.0),
        p_value: test.map(|t| t.1),
        test_name: "welch-t".into(),
        test_skipped: test.is_none(),
    }
}

/// Mean and sample standard deviation.
fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Welch's unequal-variance t-test, two-sided. `None` when undefined.
pub(crate) fn welch_t_test(a: &[f64], b: &[f64]) -> Option<(f64, f64)> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (ma, sa) = mean_sd(a);
    let (mb, sb) = mean_sd(b);
    let va = sa * sa / a.len() as f64;
    let vb = sb * sb / b.len() as f64;
    let se2 = va + vb;
    if se2 <= 0.0 || !se2.is_finite() {
        return None;
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / (va * va / (a.len() as f64 - 1.0) + vb * vb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    let p = (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0);
    Some((t, p))
}

/// Chi-square test of independence on a 2×C table given as per-category
/// [class 0, class 1] counts. Categories whose smallest expected count is
/// below 5 are pooled into one "other" column first. `None` when fewer than
/// two columns survive or a class row is empty.
pub(crate) fn chi_square_independence(counts: &[[usize; 2]]) -> Option<(f64, f64)> {
    let total: usize = counts.iter().map(|c| c[0] + c[1]).sum();
    if total == 0 {
        return None;
    }
    let rows = counts.iter().fold([0usize; 2], |a, c| [a[0] + c[0], a[1] + c[1]]);
    if rows[0] == 0 || rows[1] == 0 {
        return None;
    }
    let expected_min = |c: &[usize; 2]| {
        let col = (c[0] + c[1]) as f64;
        (rows[0].min(rows[1]) as f64) * col / total as f64
    };
    let mut kept: Vec<[usize; 2]> = Vec::new();
    let mut other = [0usize; 2];
    let mut pooled = false;
    for c in counts {
        if expected_min(c) < 5.0 {
            other[0] += c[0];
            other[1] += c[1];
            pooled = true;
        } else {
            kept.push(*c);
        }
    }
    if pooled && other[0] + other[1] > 0 {
        kept.push(other);
    }
    if kept.len() < 2 {
        return None;
    }
    let mut stat = 0.0;
    for c in &kept {
        let col = (c[0] + c[1]) as f64;
        for g in 0..2 {
            let e = rows[g] as f64 * col / total as f64;
            if e > 0.0 {
                stat += (c[g] as f64 - e).powi(2) / e;
            }
        }
    }
    let df = (kept.len() - 1) as f64;
    let dist = ChiSquared::new(df).ok()?;
    let p = (1.0 - dist.cdf(stat)).clamp(0.0, 1.0);
    Some((stat, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Column, DataTable, FeatureSchema, FeatureSpec};
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn ds(columns: Vec<Column>, labels: Vec<u8>) -> LabeledDataset {
        let features = columns
            .iter()
            .map(|c| FeatureSpec {
                name: c.name.clone(),
                kind: c.feature_kind(),
                missing_markers: vec![],
            })
            .collect();
        let schema = FeatureSchema {
            label_column: "y".into(),
            positive_label: "1".into(),
            features,
        };
        LabeledDataset::new(schema, DataTable::new(columns).unwrap(), labels).unwrap()
    }

    #[test]
    fn identical_categorical_distributions() {
        let tokens: Vec<Option<String>> = (0..200)
            .map(|i| Some(["A", "B", "C"][i % 3].to_string()))
            .collect();
        // labels alternate in blocks of three so each class sees A, B, C equally
        let labels: Vec<u8> = (0..200).map(|i| ((i / 3) % 2) as u8).collect();
        let r = cohort_summary(&ds(vec![Column::categorical("c", tokens)], labels));
        let p = r.features[0].p_value.unwrap();
        assert!(p > 0.99, "p = {p}");
    }

    #[test]
    fn separated_means_are_significant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n0 = Normal::new(0.0, 1.0).unwrap();
        let n1 = Normal::new(10.0, 1.0).unwrap();
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..100 {
            values.push(n0.sample(&mut rng));
            labels.push(0);
            values.push(n1.sample(&mut rng));
            labels.push(1);
        }
        let r = cohort_summary(&ds(vec![Column::numerical("x", values)], labels));
        assert!(r.features[0].p_value.unwrap() < 0.001);
        let n = r.features[0].numeric.as_ref().unwrap();
        assert!((n.mean[1] - n.mean[0] - 10.0).abs() < 0.5);
    }

    #[test]
    fn constant_feature_skips_test() {
        let labels = vec![0, 1, 0, 1, 0, 1];
        let r = cohort_summary(&ds(
            vec![
                Column::numerical("x", vec![3.0; 6]),
                Column::categorical("c", vec![Some("a".into()); 6]),
            ],
            labels,
        ));
        assert!(r.features.iter().all(|f| f.test_skipped && f.p_value.is_none()));
    }

    #[test]
    fn missing_cells_excluded_from_descriptives() {
        let labels = vec![0, 0, 0, 1, 1, 1];
        let r = cohort_summary(&ds(
            vec![
                Column::numerical("x", vec![1.0, f64::NAN, 3.0, 5.0, 7.0, f64::NAN]),
                Column::categorical(
                    "c",
                    vec![Some("a".into()), None, Some("b".into()), Some("a".into()), Some("a".into()), None],
                ),
            ],
            labels,
        ));
        let n = r.features[0].numeric.as_ref().unwrap();
        assert_eq!(n.n, [2, 2]);
        assert_eq!(n.mean, [2.0, 6.0]);
        let cats = r.features[1].categories.as_ref().unwrap();
        assert_eq!(cats[0].percent, [50.0, 100.0]);
        for f in &r.features {
            if let Some(p) = f.p_value {
                assert!((0.0..=1.0).contains(&p));
            }
        }
    }

    // Reference values from scipy.stats (ttest_ind(equal_var=False), chi2_contingency(correction=False)).
    #[test]
    fn matches_reference_statistics() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0];
        let (t, p) = welch_t_test(&a, &b).unwrap();
        assert!((t - -2.3763541031440183).abs() < 1e-9, "t = {t}");
        assert!((p - 0.04928433820673049).abs() < 1e-6, "p = {p}");

        let (stat, p) = chi_square_independence(&[[30, 10], [20, 25], [15, 20]]).unwrap();
        assert!((stat - 10.509490509490506).abs() < 1e-9, "stat = {stat}");
        assert!((p - 0.005222676574604356).abs() < 1e-9, "p = {p}");
    }

    #[test]
    fn sparse_categories_pooled() {
        // The two rare columns pool into one "other" column: 2x2 table.
        let pooled = chi_square_independence(&[[50, 40], [45, 35], [1, 0], [0, 2]]).unwrap();
        let direct = chi_square_independence(&[[50, 40], [45, 35], [1, 2]]).unwrap();
        assert!((pooled.0 - direct.0).abs() < 1e-12);
    }
}
