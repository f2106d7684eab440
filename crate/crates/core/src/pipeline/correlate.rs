use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::report::{Quality, QualityReport};
use crate::datamodel::format_number;

/// The nine discrepancy statistics, three per class. Class B uses the median
/// over features.
pub const STATISTICS: [&str; 9] = [
    "A.rmse", "A.mae", "A.r2", "B.kl", "B.ks", "B.w2", "C.kl", "C.ks", "C.w2",
];

pub fn statistic_values(q: &Quality) -> [Option<f64>; 9] {
    let b = &q.feature.summary;
    [
        Some(q.sample.rmse),
        Some(q.sample.mae),
        q.sample.r2,
        Some(b.kl.median),
        Some(b.ks.median),
        Some(b.w2.median),
        Some(q.sliced.kl),
        Some(q.sliced.ks),
        Some(q.sliced.w2),
    ]
}

/// Pearson correlation; `None` for fewer than two points or a constant series.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Average ranks (1-based), ties sharing their mean rank.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && x[order[end + 1]] == x[order[start]] {
            end += 1;
        }
        let rank = (start + end) as f64 / 2.0 + 1.0;
        for &i in &order[start..=end] {
            out[i] = rank;
        }
        start = end + 1;
    }
    out
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() {
        return None;
    }
    pearson(&ranks(x), &ranks(y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    /// `all` or a test missingness rate.
    pub stratum: String,
    pub statistic: String,
    pub n: usize,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
}

type PointKey = (usize, usize, String, String, String);

/// A point per (holdout, fold, imputer, train rate, test rate): discrepancy
/// statistics averaged over repeats against the pooled holdout AUC.
pub fn quality_auc_points(report: &QualityReport) -> Vec<(f64, [Option<f64>; 9], f64)> {
    let mut by_key: BTreeMap<PointKey, Vec<[Option<f64>; 9]>> = BTreeMap::new();
    for c in &report.cells {
        if let (Some(q), None) = (&c.quality, &c.error) {
            let key = (
                c.holdout,
                c.fold,
                c.method.to_string(),
                format_number(c.train_rate),
                format_number(c.test_rate),
            );
            by_key.entry(key).or_default().push(statistic_values(q));
        }
    }
    let mut points = Vec::new();
    for g in report.groups.iter().filter(|g| g.error.is_none()) {
        for f in &g.folds {
            let key = (
                g.holdout,
                f.fold,
                g.method.to_string(),
                format_number(g.train_rate),
                format_number(g.test_rate),
            );
            let Some(rows) = by_key.get(&key) else { continue };
            let mut means = [None; 9];
            for (s, mean) in means.iter_mut().enumerate() {
                let vals: Vec<f64> = rows.iter().filter_map(|r| r[s]).collect();
                if vals.len() == rows.len() {
                    *mean = Some(vals.iter().sum::<f64>() / vals.len() as f64);
                }
            }
            points.push((g.test_rate, means, f.pooled.auc));
        }
    }
    points
}

/// Pearson and Spearman of each statistic against holdout AUC, over all
/// points and within each test missingness rate. Strata with fewer than three
/// points report no coefficients.
pub fn correlate_quality_vs_auc(report: &QualityReport) -> Vec<CorrelationRow> {
    let points = quality_auc_points(report);
    let mut strata: Vec<(String, Option<f64>)> = vec![("all".into(), None)];
    let mut rates: Vec<f64> = points.iter().map(|p| p.0).collect();
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    strata.extend(rates.into_iter().map(|r| (format_number(r), Some(r))));

    let mut rows = Vec::new();
    for (name, rate) in &strata {
        for (s, stat) in STATISTICS.iter().enumerate() {
            let (x, y): (Vec<f64>, Vec<f64>) = points
                .iter()
                .filter(|p| rate.is_none_or(|r| p.0 == r))
                .filter_map(|p| p.1[s].map(|v| (v, p.2)))
                .unzip();
            let enough = x.len() >= 3;
            rows.push(CorrelationRow {
                stratum: name.clone(),
                statistic: stat.to_string(),
                n: x.len(),
                pearson: if enough { pearson(&x, &y) } else { None },
                spearman: if enough { spearman(&x, &y) } else { None },
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricMatrix {
    pub names: Vec<String>,
    /// Cells with all nine statistics available.
    pub n: usize,
    pub pearson: Vec<Vec<Option<f64>>>,
}

impl MetricMatrix {
    pub fn empty() -> Self {
        Self {
            names: Vec::new(),
            n: 0,
            pearson: Vec::new(),
        }
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        self.pearson[i][j]
    }
}

/// Pairwise Pearson correlations of the nine statistics over the given rows.
pub fn metric_matrix(rows: &[[f64; 9]]) -> MetricMatrix {
    let columns: Vec<Vec<f64>> = (0..9).map(|s| rows.iter().map(|r| r[s]).collect()).collect();
    let pearson = (0..9)
        .map(|i| (0..9).map(|j| pearson(&columns[i], &columns[j])).collect())
        .collect();
    MetricMatrix {
        names: STATISTICS.iter().map(|s| s.to_string()).collect(),
        n: rows.len(),
        pearson,
    }
}

/// Statistic-by-statistic Pearson matrix over every cell with quality data.
pub fn correlate_metrics(report: &QualityReport) -> MetricMatrix {
    let rows: Vec<[f64; 9]> = report
        .cells
        .iter()
        .filter(|c| c.error.is_none())
        .filter_map(|c| c.quality.as_ref())
        .filter_map(|q| {
            let v = statistic_values(q);
            v.iter().all(Option::is_some).then(|| v.map(Option::unwrap))
        })
        .collect();
    metric_matrix(&rows)
}
