use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::correlate::{CorrelationRow, MetricMatrix};
use crate::datamodel::format_number;
use crate::discrepancy::{FeatureStats, SampleStats};
use crate::downstream::EvalMetrics;
use crate::error::{Error, Result};
use crate::imputers::ImputeMethod;
use crate::sliced::{ClassCStats, SlicedResult};

/// Class C statistics without the per-pair ratio list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicedSummary {
    pub kl: f64,
    pub ks: f64,
    pub w2: f64,
    pub ratio_median: Option<f64>,
    pub ratio_iqr: Option<f64>,
    pub n_pairs: usize,
    pub n_skipped: usize,
    pub n_guarded: usize,
}

impl From<&ClassCStats> for SlicedSummary {
    fn from(c: &ClassCStats) -> Self {
        Self {
            kl: c.kl,
            ks: c.ks,
            w2: c.w2,
            ratio_median: c.ratio_median,
            ratio_iqr: c.ratio_iqr,
            n_pairs: c.n_pairs,
            n_skipped: c.n_skipped,
            n_guarded: c.n_guarded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quality {
    pub sample: SampleStats,
    pub feature: FeatureStats,
    pub sliced: SlicedSummary,
}

/// One (holdout, fold, imputer, repeat, train rate, test rate) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub id: String,
    pub holdout: usize,
    pub fold: usize,
    pub method: ImputeMethod,
    pub repeat: usize,
    pub train_rate: f64,
    pub test_rate: f64,
    pub seed: u64,
    /// Discrepancies of the holdout imputation against the ground truth.
    pub quality: Option<Quality>,
    pub quality_skipped: Option<String>,
    /// This repeat's unpooled holdout metrics at the selected iteration cap.
    pub metrics: Option<EvalMetrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    /// Holdout metrics of the pooled predictions.
    pub pooled: EvalMetrics,
    pub validation_auc: f64,
}

/// One (holdout, imputer, train rate, test rate) combination: model
/// selection over its folds and pooled holdout performance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub holdout: usize,
    pub method: ImputeMethod,
    pub train_rate: f64,
    pub test_rate: f64,
    pub candidates: Vec<usize>,
    /// Mean over folds of the pooled validation AUC, per candidate.
    pub validation_auc: Vec<f64>,
    pub selected_max_iter: Option<usize>,
    pub folds: Vec<FoldMetrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierRecord {
    pub method: ImputeMethod,
    pub train_rate: f64,
    pub test_rate: f64,
    pub n_distances: usize,
    /// `(threshold, proportion above)`.
    pub absolute: Vec<(f64, f64)>,
    /// `(quantile, threshold, proportion above)`.
    pub quantile: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub n_rows: usize,
    pub n_features: usize,
    pub n_columns: usize,
    pub n_positive: usize,
    /// The data arrived with missing cells, so nothing was induced and no
    /// ground truth exists.
    pub natural_missingness: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub quality_vs_auc: Vec<CorrelationRow>,
    pub metrics: MetricMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub version: String,
    pub config: RunConfig,
    pub dataset: DatasetInfo,
    pub cells: Vec<CellRecord>,
    pub groups: Vec<GroupRecord>,
    pub outliers: Vec<OutlierRecord>,
    pub correlations: Option<Correlations>,
    pub n_errors: usize,
    /// Raw baseline/imputed distance matrices per cell id, exported to
    /// `sliced_raw.csv` only.
    #[serde(skip)]
    pub sliced_raw: Vec<(String, SlicedResult)>,
}

/// Writes every float with 17 significant digits so the bytes do not depend
/// on the shortest-representation algorithm.
struct FixedPrecision;

impl serde_json::ser::Formatter for FixedPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Key-sorted JSON with fixed-precision floats.
pub fn report_json(report: &QualityReport) -> Result<Vec<u8>> {
    let json_err = |source| Error::Json {
        path: PathBuf::from("report.json"),
        source,
    };
    // a Value's object map is ordered by key
    let value = serde_json::to_value(report).map_err(json_err)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedPrecision);
    value.serialize(&mut ser).map_err(json_err)?;
    out.push(b'\n');
    Ok(out)
}

pub fn load_report(path: &Path) -> Result<QualityReport> {
    let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

const CELL_COLUMNS: &[&str] = &[
    "id", "holdout", "fold", "method", "repeat", "train_rate", "test_rate", "seed",
    "rmse", "mae", "r2",
    "b_kl_min", "b_kl_median", "b_kl_max", "b_ks_min", "b_ks_median", "b_ks_max",
    "b_w2_min", "b_w2_median", "b_w2_max",
    "c_kl", "c_ks", "c_w2", "ratio_median", "ratio_iqr", "n_pairs", "n_skipped", "n_guarded",
    "auc", "accuracy", "brier", "precision", "sensitivity", "specificity",
];

/// One row per successful cell.
pub fn write_cells_csv<W: Write>(report: &QualityReport, out: W) -> Result<()> {
    let path = PathBuf::from("cells.csv");
    let csv_err = |source| Error::Csv {
        path: path.clone(),
        source,
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CELL_COLUMNS).map_err(csv_err)?;
    for c in report.cells.iter().filter(|c| c.error.is_none()) {
        let mut row = vec![
            c.id.clone(),
            c.holdout.to_string(),
            c.fold.to_string(),
            c.method.to_string(),
            c.repeat.to_string(),
            format_number(c.train_rate),
            format_number(c.test_rate),
            c.seed.to_string(),
        ];
        match &c.quality {
            Some(q) => {
                let s = &q.feature.summary;
                row.extend([
                    format_number(q.sample.rmse),
                    format_number(q.sample.mae),
                    opt(q.sample.r2),
                ]);
                for t in [s.kl, s.ks, s.w2] {
                    row.extend([t.min, t.median, t.max].map(format_number));
                }
                row.extend([q.sliced.kl, q.sliced.ks, q.sliced.w2].map(format_number));
                row.extend([opt(q.sliced.ratio_median), opt(q.sliced.ratio_iqr)]);
                row.extend([q.sliced.n_pairs, q.sliced.n_skipped, q.sliced.n_guarded].map(|n| n.to_string()));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 20)),
        }
        match &c.metrics {
            Some(m) => {
                row.extend([m.auc, m.accuracy, m.brier].map(format_number));
                row.push(opt(m.precision));
                row.extend([m.sensitivity, m.specificity].map(format_number));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

pub fn write_sliced_csv<W: Write>(report: &QualityReport, mut out: W) -> io::Result<()> {
    writeln!(out, "cell,r,p,w,w_hat,skipped")?;
    for (id, res) in &report.sliced_raw {
        for ((r, p), &w) in res.w.indexed_iter() {
            if w.is_nan() {
                writeln!(out, "{id},{r},{p},,,1")?;
            } else {
                writeln!(out, "{id},{r},{p},{},{},0", format_number(w), format_number(res.w_hat[[r, p]]))?;
            }
        }
    }
    Ok(())
}

pub fn write_correlations_csv<W: Write>(correlations: &Correlations, mut out: W) -> io::Result<()> {
    writeln!(out, "kind,stratum,x,y,n,pearson,spearman")?;
    for row in &correlations.quality_vs_auc {
        writeln!(
            out,
            "quality_vs_auc,{},{},auc,{},{},{}",
            row.stratum,
            row.statistic,
            row.n,
            opt(row.pearson),
            opt(row.spearman)
        )?;
    }
    let m = &correlations.metrics;
    for (i, x) in m.names.iter().enumerate() {
        for (j, y) in m.names.iter().enumerate() {
            writeln!(out, "metric_matrix,all,{x},{y},{},{},", m.n, opt(m.pearson[i][j]))?;
        }
    }
    Ok(())
}

/// Write `report.json`, `cells.csv`, `sliced_raw.csv` and `correlations.csv`
/// into `dir`, creating it if needed.
pub fn emit_report(report: &QualityReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json_path = dir.join("report.json");
    std::fs::write(&json_path, report_json(report)?).map_err(|e| Error::io(&json_path, e))?;

    let cells_path = dir.join("cells.csv");
    let file = std::fs::File::create(&cells_path).map_err(|e| Error::io(&cells_path, e))?;
    write_cells_csv(report, io::BufWriter::new(file)).map_err(|e| match e {
        Error::Csv { source, .. } => Error::Csv {
            path: cells_path.clone(),
            source,
        },
        other => other,
    })?;

    let sliced_path = dir.join("sliced_raw.csv");
    let file = std::fs::File::create(&sliced_path).map_err(|e| Error::io(&sliced_path, e))?;
    let mut w = io::BufWriter::new(file);
    write_sliced_csv(report, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&sliced_path, e))?;

    let corr_path = dir.join("correlations.csv");
    let file = std::fs::File::create(&corr_path).map_err(|e| Error::io(&corr_path, e))?;
    let mut w = io::BufWriter::new(file);
    let empty = Correlations {
        quality_vs_auc: Vec::new(),
        metrics: MetricMatrix::empty(),
    };
    write_correlations_csv(report.correlations.as_ref().unwrap_or(&empty), &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&corr_path, e))?;
    Ok(vec![json_path, cells_path, sliced_path, corr_path])
}
