//! End-to-end benchmark: splits, masking, imputation, quality statistics,
//! classifier selection and the report.

mod config;
mod correlate;
mod report;
mod run;

pub use config::{
    ClassifierConfig, DataConfig, ImputationConfig, MissingnessConfig, OutlierConfig, RunConfig, SlicedConfig,
    SynthData,
};
pub use correlate::{
    correlate_metrics, correlate_quality_vs_auc, metric_matrix, pearson, quality_auc_points, spearman,
    statistic_values, CorrelationRow, MetricMatrix, STATISTICS,
};
pub use report::{
    emit_report, load_report, report_json, write_cells_csv, write_correlations_csv, write_sliced_csv, CellRecord,
    Correlations, DatasetInfo, FoldMetrics, GroupRecord, OutlierRecord, Quality, QualityReport, SlicedSummary,
};
pub use run::{effective_workers, load_source, run_benchmark, run_benchmark_on, WORKERS_ENV};
