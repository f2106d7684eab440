use std::collections::BTreeMap;

use rayon::prelude::*;

use super::config::RunConfig;
use super::correlate::{correlate_metrics, correlate_quality_vs_auc};
use super::report::{
    CellRecord, Correlations, DatasetInfo, FoldMetrics, GroupRecord, OutlierRecord, Quality,
    QualityReport, SlicedSummary,
};
use crate::datamodel::{
    format_number, infer_numeric_schema, load_dataset, load_dataset_with_schema, postprocess_imputed,
    Dataset, Mask, Normalizer,
};
use crate::discrepancy::{feature_stats, sample_stats, KlConfig};
use crate::downstream::{
    auc, best_candidate, classification_metrics, pool_predictions, predict_proba, train_logreg_path,
};
use crate::error::{Error, Result};
use crate::imputers::{impute_joint, ImputeMethod};
use crate::missingness::{induce_mcar, MissingnessSpec};
use crate::partition::{make_half_partitions, make_split_plan, SplitPlan, N_FOLDS, N_HOLDOUTS};
use crate::seed::derive_seed;
use crate::sliced::{
    class_c_stats, default_directions, outlier_proportions, quantile_thresholds, sample_unit_directions,
    sliced_distances, DirectionSet, SlicedResult,
};
use crate::synth::{generate_classification, SynthConfig};

pub const WORKERS_ENV: &str = "IMPUTEVAL_WORKERS";

/// Worker count: the configured value (or every core), capped by
/// `IMPUTEVAL_WORKERS` when that is set to a positive integer.
pub fn effective_workers(configured: Option<usize>) -> usize {
    let base = configured.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    let cap = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    cap.map_or(base, |c| base.min(c)).max(1)
}

/// Build or load the configured dataset.
pub fn load_source(cfg: &RunConfig) -> Result<Dataset> {
    if let Some(s) = &cfg.data.synth {
        let synth = SynthConfig {
            n_samples: s.n_samples,
            n_features: s.n_features,
            class_sep: s.class_sep,
            labeling: s.labeling,
            seed: derive_seed(cfg.seed, "synth"),
        };
        return generate_classification(&synth);
    }
    let path = cfg
        .data
        .path
        .as_ref()
        .ok_or_else(|| Error::invalid("data needs `synth` or `path`"))?;
    let label = cfg.data.label.as_deref();
    match &cfg.data.schema {
        Some(schema) => load_dataset(path, schema, label),
        None => load_dataset_with_schema(path, &infer_numeric_schema(path, label)?, label),
    }
}

pub fn run_benchmark(cfg: &RunConfig) -> Result<QualityReport> {
    cfg.validate()?;
    let data = load_source(cfg)?;
    run_benchmark_on(cfg, &data)
}

/// Run the grid on an already-loaded dataset (the configured data source is
/// only echoed).
pub fn run_benchmark_on(cfg: &RunConfig, data: &Dataset) -> Result<QualityReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(effective_workers(cfg.workers))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| Runner::prepare(cfg, data)?.run())
}

fn rate_key(rate: f64) -> String {
    format_number(rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct UnitKey {
    h: usize,
    tr: usize,
    te: usize,
    method: usize,
    v: usize,
    k: usize,
}

struct UnitOutput {
    quality: Option<Quality>,
    quality_skipped: Option<String>,
    sliced_raw: Option<SlicedResult>,
    /// Per iteration checkpoint.
    val_probs: Vec<Vec<f64>>,
    hold_probs: Vec<Vec<f64>>,
}

struct Holdout {
    /// Development rows of the full data with the mask for each train rate.
    dev_masked: Vec<Dataset>,
    dev_truth: Dataset,
    normalizers: Vec<std::result::Result<Normalizer, String>>,
    hold_masked: Vec<Dataset>,
    hold_masks: Vec<Mask>,
    hold_truth: Dataset,
    hold_labels: Vec<u8>,
    /// Per fold: positions within the development rows of the training and
    /// validation rows.
    folds: Vec<(Vec<usize>, Vec<usize>)>,
    dev_labels: Vec<u8>,
    sliced: Option<(DirectionSet, crate::partition::HalfPartitionSet)>,
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    natural: bool,
    data: &'a Dataset,
    train_rates: Vec<f64>,
    test_rates: Vec<f64>,
    checkpoints: Vec<usize>,
    holdouts: Vec<Holdout>,
}

impl<'a> Runner<'a> {
    fn prepare(cfg: &'a RunConfig, data: &'a Dataset) -> Result<Self> {
        let labels = data
            .labels()
            .ok_or_else(|| Error::invalid("benchmark data needs labels"))?;
        let natural = !data.is_complete();
        let (train_rates, test_rates) = if natural {
            (vec![0.0], vec![0.0])
        } else {
            (cfg.missingness.train_rates.clone(), cfg.missingness.test_rates.clone())
        };
        let mut checkpoints = cfg.classifier.candidates.clone();
        checkpoints.sort_unstable();
        checkpoints.dedup();

        let plan: SplitPlan = make_split_plan(data.n_rows(), derive_seed(cfg.seed, "split"))?;
        let d = data.n_cols();
        let m = cfg.sliced.directions.unwrap_or_else(|| default_directions(d));
        if m < d {
            return Err(Error::invalid(format!(
                "sliced directions ({m}) must be at least the number of columns ({d})"
            )));
        }

        let mut holdouts = Vec::with_capacity(N_HOLDOUTS);
        for h in 0..N_HOLDOUTS {
            let dev_rows = &plan.developments[h];
            let hold_rows = &plan.holdouts[h];
            let dev_truth = data.select_rows(dev_rows);
            let hold_truth = data.select_rows(hold_rows);
            let position = |i: &usize| dev_rows.binary_search(i).expect("fold rows lie in the development set");
            let folds = (0..N_FOLDS)
                .map(|v| {
                    let val: Vec<usize> = plan.folds[h][v].iter().map(position).collect();
                    let train: Vec<usize> = plan.training_rows(h, v).iter().map(position).collect();
                    (train, val)
                })
                .collect();

            let mut dev_masked = Vec::new();
            let mut normalizers = Vec::new();
            for &rate in &train_rates {
                let masked = if natural {
                    dev_truth.clone()
                } else {
                    let spec = MissingnessSpec {
                        rate,
                        seed: derive_seed(cfg.seed, &format!("mask/dev/h{h}/tr{}", rate_key(rate))),
                        per_column: cfg.missingness.per_column,
                    };
                    dev_truth.masked(&induce_mcar(&dev_truth, &spec)?)?
                };
                normalizers.push(Normalizer::fit_all(&masked).map_err(|e| e.to_string()));
                dev_masked.push(masked);
            }
            let mut hold_masked = Vec::new();
            let mut hold_masks = Vec::new();
            for &rate in &test_rates {
                if natural {
                    hold_masks.push(Mask::of_missing(&hold_truth));
                    hold_masked.push(hold_truth.clone());
                } else {
                    let spec = MissingnessSpec {
                        rate,
                        seed: derive_seed(cfg.seed, &format!("mask/holdout/h{h}/te{}", rate_key(rate))),
                        per_column: cfg.missingness.per_column,
                    };
                    let mask = induce_mcar(&hold_truth, &spec)?;
                    hold_masked.push(hold_truth.masked(&mask)?);
                    hold_masks.push(mask);
                }
            }
            let sliced = if natural {
                None
            } else {
                let dirs = sample_unit_directions(d, m, derive_seed(cfg.seed, &format!("sliced/h{h}/directions")))?;
                let halves = make_half_partitions(
                    hold_rows.len(),
                    cfg.sliced.partitions,
                    derive_seed(cfg.seed, &format!("sliced/h{h}/partitions")),
                )?;
                Some((dirs, halves))
            };
            holdouts.push(Holdout {
                dev_masked,
                dev_truth,
                normalizers,
                hold_masked,
                hold_masks,
                hold_truth,
                hold_labels: hold_rows.iter().map(|&i| labels[i]).collect(),
                folds,
                dev_labels: dev_rows.iter().map(|&i| labels[i]).collect(),
                sliced,
            });
        }
        Ok(Self {
            cfg,
            natural,
            data,
            train_rates,
            test_rates,
            checkpoints,
            holdouts,
        })
    }

    fn methods(&self) -> &[ImputeMethod] {
        &self.cfg.imputation.methods
    }

    fn cell_id(&self, key: &UnitKey) -> String {
        format!(
            "h{}/tr{}/te{}/{}/v{}/k{}",
            key.h,
            rate_key(self.train_rates[key.tr]),
            rate_key(self.test_rates[key.te]),
            self.methods()[key.method],
            key.v,
            key.k
        )
    }

    fn unit_keys(&self) -> Vec<UnitKey> {
        let mut keys = Vec::new();
        for h in 0..N_HOLDOUTS {
            for tr in 0..self.train_rates.len() {
                for te in 0..self.test_rates.len() {
                    for method in 0..self.methods().len() {
                        for v in 0..N_FOLDS {
                            for k in 0..self.cfg.imputation.repeats {
                                keys.push(UnitKey { h, tr, te, method, v, k });
                            }
                        }
                    }
                }
            }
        }
        keys
    }

    fn run_unit(&self, key: &UnitKey, seed: u64) -> Result<UnitOutput> {
        let hd = &self.holdouts[key.h];
        let norm = hd.normalizers[key.tr]
            .as_ref()
            .map_err(|e| Error::invalid(format!("normalizer: {e}")))?;
        let (train_pos, val_pos) = &hd.folds[key.v];
        let dev = &hd.dev_masked[key.tr];
        let train = dev.select_rows(train_pos);
        let val = dev.select_rows(val_pos);
        let hold = &hd.hold_masked[key.te];
        let target = Dataset::vstack(&[&val, hold])?;

        let method = self.methods()[key.method];
        let truth = if method == ImputeMethod::Identity {
            if self.natural {
                return Err(Error::invalid("identity imputation needs a ground truth"));
            }
            let t = hd.dev_truth.select_rows(train_pos);
            let g = Dataset::vstack(&[&hd.dev_truth.select_rows(val_pos), &hd.hold_truth])?;
            Some((t, g))
        } else {
            None
        };
        let completion = impute_joint(
            method,
            &self.cfg.imputation.mice,
            &train,
            &target,
            seed,
            truth.as_ref().map(|(t, g)| (t, g)),
        )?;
        let train_n = norm.apply(&postprocess_imputed(&completion.train))?;
        let target_n = norm.apply(&postprocess_imputed(&completion.target))?;
        let n_val = val.n_rows();
        let val_rows: Vec<usize> = (0..n_val).collect();
        let hold_rows: Vec<usize> = (n_val..target_n.n_rows()).collect();
        let val_n = target_n.select_rows(&val_rows);
        let hold_n = target_n.select_rows(&hold_rows);

        let (quality, quality_skipped, sliced_raw) = match &hd.sliced {
            None => (None, Some("no ground truth: the data has natural missing cells".to_string()), None),
            Some((dirs, halves)) => {
                let mask = &hd.hold_masks[key.te];
                if mask.count() == 0 {
                    (None, Some("the holdout has no masked cells".to_string()), None)
                } else {
                    let truth_n = norm.apply(&hd.hold_truth)?;
                    let kl = KlConfig {
                        bins: self.cfg.sliced.kl_bins,
                        ..KlConfig::default()
                    };
                    let sample = sample_stats(&truth_n, &hold_n, mask)?;
                    let feature = feature_stats(&truth_n, &hold_n, mask, kl)?;
                    let raw = sliced_distances(&truth_n, &hold_n, dirs, halves)?;
                    let c = class_c_stats(&raw, self.cfg.sliced.kl_bins)?;
                    let q = Quality {
                        sample,
                        feature,
                        sliced: SlicedSummary::from(&c),
                    };
                    (Some(q), None, Some(raw))
                }
            }
        };

        let train_labels: Vec<u8> = train_pos.iter().map(|&i| hd.dev_labels[i]).collect();
        let path = train_logreg_path(
            train_n.view(),
            &train_labels,
            &self.checkpoints,
            &self.cfg.classifier.policy,
        )?;
        let mut val_probs = Vec::with_capacity(path.len());
        let mut hold_probs = Vec::with_capacity(path.len());
        for model in &path {
            val_probs.push(predict_proba(model, val_n.view())?);
            hold_probs.push(predict_proba(model, hold_n.view())?);
        }
        Ok(UnitOutput {
            quality,
            quality_skipped,
            sliced_raw,
            val_probs,
            hold_probs,
        })
    }

    fn run(self) -> Result<QualityReport> {
        let keys = self.unit_keys();
        let ids: Vec<String> = keys.iter().map(|k| self.cell_id(k)).collect();
        let seeds: Vec<u64> = ids.iter().map(|id| derive_seed(self.cfg.seed, id)).collect();
        let outputs: Vec<std::result::Result<UnitOutput, String>> = keys
            .par_iter()
            .zip(seeds.par_iter())
            .map(|(key, &seed)| self.run_unit(key, seed).map_err(|e| e.to_string()))
            .collect();

        let mut cells: Vec<CellRecord> = keys
            .iter()
            .zip(&ids)
            .zip(&seeds)
            .zip(&outputs)
            .map(|(((key, id), &seed), out)| {
                let (quality, quality_skipped, error) = match out {
                    Ok(o) => (o.quality.clone(), o.quality_skipped.clone(), None),
                    Err(e) => (None, None, Some(e.clone())),
                };
                CellRecord {
                    id: id.clone(),
                    holdout: key.h,
                    fold: key.v,
                    method: self.methods()[key.method],
                    repeat: key.k,
                    train_rate: self.train_rates[key.tr],
                    test_rate: self.test_rates[key.te],
                    seed,
                    quality,
                    quality_skipped,
                    metrics: None,
                    error,
                }
            })
            .collect();
        let index: BTreeMap<UnitKey, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();

        let mut groups = Vec::new();
        for h in 0..N_HOLDOUTS {
            for tr in 0..self.train_rates.len() {
                for te in 0..self.test_rates.len() {
                    for method in 0..self.methods().len() {
                        let unit = |v: usize, k: usize| index[&UnitKey { h, tr, te, method, v, k }];
                        let mut record = GroupRecord {
                            holdout: h,
                            method: self.methods()[method],
                            train_rate: self.train_rates[tr],
                            test_rate: self.test_rates[te],
                            candidates: self.checkpoints.clone(),
                            validation_auc: Vec::new(),
                            selected_max_iter: None,
                            folds: Vec::new(),
                            error: None,
                        };
                        match self.reduce_group(h, &outputs, &unit) {
                            Ok((val_auc, ci, folds, per_cell)) => {
                                record.validation_auc = val_auc;
                                record.selected_max_iter = Some(self.checkpoints[ci]);
                                record.folds = folds;
                                for ((v, k), m) in per_cell {
                                    cells[unit(v, k)].metrics = Some(m);
                                }
                            }
                            Err(e) => record.error = Some(e),
                        }
                        groups.push(record);
                    }
                }
            }
        }

        let outliers = self.outliers(&cells, &index);
        let sliced_raw = ids
            .iter()
            .zip(outputs)
            .filter_map(|(id, out)| out.ok().and_then(|o| o.sliced_raw).map(|r| (id.clone(), r)))
            .collect();
        let n_errors = cells.iter().filter(|c| c.error.is_some()).count()
            + groups.iter().filter(|g| g.error.is_some()).count();
        let labels = self.data.labels().unwrap_or_default();
        let mut report = QualityReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.cfg.clone(),
            dataset: DatasetInfo {
                n_rows: self.data.n_rows(),
                n_features: self.data.schema().len(),
                n_columns: self.data.n_cols(),
                n_positive: labels.iter().filter(|&&y| y == 1).count(),
                natural_missingness: self.natural,
            },
            cells,
            groups,
            outliers,
            correlations: None,
            n_errors,
            sliced_raw,
        };
        if !self.natural {
            report.correlations = Some(Correlations {
                quality_vs_auc: correlate_quality_vs_auc(&report),
                metrics: correlate_metrics(&report),
            });
        }
        Ok(report)
    }

    /// Model selection and pooled holdout metrics for one group. Returns the
    /// per-candidate validation AUC, the selected checkpoint index, pooled
    /// per-fold metrics and the per-repeat holdout metrics.
    #[allow(clippy::type_complexity)]
    fn reduce_group(
        &self,
        h: usize,
        outputs: &[std::result::Result<UnitOutput, String>],
        unit: &dyn Fn(usize, usize) -> usize,
    ) -> std::result::Result<
        (Vec<f64>, usize, Vec<FoldMetrics>, Vec<((usize, usize), crate::downstream::EvalMetrics)>),
        String,
    > {
        let hd = &self.holdouts[h];
        let repeats = self.cfg.imputation.repeats;
        let mut units: Vec<Vec<&UnitOutput>> = Vec::with_capacity(N_FOLDS);
        let mut failed = Vec::new();
        for v in 0..N_FOLDS {
            let mut row = Vec::with_capacity(repeats);
            for k in 0..repeats {
                match &outputs[unit(v, k)] {
                    Ok(o) => row.push(o),
                    Err(_) => failed.push(format!("v{v}/k{k}")),
                }
            }
            units.push(row);
        }
        if !failed.is_empty() {
            return Err(format!("failed cells: {}", failed.join(", ")));
        }
        let err = |e: Error| e.to_string();
        let pooling = self.cfg.classifier.pooling;
        let val_labels: Vec<Vec<u8>> = hd
            .folds
            .iter()
            .map(|(_, val)| val.iter().map(|&i| hd.dev_labels[i]).collect())
            .collect();

        let mut fold_auc = vec![vec![0.0; self.checkpoints.len()]; N_FOLDS];
        for ((row, labels), scores) in units.iter().zip(&val_labels).zip(fold_auc.iter_mut()) {
            for (c, score) in scores.iter_mut().enumerate() {
                let probs: Vec<Vec<f64>> = row.iter().map(|o| o.val_probs[c].clone()).collect();
                let pooled = pool_predictions(&probs, pooling).map_err(err)?;
                *score = auc(&pooled, labels).map_err(err)?;
            }
        }
        let means: Vec<f64> = (0..self.checkpoints.len())
            .map(|c| fold_auc.iter().map(|f| f[c]).sum::<f64>() / N_FOLDS as f64)
            .collect();
        let best = best_candidate(&self.checkpoints, &means).map_err(err)?;
        let ci = self.checkpoints.iter().position(|&c| c == best).expect("selected from checkpoints");

        let threshold = self.cfg.classifier.threshold;
        let mut folds = Vec::with_capacity(N_FOLDS);
        let mut per_cell = Vec::new();
        for (v, row) in units.iter().enumerate() {
            let probs: Vec<Vec<f64>> = row.iter().map(|o| o.hold_probs[ci].clone()).collect();
            let pooled = pool_predictions(&probs, pooling).map_err(err)?;
            folds.push(FoldMetrics {
                fold: v,
                pooled: classification_metrics(&pooled, &hd.hold_labels, threshold).map_err(err)?,
                validation_auc: fold_auc[v][ci],
            });
            for (k, p) in probs.iter().enumerate() {
                per_cell.push(((v, k), classification_metrics(p, &hd.hold_labels, threshold).map_err(err)?));
            }
        }
        Ok((means, ci, folds, per_cell))
    }

    fn outliers(&self, cells: &[CellRecord], index: &BTreeMap<UnitKey, usize>) -> Vec<OutlierRecord> {
        let mut out = Vec::new();
        if self.natural {
            return out;
        }
        for method in 0..self.methods().len() {
            for tr in 0..self.train_rates.len() {
                for te in 0..self.test_rates.len() {
                    let mut distances: BTreeMap<(String, usize), f64> = BTreeMap::new();
                    let mut run = 0;
                    for (key, &i) in index {
                        if (key.method, key.tr, key.te) != (method, tr, te) {
                            continue;
                        }
                        if let Some(q) = &cells[i].quality {
                            for f in &q.feature.per_feature {
                                distances.insert((f.name.clone(), run), f.w2);
                            }
                        }
                        run += 1;
                    }
                    if distances.is_empty() {
                        continue;
                    }
                    let oc = &self.cfg.outliers;
                    let absolute = outlier_proportions(&distances, &oc.thresholds).unwrap_or_default();
                    let cuts = quantile_thresholds(&distances, &oc.quantiles).unwrap_or_default();
                    let at_cuts = outlier_proportions(&distances, &cuts).unwrap_or_default();
                    let quantile = oc
                        .quantiles
                        .iter()
                        .zip(at_cuts)
                        .map(|(&q, (t, p))| (q, t, p))
                        .collect();
                    out.push(OutlierRecord {
                        method: self.methods()[method],
                        train_rate: self.train_rates[tr],
                        test_rate: self.test_rates[te],
                        n_distances: distances.len(),
                        absolute,
                        quantile,
                    });
                }
            }
        }
        out
    }
}
