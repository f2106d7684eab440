use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use imputeval::datamodel::{
    infer_numeric_schema, load_dataset, load_dataset_with_schema, read_mask, write_dataset, write_mask, Dataset,
    Normalizer,
};
use imputeval::discrepancy::{feature_stats, sample_stats, KlConfig};
use imputeval::downstream::{classification_metrics, DEFAULT_THRESHOLD};
use imputeval::imputers::{
    impute_multiple, load_external_imputation, write_imputation_set, ImputeMethod, ImputerConfig, MiceConfig,
};
use imputeval::missingness::{induce_mcar, MissingnessSpec};
use imputeval::partition::{make_half_partitions, make_split_plan, DEFAULT_PARTITIONS};
use imputeval::pipeline::{
    correlate_metrics, correlate_quality_vs_auc, emit_report, load_report, write_correlations_csv, Correlations,
    Quality, RunConfig, SlicedSummary,
};
use imputeval::seed::derive_seed;
use imputeval::sliced::{class_c_stats, default_directions, sample_unit_directions, sliced_distances};
use imputeval::synth::{generate_classification, Labeling, SynthConfig};

#[derive(Parser)]
#[command(name = "imputeval", version, about = "Imputation quality and downstream classification benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// How to read a dataset CSV.
#[derive(clap::Args)]
struct DataArgs {
    /// Input CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// JSON feature schema; without one every non-label column is numeric.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Name of the binary label column.
    #[arg(long)]
    label: Option<String>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let label = self.label.as_deref();
        let ds = match &self.schema {
            Some(s) => load_dataset(&self.input, s, label)?,
            None => load_dataset_with_schema(&self.input, &infer_numeric_schema(&self.input, label)?, label)?,
        };
        Ok(ds)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-class dataset.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        sep: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = LabelingArg::Majority)]
        labeling: LabelingArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        schema_out: Option<PathBuf>,
    },
    /// Remove cells completely at random and write the mask.
    Induce {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Remove the same number of cells from every feature.
        #[arg(long)]
        per_column: bool,
        #[arg(long)]
        mask_out: PathBuf,
        /// Also write the masked dataset.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the holdout/development/fold plan for `n` rows as JSON.
    Split {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Impute the masked cells and write one CSV per repeat.
    Impute {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "mice")]
        method: ImputeMethod,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Mask CSV (1 = remove); without one the missing cells of the input are imputed.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Extra rows to fit the imputer on (same columns, may be incomplete).
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long, default_value_t = MiceConfig::default().iterations)]
        iterations: usize,
        #[arg(long, default_value_t = MiceConfig::default().donors)]
        donors: usize,
        #[arg(long)]
        out_prefix: String,
    },
    /// Score completions against the complete data they were masked from.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        mask: PathBuf,
        /// Completed CSVs, e.g. the files written by `impute`.
        #[arg(long, required = true, num_args = 1..)]
        imputed: Vec<PathBuf>,
        #[arg(long)]
        directions: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_PARTITIONS)]
        partitions: usize,
        #[arg(long, default_value_t = 50)]
        kl_bins: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full benchmark grid described by a TOML config.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Recompute correlations from a report and print them as CSV.
    Correlate {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classification metrics for a CSV with `score` and `label` columns.
    Metrics {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum LabelingArg {
    Majority,
    Parity,
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().write_all(bytes)?),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    truth: &Dataset,
    mask_path: &Path,
    imputed: &[PathBuf],
    label: Option<&str>,
    directions: Option<usize>,
    partitions: usize,
    kl_bins: usize,
    seed: u64,
) -> Result<serde_json::Value> {
    if !truth.is_complete() {
        bail!("the reference data must be complete");
    }
    let mask = read_mask(mask_path, truth)?;
    let masked = truth.masked(&mask)?;
    let set = load_external_imputation(imputed, &masked, label)?;
    let norm = Normalizer::fit_all(&masked)?;
    let truth_n = norm.apply(truth)?;
    let d = truth.n_cols();
    let m = directions.unwrap_or_else(|| default_directions(d));
    let dirs = sample_unit_directions(d, m, derive_seed(seed, "sliced/directions"))?;
    let halves = make_half_partitions(truth.n_rows(), partitions, derive_seed(seed, "sliced/partitions"))?;
    let kl = KlConfig {
        bins: kl_bins,
        ..KlConfig::default()
    };
    let mut results = Vec::new();
    for (path, completion) in imputed.iter().zip(&set.completions) {
        let x = norm.apply(completion)?;
        let raw = sliced_distances(&truth_n, &x, &dirs, &halves)?;
        let quality = Quality {
            sample: sample_stats(&truth_n, &x, &mask)?,
            feature: feature_stats(&truth_n, &x, &mask, kl)?,
            sliced: SlicedSummary::from(&class_c_stats(&raw, kl_bins)?),
        };
        results.push(serde_json::json!({
            "file": path.display().to_string(),
            "quality": quality,
        }));
    }
    Ok(serde_json::json!({ "directions": m, "partitions": partitions, "seed": seed, "results": results }))
}

fn read_scores(path: &Path) -> Result<(Vec<f64>, Vec<u8>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().context("empty score file")?.split(',').map(str::trim).collect();
    let col = |name: &str| header.iter().position(|h| *h == name).with_context(|| format!("no `{name}` column"));
    let (si, li) = (col("score")?, col("label")?);
    let (mut scores, mut labels) = (Vec::new(), Vec::new());
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| fields.get(i).copied().with_context(|| format!("row {} is short", n + 1));
        scores.push(get(si)?.parse::<f64>().with_context(|| format!("row {}: bad score", n + 1))?);
        labels.push(match get(li)? {
            "0" => 0,
            "1" => 1,
            other => bail!("row {}: label `{other}` is not 0 or 1", n + 1),
        });
    }
    Ok((scores, labels))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Synth {
            n,
            d,
            sep,
            seed,
            labeling,
            out,
            schema_out,
        } => {
            let cfg = SynthConfig {
                n_samples: n,
                n_features: d,
                class_sep: sep,
                labeling: match labeling {
                    LabelingArg::Majority => Labeling::Majority,
                    LabelingArg::Parity => Labeling::Parity,
                },
                seed,
            };
            let ds = generate_classification(&cfg)?;
            write_dataset(&ds, &out, Some("label"))?;
            if let Some(p) = schema_out {
                ds.schema().to_json_file(&p)?;
            }
        }
        Command::Induce {
            data,
            rate,
            seed,
            per_column,
            mask_out,
            out,
        } => {
            let ds = data.load()?;
            let mask = induce_mcar(&ds, &MissingnessSpec { rate, seed, per_column })?;
            write_mask(&mask, &ds, &mask_out)?;
            if let Some(p) = out {
                write_dataset(&ds.masked(&mask)?, &p, data.label.as_deref())?;
            }
            eprintln!("removed {} of {} cells", mask.count(), ds.n_rows() * ds.n_cols());
        }
        Command::Split { n, seed, out } => {
            let plan = make_split_plan(n, seed)?;
            write_output(Some(&out), &to_json(&plan)?)?;
        }
        Command::Impute {
            data,
            method,
            repeats,
            seed,
            mask,
            train,
            iterations,
            donors,
            out_prefix,
        } => {
            if matches!(method, ImputeMethod::Identity | ImputeMethod::External) {
                bail!("`{method}` cannot be run from the command line; use mean or mice");
            }
            let ds = data.load()?;
            let target = match &mask {
                Some(p) => ds.masked(&read_mask(p, &ds)?)?,
                None => ds,
            };
            let train = match &train {
                Some(p) => {
                    let label = data.label.as_deref();
                    load_dataset_with_schema(p, target.schema(), label)?
                }
                None => target.clone(),
            };
            let cfg = ImputerConfig {
                method,
                mice: MiceConfig {
                    iterations,
                    donors,
                    ..MiceConfig::default()
                },
                repeats,
                seed,
            };
            let set = impute_multiple(&train, &target, &cfg)?;
            for p in write_imputation_set(&set, &out_prefix, data.label.as_deref())? {
                println!("{}", p.display());
            }
        }
        Command::Evaluate {
            data,
            mask,
            imputed,
            directions,
            partitions,
            kl_bins,
            seed,
            out,
        } => {
            let truth = data.load()?;
            let value = evaluate(
                &truth,
                &mask,
                &imputed,
                data.label.as_deref(),
                directions,
                partitions,
                kl_bins,
                seed,
            )?;
            write_output(out.as_deref(), &to_json(&value)?)?;
        }
        Command::Benchmark {
            config,
            output,
            workers,
        } => {
            let mut cfg = RunConfig::from_toml_file(&config)?;
            if workers.is_some() {
                cfg.workers = workers;
            }
            let dir = output
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("imputeval-out"));
            let report = imputeval::pipeline::run_benchmark(&cfg)?;
            for p in emit_report(&report, &dir)? {
                println!("{}", p.display());
            }
            let errors: Vec<_> = report.cells.iter().filter_map(|c| c.error.as_ref().map(|e| (&c.id, e))).collect();
            for (id, e) in errors.iter().take(10) {
                eprintln!("cell {id}: {e}");
            }
            eprintln!("{} cells, {} failed", report.cells.len(), errors.len());
            return Ok(errors.is_empty());
        }
        Command::Correlate { report, out } => {
            let report = load_report(&report)?;
            let correlations = Correlations {
                quality_vs_auc: correlate_quality_vs_auc(&report),
                metrics: correlate_metrics(&report),
            };
            let mut bytes = Vec::new();
            write_correlations_csv(&correlations, &mut bytes)?;
            write_output(out.as_deref(), &bytes)?;
        }
        Command::Metrics { input, threshold } => {
            let (scores, labels) = read_scores(&input)?;
            let m = classification_metrics(&scores, &labels, threshold)?;
            write_output(None, &to_json(&m)?)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
