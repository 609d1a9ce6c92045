use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Emit, ExperimentConfig};
use super::parallel_map;
use crate::datagen::io::{read_dataset, read_header, read_points, write_atomic, write_dataset};
use crate::datagen::{corrupt_gmm_model, generate_list_dataset, CorruptionModel};
use crate::diagnostics::{gmm_cluster_metrics, MetricReport};
use crate::error::{Error, Result};
use crate::estimator::{covariance_list_decoding, EffectiveConstants, EstimatorConfig, Hypothesis, NodeId, RecursionTrace};
use crate::matlin::SymMatrix;
use crate::rng::derive_seed;

pub const RESULTS_SCHEMA_VERSION: u32 = 1;
pub const TRACE_SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 10] =
    ["seed", "d", "m", "alpha", "eps", "adversary", "list_size", "best_overlap_frac", "best_rel_frob", "wall_ms"];

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// `dir/trial-0007` for trial 7.
pub fn trial_stem(dir: &Path, trial: usize) -> PathBuf {
    dir.join(format!("trial-{trial:04}"))
}

/// Writes one dataset triplet per trial under `output_dir` (or `out`) and
/// returns the header paths in trial order. Trial `i` uses seed
/// `derive_seed(master_seed, i)`.
pub fn cmd_generate(config: &ExperimentConfig, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let dir = out.unwrap_or(&config.output_dir).to_path_buf();
    let g = &config.generation;
    let trials: Vec<usize> = (0..config.trials).collect();
    parallel_map(&trials, |&i| {
        let seed = derive_seed(config.master_seed, i as u64);
        let ds = match g.spec.model {
            CorruptionModel::ListDecoding => generate_list_dataset(&g.components[0].params, &g.spec, seed)?,
            CorruptionModel::GmmContamination => {
                let comps: Vec<_> = g.components.iter().map(|c| (c.weight, c.params.clone())).collect();
                corrupt_gmm_model(&comps, &g.spec, seed)?
            }
        };
        write_dataset(&ds, &trial_stem(&dir, i))
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisRecord {
    pub node_id: String,
    pub level: usize,
    pub size: usize,
    pub indices: Vec<usize>,
    /// `H`, row-major `d x d`.
    pub h_entries: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallTimes {
    pub load_ms: f64,
    pub estimate_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsFile {
    pub schema_version: u32,
    /// Header path of the dataset as given on the command line.
    pub dataset: String,
    pub dataset_seed: u64,
    pub dim: usize,
    pub m: usize,
    pub config: EstimatorConfig,
    pub emit: Emit,
    pub constants: EffectiveConstants,
    pub list_size: usize,
    pub hypotheses: Vec<HypothesisRecord>,
    pub trace_file: Option<String>,
    pub wall_times: WallTimes,
}

impl ResultsFile {
    /// Hypotheses in library form, for the metric routines.
    pub fn to_hypotheses(&self) -> Result<Vec<Hypothesis>> {
        self.hypotheses
            .iter()
            .map(|h| {
                let path = if h.node_id == "root" { String::new() } else { h.node_id.clone() };
                Ok(Hypothesis {
                    h_matrix: SymMatrix::new(self.dim, h.h_entries.clone())?,
                    indices: h.indices.clone(),
                    node: NodeId { level: h.level, path },
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFile {
    pub schema_version: u32,
    pub trace: RecursionTrace,
}

/// Default results path: `<output_dir>/<dataset stem>.results.json`.
pub fn default_results_path(config: &ExperimentConfig, dataset: &Path) -> PathBuf {
    let stem = dataset.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into());
    config.output_dir.join(format!("{stem}.results.json"))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let base = name.strip_suffix(".results.json").or_else(|| name.strip_suffix(".json")).unwrap_or(&name);
    path.with_file_name(format!("{base}{suffix}"))
}

/// Runs the estimator on a dataset's points (labels are never read) and
/// writes the results file, plus the trace when `emit.trace` is set.
pub fn cmd_estimate(config: &ExperimentConfig, dataset: &Path, out: &Path, seed: Option<u64>) -> Result<ResultsFile> {
    let t0 = Instant::now();
    let header = read_header(dataset)?;
    let points = read_points(dataset)?;
    let load_ms = t0.elapsed().as_secs_f64() * 1e3;
    let mut est_cfg = config.estimator.clone();
    if let Some(s) = seed {
        est_cfg.seed = s;
    }
    let t1 = Instant::now();
    let est = covariance_list_decoding(&points, &est_cfg)?;
    let estimate_ms = t1.elapsed().as_secs_f64() * 1e3;

    let trace_file = if config.emit.trace {
        let path = sibling(out, ".trace.json");
        write_json(&path, &TraceFile { schema_version: TRACE_SCHEMA_VERSION, trace: est.trace.clone() })?;
        path.file_name().map(|s| s.to_string_lossy().into_owned())
    } else {
        None
    };
    let results = ResultsFile {
        schema_version: RESULTS_SCHEMA_VERSION,
        dataset: dataset.display().to_string(),
        dataset_seed: header.seed,
        dim: header.dim,
        m: header.m,
        config: est_cfg,
        emit: config.emit,
        constants: est.trace.constants,
        list_size: est.hypotheses.len(),
        hypotheses: est
            .hypotheses
            .iter()
            .map(|h| HypothesisRecord {
                node_id: h.node.to_string(),
                level: h.node.level,
                size: h.size(),
                indices: h.indices.clone(),
                h_entries: h.h_matrix.as_slice().to_vec(),
            })
            .collect(),
        trace_file,
        wall_times: WallTimes { load_ms, estimate_ms },
    };
    write_json(out, &results)?;
    Ok(results)
}

pub fn read_results(path: &Path) -> Result<ResultsFile> {
    let r: ResultsFile = read_json(path)?;
    if r.schema_version != RESULTS_SCHEMA_VERSION {
        return Err(Error::InvalidFile { path: path.into(), reason: format!("unsupported schema_version {}", r.schema_version) });
    }
    Ok(r)
}

/// One metrics CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub seed: u64,
    pub d: usize,
    pub m: usize,
    pub alpha: f64,
    pub eps: f64,
    pub adversary: String,
    pub list_size: usize,
    /// Smallest over components of the best overlap fraction.
    pub best_overlap_frac: f64,
    /// Largest over components of the best-overlap hypothesis' relative Frobenius error.
    pub best_rel_frob: f64,
    pub wall_ms: f64,
}

pub struct Evaluation {
    pub report: MetricReport,
    pub row: CsvRow,
}

/// Scores a results file against the dataset's labels, writes the metric
/// report next to the results (or to `out`) and appends one row to `csv`.
pub fn cmd_evaluate(results_path: &Path, dataset: &Path, out: Option<&Path>, csv_path: Option<&Path>) -> Result<Evaluation> {
    let results = read_results(results_path)?;
    let ds = read_dataset(dataset)?;
    if ds.dim() != results.dim || ds.len() != results.m {
        return Err(Error::InvalidFile {
            path: dataset.into(),
            reason: format!("dataset is {}x{}, results were computed on {}x{}", ds.len(), ds.dim(), results.m, results.dim),
        });
    }
    let report = gmm_cluster_metrics(&ds, &results.to_hypotheses()?)?;
    let row = CsvRow {
        seed: ds.seed,
        d: ds.dim(),
        m: ds.len(),
        alpha: ds.spec.alpha,
        eps: ds.spec.epsilon,
        adversary: ds.spec.adversary.id.clone(),
        list_size: report.list_size,
        best_overlap_frac: report.worst_overlap_fraction(),
        best_rel_frob: report
            .per_component
            .values()
            .map(|c| c.rel_frob_error.unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max),
        wall_ms: results.wall_times.estimate_ms,
    };
    if results.emit.metrics || out.is_some() {
        write_json(&out.map_or_else(|| sibling(results_path, ".metrics.json"), Path::to_path_buf), &report)?;
    }
    if results.emit.csv || csv_path.is_some() {
        let path = csv_path.map_or_else(|| results_path.with_file_name("metrics.csv"), Path::to_path_buf);
        append_csv_row(&path, &row)?;
    }
    Ok(Evaluation { report, row })
}

/// Appends `row`, writing the header first if the file is new. The whole file
/// is rewritten through a temporary so readers never see a torn row.
pub fn append_csv_row(path: &Path, row: &CsvRow) -> Result<()> {
    let mut bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(Error::io(path, e)),
    };
    if bytes.is_empty() {
        bytes.extend_from_slice(CSV_COLUMNS.join(",").as_bytes());
        bytes.push(b'\n');
    } else if !bytes.starts_with(CSV_COLUMNS.join(",").as_bytes()) {
        return Err(Error::InvalidFile { path: path.into(), reason: "existing CSV has a different header".into() });
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.serialize(row)?;
    bytes.extend(w.into_inner().map_err(|e| Error::io(path, e.into_error()))?);
    write_atomic(path, &bytes)
}
