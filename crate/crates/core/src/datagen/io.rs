//! Dataset file triplet:
//!
//! * `<stem>.json`: header with dimension, counts, corruption spec, seed and truth;
//! * `<stem>.bin`: `m · d` little-endian `f64`, row-major;
//! * `<stem>.labels.csv`: `index,label` rows, labels `inlier:<component>` or `outlier:<group>`.
//!
//! Points round-trip bit-exactly.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Component, ComponentCounts, CorruptionModel, CorruptionSpec, Dataset, Label};
use crate::error::{Error, Result};
use crate::points::Points;

pub const DATASET_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub schema_version: u32,
    pub dim: usize,
    pub m: usize,
    pub model: CorruptionModel,
    pub spec: CorruptionSpec,
    pub seed: u64,
    pub truth: Vec<Component>,
    pub counts: Vec<ComponentCounts>,
    /// File names relative to the header's directory.
    pub points_file: String,
    pub labels_file: String,
}

/// Sibling paths `(header, points, labels)` for a header path or bare stem.
pub fn dataset_paths(path: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let stem = if path.extension().is_some_and(|e| e == "json") { path.with_extension("") } else { path.to_path_buf() };
    let with = |suffix: &str| {
        let mut s = stem.clone().into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    };
    (with(".json"), with(".bin"), with(".labels.csv"))
}

/// Writes `bytes` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn encode_points(points: &Points) -> Vec<u8> {
    points.as_slice().iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode_points(bytes: &[u8], dim: usize) -> Result<Points> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::DimensionMismatch { expected: 0, got: bytes.len() % 8 });
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    Points::new(dim, data)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Writes the triplet next to `path` and returns the header path.
pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<PathBuf> {
    let (header_path, points_path, labels_path) = dataset_paths(path);
    let header = DatasetHeader {
        schema_version: DATASET_SCHEMA_VERSION,
        dim: ds.dim(),
        m: ds.len(),
        model: ds.spec.model,
        spec: ds.spec.clone(),
        seed: ds.seed,
        truth: ds.truth.clone(),
        counts: ds.counts.clone(),
        points_file: file_name(&points_path),
        labels_file: file_name(&labels_path),
    };
    write_atomic(&points_path, &encode_points(ds.points()))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "label"])?;
    for (i, l) in ds.labels.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()])?;
    }
    let csv_bytes = w.into_inner().map_err(|e| Error::io(&labels_path, e.into_error()))?;
    write_atomic(&labels_path, &csv_bytes)?;
    let mut json = serde_json::to_vec_pretty(&header)?;
    json.push(b'\n');
    write_atomic(&header_path, &json)?;
    Ok(header_path)
}

pub fn read_header(path: &Path) -> Result<DatasetHeader> {
    let (header_path, _, _) = dataset_paths(path);
    let text = fs::read(&header_path).map_err(|e| Error::io(&header_path, e))?;
    let header: DatasetHeader = serde_json::from_slice(&text)?;
    if header.schema_version != DATASET_SCHEMA_VERSION {
        return Err(Error::InvalidFile {
            path: header_path,
            reason: format!("unsupported schema_version {}", header.schema_version),
        });
    }
    Ok(header)
}

/// Reads points only; labels are not touched.
pub fn read_points(path: &Path) -> Result<Points> {
    let header = read_header(path)?;
    let (header_path, _, _) = dataset_paths(path);
    load_points(&header_path, &header)
}

fn load_points(header_path: &Path, header: &DatasetHeader) -> Result<Points> {
    let dir = header_path.parent().unwrap_or(Path::new(""));
    let points_path = dir.join(&header.points_file);
    let bytes = fs::read(&points_path).map_err(|e| Error::io(&points_path, e))?;
    if bytes.len() != header.m * header.dim * 8 {
        return Err(Error::InvalidFile {
            path: points_path,
            reason: format!("{} bytes, expected m·d·8 = {}", bytes.len(), header.m * header.dim * 8),
        });
    }
    decode_points(&bytes, header.dim)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let header = read_header(path)?;
    let (header_path, _, _) = dataset_paths(path);
    let points = load_points(&header_path, &header)?;
    let dir = header_path.parent().unwrap_or(Path::new(""));
    let labels_path = dir.join(&header.labels_file);
    let mut r = csv::Reader::from_path(&labels_path)?;
    let mut labels = Vec::with_capacity(header.m);
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let invalid = |reason: String| Error::InvalidFile { path: labels_path.clone(), reason };
        let idx: usize = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| invalid(format!("bad index on row {k}")))?;
        if idx != k {
            return Err(invalid(format!("row {k} has index {idx}")));
        }
        let label: Label = rec.get(1).ok_or_else(|| invalid(format!("missing label on row {k}")))?.parse().map_err(invalid)?;
        labels.push(label);
    }
    Dataset::new(points, labels, header.truth, header.counts, header.spec, header.seed)
}
