//! Multi-view datasets: in-memory representation, manifest-driven loading,
//! the CSV and MVB matrix formats, and a synthetic blob generator.
//!
//! MVB layout (little endian): the magic bytes `MVB1`, `u32` rows, `u32`
//! cols, then `rows * cols` `f64` values in row-major order.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const MVB_MAGIC: &[u8; 4] = b"MVB1";

/// `M` feature matrices over the same `N` samples plus optional labels in
/// `[0, c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewDataset {
    pub name: String,
    views: Vec<DMatrix<f64>>,
    labels: Option<Vec<usize>>,
}

impl MultiViewDataset {
    pub fn new(
        name: impl Into<String>,
        views: Vec<DMatrix<f64>>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let first = views
            .first()
            .ok_or_else(|| Error::InvalidArgument("dataset needs at least one view".into()))?;
        let n = first.nrows();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "dataset needs at least 2 samples, got {n}"
            )));
        }
        for (v, x) in views.iter().enumerate() {
            if x.nrows() != n {
                return Err(Error::Shape(format!(
                    "view {v} has {} samples, view 0 has {n}",
                    x.nrows()
                )));
            }
            if x.ncols() == 0 {
                return Err(Error::Shape(format!("view {v} has no features")));
            }
            if let Some(pos) = x.iter().position(|e| !e.is_finite()) {
                let (r, c) = (pos % n, pos / n);
                return Err(Error::InvalidArgument(format!(
                    "view {v} has a non-finite entry at row {r}, column {c}"
                )));
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::Shape(format!("{} labels for {n} samples", l.len())));
            }
        }
        Ok(Self {
            name: name.into(),
            views,
            labels,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].nrows()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn views(&self) -> &[DMatrix<f64>] {
        &self.views
    }

    pub fn view(&self, v: usize) -> &DMatrix<f64> {
        &self.views[v]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of distinct classes, when labels are attached.
    pub fn n_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
    }

    /// All views side by side, `N × Σ d_v`.
    pub fn concatenated(&self) -> DMatrix<f64> {
        let n = self.n_samples();
        let total: usize = self.views.iter().map(|x| x.ncols()).sum();
        let mut out = DMatrix::zeros(n, total);
        let mut offset = 0;
        for x in &self.views {
            out.columns_mut(offset, x.ncols()).copy_from(x);
            offset += x.ncols();
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    Mvb,
}

impl MatrixFormat {
    /// Guesses the format from a file extension (`.mvb` or anything else as CSV).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("mvb") => MatrixFormat::Mvb,
            _ => MatrixFormat::Csv,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::Csv => "csv",
            MatrixFormat::Mvb => "mvb",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewEntry {
    pub name: String,
    pub path: String,
    pub dim: usize,
    pub format: MatrixFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checksum: Option<String>,
}

/// JSON manifest describing a dataset on disk. Relative paths resolve
/// against the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub n_samples: usize,
    pub views: Vec<ViewEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_checksum: Option<String>,
}

/// Hex-encoded SHA-256 of a file's bytes.
pub fn file_checksum(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn verify_checksum(path: &Path, expected: Option<&str>) -> Result<()> {
    if let Some(expected) = expected {
        let found = file_checksum(path)?;
        if !found.eq_ignore_ascii_case(expected) {
            return Err(Error::Checksum {
                path: path.to_path_buf(),
                expected: expected.to_string(),
                found,
            });
        }
    }
    Ok(())
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<MultiViewDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::format(path, format!("malformed manifest: {e}")))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut views = Vec::with_capacity(manifest.views.len());
    for entry in &manifest.views {
        let file = resolve(base, &entry.path);
        verify_checksum(&file, entry.checksum.as_deref())?;
        let x = load_matrix(&file, entry.format)?;
        if x.ncols() != entry.dim {
            return Err(Error::Shape(format!(
                "view '{}' declares dim {} but {} has {} columns",
                entry.name,
                entry.dim,
                file.display(),
                x.ncols()
            )));
        }
        if x.nrows() != manifest.n_samples {
            return Err(Error::Shape(format!(
                "view '{}' declares {} samples but {} has {} rows",
                entry.name,
                manifest.n_samples,
                file.display(),
                x.nrows()
            )));
        }
        views.push(x);
    }

    let labels = match &manifest.labels_path {
        Some(rel) => {
            let file = resolve(base, rel);
            verify_checksum(&file, manifest.labels_checksum.as_deref())?;
            Some(load_labels(&file)?)
        }
        None => None,
    };
    MultiViewDataset::new(manifest.name.clone(), views, labels)
}

/// Writes every view plus labels next to a `manifest.json` in `dir` and
/// returns the manifest path. Checksums are recorded for every file.
pub fn save_dataset(
    dir: impl AsRef<Path>,
    dataset: &MultiViewDataset,
    format: MatrixFormat,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    for (v, x) in dataset.views().iter().enumerate() {
        let file_name = format!("view{}.{}", v + 1, format.extension());
        let file = dir.join(&file_name);
        save_matrix(&file, format, x)?;
        entries.push(ViewEntry {
            name: format!("view{}", v + 1),
            path: file_name,
            dim: x.ncols(),
            format,
            checksum: Some(file_checksum(&file)?),
        });
    }
    let (labels_path, labels_checksum) = match dataset.labels() {
        Some(labels) => {
            let file = dir.join("labels.csv");
            save_labels(&file, labels)?;
            (Some("labels.csv".to_string()), Some(file_checksum(&file)?))
        }
        None => (None, None),
    };
    let manifest = Manifest {
        name: dataset.name.clone(),
        n_samples: dataset.n_samples(),
        views: entries,
        labels_path,
        labels_checksum,
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}

pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    match format {
        MatrixFormat::Csv => load_csv(path),
        MatrixFormat::Mvb => load_mvb(path),
    }
}

pub fn save_matrix(path: impl AsRef<Path>, format: MatrixFormat, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        MatrixFormat::Csv => csv_bytes(m),
        MatrixFormat::Mvb => mvb_bytes(path, m)?,
    };
    write_atomic(path, &bytes)
}

fn load_csv(path: &Path) -> Result<DMatrix<f64>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, format!("row {}: {e}", r + 1)))?;
        if cols.is_some_and(|c| c != record.len()) {
            return Err(Error::format(
                path,
                format!(
                    "row {} has {} cells, expected {}",
                    r + 1,
                    record.len(),
                    cols.unwrap()
                ),
            ));
        }
        cols = Some(record.len());
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::format(
                    path,
                    format!(
                        "non-numeric cell {cell:?} at row {}, column {}",
                        r + 1,
                        c + 1
                    ),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::format(
                    path,
                    format!("non-finite value at row {}, column {}", r + 1, c + 1),
                ));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::format(path, "matrix has zero rows"));
    }
    Ok(DMatrix::from_row_slice(rows, cols.unwrap_or(0), &values))
}

fn csv_bytes(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = String::with_capacity(m.len() * 20);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            // Debug formatting is the shortest representation that round-trips.
            out.push_str(&format!("{:?}", m[(i, j)]));
        }
        out.push('\n');
    }
    out.into_bytes()
}

fn load_mvb(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 12 {
        return Err(Error::format(path, "truncated MVB header"));
    }
    if &bytes[..4] != MVB_MAGIC {
        return Err(Error::format(
            path,
            format!(
                "bad magic {:?}, expected \"MVB1\"",
                String::from_utf8_lossy(&bytes[..4])
            ),
        ));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload = &bytes[12..];
    let expected = rows * cols * 8;
    if payload.len() < expected {
        return Err(Error::format(
            path,
            format!(
                "truncated payload: {} bytes for a {rows}x{cols} matrix",
                payload.len()
            ),
        ));
    }
    if payload.len() > expected {
        return Err(Error::format(
            path,
            format!(
                "{} trailing bytes after a {rows}x{cols} matrix",
                payload.len() - expected
            ),
        ));
    }
    if rows == 0 {
        return Err(Error::format(path, "matrix has zero rows"));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for (idx, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format(
                path,
                format!(
                    "non-finite value at row {}, column {}",
                    idx / cols + 1,
                    idx % cols + 1
                ),
            ));
        }
        values.push(v);
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

fn mvb_bytes(path: &Path, m: &DMatrix<f64>) -> Result<Vec<u8>> {
    let rows =
        u32::try_from(m.nrows()).map_err(|_| Error::format(path, "row count exceeds u32"))?;
    let cols =
        u32::try_from(m.ncols()).map_err(|_| Error::format(path, "column count exceeds u32"))?;
    let mut out = Vec::with_capacity(12 + m.len() * 8);
    out.extend_from_slice(MVB_MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    Ok(out)
}

/// Reads one integer label per line and remaps the distinct values, in
/// ascending order, onto `0..c`.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut raw = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: i64 = line.parse().map_err(|_| {
            Error::format(
                path,
                format!("non-integer label {line:?} on line {}", line_no + 1),
            )
        })?;
        raw.push(v);
    }
    if raw.is_empty() {
        return Err(Error::format(path, "label file is empty"));
    }
    let mut distinct = raw.clone();
    distinct.sort_unstable();
    distinct.dedup();
    Ok(raw
        .iter()
        .map(|v| distinct.binary_search(v).unwrap())
        .collect())
}

pub fn save_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

/// Writes `bytes` to a temporary file beside `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::format(path, format!("serialization failed: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Gaussian blobs observed through several random linear views.
///
/// Every view maps the `clusters` one-hot latent centers through its own
/// standard-normal `clusters × d_v` matrix and adds isotropic noise with the
/// view's standard deviation. Sample `i` belongs to cluster `i % clusters`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBlobs {
    pub n_per_cluster: usize,
    pub clusters: usize,
    pub dims: Vec<usize>,
    pub noise_sigmas: Vec<f64>,
    pub seed: u64,
}

impl SyntheticBlobs {
    pub fn generate(&self) -> Result<MultiViewDataset> {
        if self.n_per_cluster == 0 || self.clusters == 0 {
            return Err(Error::InvalidArgument(
                "cluster count and cluster size must be positive".into(),
            ));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::InvalidArgument(
                "every view needs a positive dimension".into(),
            ));
        }
        if self.noise_sigmas.len() != self.dims.len() {
            return Err(Error::Shape(format!(
                "{} noise levels for {} views",
                self.noise_sigmas.len(),
                self.dims.len()
            )));
        }
        if self
            .noise_sigmas
            .iter()
            .any(|s| !(s.is_finite() && *s >= 0.0))
        {
            return Err(Error::InvalidArgument(
                "noise levels must be finite and >= 0".into(),
            ));
        }
        let n = self.n_per_cluster * self.clusters;
        let labels: Vec<usize> = (0..n).map(|i| i % self.clusters).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut views = Vec::with_capacity(self.dims.len());
        for (&d, &sigma) in self.dims.iter().zip(&self.noise_sigmas) {
            let centers =
                DMatrix::<f64>::from_fn(self.clusters, d, |_, _| StandardNormal.sample(&mut rng));
            let mut x = DMatrix::zeros(n, d);
            for i in 0..n {
                for j in 0..d {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    x[(i, j)] = centers[(labels[i], j)] + sigma * noise;
                }
            }
            views.push(x);
        }
        MultiViewDataset::new(
            format!(
                "blobs-{}x{}-seed{}",
                self.clusters, self.n_per_cluster, self.seed
            ),
            views,
            Some(labels),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| {
            rng.random_range(-1e3..1e3) * rng.random::<f64>()
        })
    }

    #[test]
    fn matrix_round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let m = random_matrix(7, 3, 11);
        for format in [MatrixFormat::Csv, MatrixFormat::Mvb] {
            let path = dir.path().join(format!("m.{}", format.extension()));
            save_matrix(&path, format, &m).unwrap();
            let back = load_matrix(&path, format).unwrap();
            assert_eq!(back, m, "{format:?}");
        }
    }

    #[test]
    fn mvb_rejects_bad_magic_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.mvb");
        let mut bytes = b"XXXX".to_vec();
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&1.0f64.to_le_bytes());
        fs::write(&path, &bytes).unwrap();
        let err = load_matrix(&path, MatrixFormat::Mvb)
            .unwrap_err()
            .to_string();
        assert!(err.contains("bad magic"), "{err}");

        bytes[..4].copy_from_slice(b"MVB1");
        bytes.truncate(bytes.len() - 3);
        fs::write(&path, &bytes).unwrap();
        let err = load_matrix(&path, MatrixFormat::Mvb)
            .unwrap_err()
            .to_string();
        assert!(err.contains("truncated"), "{err}");
    }

    #[test]
    fn csv_errors_are_located() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        fs::write(&path, "").unwrap();
        let err = load_matrix(&path, MatrixFormat::Csv)
            .unwrap_err()
            .to_string();
        assert!(err.contains("zero rows"), "{err}");

        fs::write(&path, "1,2\n3,abc\n").unwrap();
        let err = load_matrix(&path, MatrixFormat::Csv)
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 2, column 2"), "{err}");

        fs::write(&path, "1,2\n3,NaN\n").unwrap();
        let err = load_matrix(&path, MatrixFormat::Csv)
            .unwrap_err()
            .to_string();
        assert!(err.contains("non-finite value at row 2, column 2"), "{err}");

        fs::write(&path, "1,2\n3\n").unwrap();
        assert!(load_matrix(&path, MatrixFormat::Csv).is_err());
    }

    #[test]
    fn mvb_rejects_non_finite() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mvb");
        let mut m = DMatrix::<f64>::zeros(2, 2);
        m[(1, 0)] = f64::INFINITY;
        // Bypass validation by writing raw bytes.
        fs::write(&path, mvb_bytes(&path, &m).unwrap()).unwrap();
        let err = load_matrix(&path, MatrixFormat::Mvb)
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 2, column 1"), "{err}");
    }

    #[test]
    fn manifest_single_view_and_dim_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "1,2\n3,4\n5,6\n7,8\n").unwrap();
        let manifest = |dim: usize| {
            format!(
                r#"{{"name":"toy","n_samples":4,"views":[{{"name":"first","path":"a.csv","dim":{dim},"format":"csv"}}]}}"#
            )
        };
        let mpath = dir.path().join("manifest.json");
        fs::write(&mpath, manifest(2)).unwrap();
        let ds = load_manifest(&mpath).unwrap();
        assert_eq!((ds.n_samples(), ds.n_views()), (4, 1));
        assert!(ds.labels().is_none());

        fs::write(&mpath, manifest(3)).unwrap();
        let err = load_manifest(&mpath).unwrap_err().to_string();
        assert!(err.contains("'first'") && err.contains("dim 3"), "{err}");

        fs::write(&mpath, "{not json").unwrap();
        assert!(matches!(load_manifest(&mpath), Err(Error::Format { .. })));

        fs::write(
            &mpath,
            r#"{"name":"toy","n_samples":4,"views":[{"name":"x","path":"missing.csv","dim":2,"format":"csv"}]}"#,
        )
        .unwrap();
        assert!(load_manifest(&mpath).unwrap_err().is_io());
    }

    #[test]
    fn manifest_checksum_failure() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "1,2\n3,4\n").unwrap();
        let mpath = dir.path().join("manifest.json");
        fs::write(
            &mpath,
            r#"{"name":"toy","n_samples":2,"views":[{"name":"x","path":"a.csv","dim":2,"format":"csv","checksum":"00"}]}"#,
        )
        .unwrap();
        assert!(matches!(load_manifest(&mpath), Err(Error::Checksum { .. })));
    }

    #[test]
    fn dataset_round_trip_preserves_view_order_and_labels() {
        let dir = tempfile::tempdir().unwrap();
        let ds = MultiViewDataset::new(
            "rt",
            vec![
                random_matrix(5, 2, 1),
                random_matrix(5, 4, 2),
                random_matrix(5, 1, 3),
            ],
            Some(vec![0, 1, 2, 1, 0]),
        )
        .unwrap();
        for format in [MatrixFormat::Csv, MatrixFormat::Mvb] {
            let sub = dir.path().join(format.extension());
            let mpath = save_dataset(&sub, &ds, format).unwrap();
            let back = load_manifest(&mpath).unwrap();
            assert_eq!(back, ds);
        }
    }

    #[test]
    fn labels_are_densified() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.csv");
        fs::write(&path, "7\n-1\n7\n3\n").unwrap();
        assert_eq!(load_labels(&path).unwrap(), vec![2, 0, 2, 1]);
    }

    #[test]
    fn noiseless_blobs_sit_on_cluster_centers() {
        let ds = SyntheticBlobs {
            n_per_cluster: 4,
            clusters: 3,
            dims: vec![5],
            noise_sigmas: vec![0.0],
            seed: 9,
        }
        .generate()
        .unwrap();
        let x = ds.view(0);
        let labels = ds.labels().unwrap();
        let mut distinct: Vec<Vec<u64>> = (0..x.nrows())
            .map(|i| x.row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 3);
        for i in 0..x.nrows() {
            for j in 0..x.nrows() {
                if labels[i] == labels[j] {
                    assert_eq!(x.row(i), x.row(j));
                }
            }
        }
    }

    #[test]
    fn blobs_are_deterministic() {
        let blobs = SyntheticBlobs {
            n_per_cluster: 10,
            clusters: 2,
            dims: vec![3, 4],
            noise_sigmas: vec![0.5, 1.0],
            seed: 42,
        };
        let a = blobs.generate().unwrap();
        let b = blobs.generate().unwrap();
        for (x, y) in a.views().iter().zip(b.views()) {
            assert!(x
                .iter()
                .zip(y.iter())
                .all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }

    #[test]
    fn dataset_validation() {
        let a = DMatrix::<f64>::zeros(3, 2);
        let b = DMatrix::<f64>::zeros(4, 2);
        assert!(MultiViewDataset::new("x", vec![a.clone(), b], None).is_err());
        assert!(MultiViewDataset::new("x", vec![], None).is_err());
        assert!(MultiViewDataset::new("x", vec![a.clone()], Some(vec![0, 1])).is_err());
        let mut c = a.clone();
        c[(2, 1)] = f64::NAN;
        let err = MultiViewDataset::new("x", vec![c], None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 2, column 1"), "{err}");
    }
}
