//! Dataset generation, corruption, file I/O, and preprocessing.
//!
//! Two synthetic families cover the experiments:
//!
//! * [`gen_support_anchor`]: four fixed anchor points whose maximal-margin
//!   separator is known in closed form (`w* = (1/2, 1/2)`), padded with
//!   filler points rejection-sampled to clear a strictly larger margin so
//!   the anchors stay the active constraints at any sample size;
//! * [`gen_gaussian_blobs`]: two isotropic Gaussian clouds at mirrored
//!   centers, the standard overlap testbed for label noise studies.
//!
//! [`flip_labels`] corrupts an exact count of labels (seeded, an involution
//! under the same seed), [`load_file`]/[`save_csv`] read and write CSV and
//! sparse index:value formats, [`standardize`] recenters and rescales with
//! train-set statistics only, and [`split`] performs a seeded shuffle
//! split. [`prepare`] chains all of these from a single [`DataConfig`].
//!
//! Every random choice flows through a `ChaCha8` generator seeded from the
//! caller's `u64`, so all outputs are reproducible across runs and
//! platforms.

use std::fs::File;
use std::io::{BufRead, BufReader, Write as IoWrite};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::model::{Dataset, ModelError};

/// Anchor points of the closed-form instance; labels +1, +1, -1, -1.
pub const ANCHOR_POINTS: [[f64; 2]; 4] = [[0.5, 1.5], [1.5, 0.5], [-0.5, -1.5], [-1.5, -0.5]];

/// Separator the anchor instance is built around.
const ANCHOR_SEPARATOR: [f64; 2] = [0.5, 0.5];

/// Fillers must clear this margin against the separator; the anchors sit
/// exactly at margin 1, so they remain the closest points.
const FILLER_MARGIN: f64 = 1.1;

/// Fillers are drawn uniformly from this centered square.
const FILLER_HALF_WIDTH: f64 = 3.0;

/// Blob centers sit at plus and minus this point.
const BLOB_CENTER: [f64; 2] = [0.5, 0.5];

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: could not parse {what}: {content}")]
    Parse {
        line: usize,
        what: &'static str,
        content: String,
    },
    #[error("labels take {distinct} distinct values; exactly two are needed")]
    LabelCardinality { distinct: usize },
    #[error("line {line}: label {value} is not finite")]
    NonFiniteLabel { line: usize, value: f64 },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("blob generation needs an even total, got {n_total}")]
    OddBlobCount { n_total: usize },
    #[error("noise fraction {p} must lie in [0, 1]")]
    InvalidNoise { p: f64 },
    #[error("train fraction {fraction} must lie in (0, 1]")]
    InvalidFraction { fraction: f64 },
    #[error("blob standard deviation {std} must be positive and finite")]
    InvalidStd { std: f64 },
    #[error("file has no feature columns")]
    NoColumns,
}

/// Where the points come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Closed-form anchor instance padded to `n_total` points.
    SupportAnchor { n_total: usize },
    /// Two mirrored Gaussian clouds, `n_total / 2` points each.
    GaussianBlobs { n_total: usize, std: f64 },
    /// Points read from disk.
    File { path: PathBuf, format: FileFormat },
}

/// On-disk formats [`load_file`] understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    /// Comma-separated values, features first, label last, header optional.
    Csv,
    /// Sparse `label index:value ...` lines with 1-based indices.
    Libsvm,
}

/// Full data pipeline description: source, label noise, train/test split,
/// and standardization, all driven by one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub source: DataSource,
    /// Fraction of labels to flip after generation.
    pub noise_p: f64,
    /// Train fraction; 1.0 keeps everything in the train set.
    pub split: f64,
    pub standardize: bool,
    pub seed: u64,
}

/// Per-feature statistics [`standardize`] applied, kept so test points and
/// later queries can be mapped the same way.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub mean: Array1<f64>,
    /// Population standard deviation; exact-zero entries are replaced by 1
    /// so constant features pass through centered but unscaled.
    pub std: Array1<f64>,
}

impl Standardization {
    /// Applies the recorded affine map to one point.
    pub fn apply_point(&self, x: &Array1<f64>) -> Array1<f64> {
        (x - &self.mean) / &self.std
    }
}

/// Output of [`prepare`]: the ready train set, the optional held-out set,
/// and the standardization record when one was applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Option<Dataset>,
    pub standardization: Option<Standardization>,
}

/// Generates the anchor instance padded with `n_total - 4` fillers.
///
/// The first four points are always the fixed anchors (two per class);
/// fillers alternate labels starting with +1 and are rejection-sampled
/// uniformly from the centered square until their signed margin against
/// the built-in separator reaches 1.1. The anchors sit at margin exactly 1,
/// so they are the unique active points of the maximal-margin problem and
/// the separator is `(1/2, 1/2)` regardless of `n_total`.
pub fn gen_support_anchor(n_total: usize, seed: u64) -> Result<Dataset, DataError> {
    if n_total < 4 {
        return Err(DataError::TooFewPoints {
            needed: 4,
            got: n_total,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Array2::<f64>::zeros((n_total, 2));
    let mut labels = Array1::<f64>::zeros(n_total);
    for (i, anchor) in ANCHOR_POINTS.iter().enumerate() {
        points[[i, 0]] = anchor[0];
        points[[i, 1]] = anchor[1];
        labels[i] = if i < 2 { 1.0 } else { -1.0 };
    }
    for i in 4..n_total {
        let y = if (i - 4) % 2 == 0 { 1.0 } else { -1.0 };
        loop {
            let z0 = rng.random_range(-FILLER_HALF_WIDTH..FILLER_HALF_WIDTH);
            let z1 = rng.random_range(-FILLER_HALF_WIDTH..FILLER_HALF_WIDTH);
            let margin = y * (ANCHOR_SEPARATOR[0] * z0 + ANCHOR_SEPARATOR[1] * z1);
            if margin >= FILLER_MARGIN {
                points[[i, 0]] = z0;
                points[[i, 1]] = z1;
                labels[i] = y;
                break;
            }
        }
    }
    Ok(Dataset::new(points, labels)?)
}

/// Generates two mirrored Gaussian clouds: the first half of the points
/// around `(0.5, 0.5)` with label +1, the second half around the negated
/// center with label -1, isotropic with the given standard deviation.
pub fn gen_gaussian_blobs(n_total: usize, std: f64, seed: u64) -> Result<Dataset, DataError> {
    if n_total < 2 {
        return Err(DataError::TooFewPoints {
            needed: 2,
            got: n_total,
        });
    }
    if n_total % 2 != 0 {
        return Err(DataError::OddBlobCount { n_total });
    }
    if !(std > 0.0 && std.is_finite()) {
        return Err(DataError::InvalidStd { std });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std).expect("validated above");
    let half = n_total / 2;
    let mut points = Array2::<f64>::zeros((n_total, 2));
    let mut labels = Array1::<f64>::zeros(n_total);
    for i in 0..n_total {
        let sign = if i < half { 1.0 } else { -1.0 };
        points[[i, 0]] = sign * BLOB_CENTER[0] + normal.sample(&mut rng);
        points[[i, 1]] = sign * BLOB_CENTER[1] + normal.sample(&mut rng);
        labels[i] = sign;
    }
    Ok(Dataset::new(points, labels)?)
}

/// Flips the labels of exactly `round(p * n)` points chosen without
/// replacement by a seeded shuffle. Flipping twice with the same seed
/// restores the original dataset.
pub fn flip_labels(dataset: &Dataset, p: f64, seed: u64) -> Result<Dataset, DataError> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(DataError::InvalidNoise { p });
    }
    let n = dataset.n();
    let k = ((p * n as f64).round() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let mut labels = dataset.labels().to_owned();
    for &i in indices.iter().take(k) {
        labels[i] = -labels[i];
    }
    Ok(Dataset::new(dataset.points().to_owned(), labels)?)
}

/// Reads a dataset from disk.
///
/// CSV rows hold features first and the label last; a header line is
/// detected by a non-numeric field and skipped. The sparse format holds
/// `label index:value` pairs with 1-based indices and infers the dimension
/// from the largest index. In both formats the raw labels must take exactly
/// two distinct values, which are mapped in ascending order to -1 and +1
/// (so labels already in `{-1, +1}` pass through unchanged).
pub fn load_file(path: &Path, format: FileFormat) -> Result<Dataset, DataError> {
    let (rows, raw_labels) = match format {
        FileFormat::Csv => read_csv(path)?,
        FileFormat::Libsvm => read_libsvm(path)?,
    };
    if rows.is_empty() {
        return Err(DataError::TooFewPoints { needed: 1, got: 0 });
    }
    let labels = map_labels(&raw_labels)?;
    let d = rows[0].len();
    if d == 0 {
        return Err(DataError::NoColumns);
    }
    let mut points = Array2::<f64>::zeros((rows.len(), d));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            points[[i, j]] = v;
        }
    }
    Ok(Dataset::new(points, Array1::from_vec(labels))?)
}

fn read_csv(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>), DataError> {
    // Open via File so a missing path surfaces as an i/o error, not a csv one.
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(File::open(path)?);
    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let fields: Vec<&str> = record.iter().collect();
        if fields.is_empty() || (fields.len() == 1 && fields[0].is_empty()) {
            continue;
        }
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse::<f64>().ok()).collect();
        match parsed {
            Some(values) => {
                if values.len() < 2 {
                    return Err(DataError::Parse {
                        line: line + 1,
                        what: "a row with at least one feature and a label",
                        content: fields.join(","),
                    });
                }
                let (label, features) = values.split_last().expect("length checked");
                rows.push(features.to_vec());
                raw_labels.push(*label);
            }
            None if rows.is_empty() => {
                // Non-numeric line before any data row: header, skip it.
            }
            None => {
                return Err(DataError::Parse {
                    line: line + 1,
                    what: "numeric fields",
                    content: fields.join(","),
                });
            }
        }
    }
    Ok((rows, raw_labels))
}

fn read_libsvm(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>), DataError> {
    let reader = BufReader::new(File::open(path)?);
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut raw_labels = Vec::new();
    let mut max_index = 0usize;
    for (line_idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label_str = parts.next().expect("non-empty line has a first token");
        let label: f64 = label_str.parse().map_err(|_| DataError::Parse {
            line: line_idx + 1,
            what: "a numeric label",
            content: label_str.to_string(),
        })?;
        let mut entries = Vec::new();
        for part in parts {
            let (idx_str, val_str) = part.split_once(':').ok_or_else(|| DataError::Parse {
                line: line_idx + 1,
                what: "an index:value pair",
                content: part.to_string(),
            })?;
            let idx: usize = idx_str.parse().map_err(|_| DataError::Parse {
                line: line_idx + 1,
                what: "a 1-based feature index",
                content: idx_str.to_string(),
            })?;
            if idx == 0 {
                return Err(DataError::Parse {
                    line: line_idx + 1,
                    what: "a 1-based feature index",
                    content: part.to_string(),
                });
            }
            let val: f64 = val_str.parse().map_err(|_| DataError::Parse {
                line: line_idx + 1,
                what: "a numeric feature value",
                content: val_str.to_string(),
            })?;
            max_index = max_index.max(idx);
            entries.push((idx - 1, val));
        }
        sparse.push(entries);
        raw_labels.push(label);
    }
    let mut rows = Vec::with_capacity(sparse.len());
    for entries in sparse {
        let mut row = vec![0.0; max_index];
        for (idx, val) in entries {
            row[idx] = val;
        }
        rows.push(row);
    }
    Ok((rows, raw_labels))
}

fn map_labels(raw: &[f64]) -> Result<Vec<f64>, DataError> {
    let mut distinct: Vec<f64> = Vec::new();
    for (line, &v) in raw.iter().enumerate() {
        if !v.is_finite() {
            return Err(DataError::NonFiniteLabel {
                line: line + 1,
                value: v,
            });
        }
        if !distinct.iter().any(|&d| d == v) {
            distinct.push(v);
        }
    }
    if distinct.len() != 2 {
        return Err(DataError::LabelCardinality {
            distinct: distinct.len(),
        });
    }
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite labels"));
    Ok(raw
        .iter()
        .map(|&v| if v == distinct[0] { -1.0 } else { 1.0 })
        .collect())
}

/// Writes a dataset as headerless CSV, features first, label last, using
/// the shortest exact decimal form of each value so a round trip through
/// [`load_file`] reproduces the dataset bit for bit.
pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    let mut out = String::new();
    for i in 0..dataset.n() {
        let mut fields: Vec<String> = dataset.point(i).iter().map(|v| format!("{v}")).collect();
        fields.push(format!("{}", dataset.label(i)));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    let mut file = File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Centers and rescales features using train-set statistics only, and
/// applies the same affine map to the optional test set.
///
/// Uses population standard deviations; features with exactly zero
/// variance keep divisor 1 so they come out centered at zero.
pub fn standardize(
    train: &Dataset,
    test: Option<&Dataset>,
) -> Result<(Dataset, Option<Dataset>, Standardization), DataError> {
    let n = train.n() as f64;
    let d = train.d();
    let mut mean = Array1::<f64>::zeros(d);
    for i in 0..train.n() {
        mean += &train.point(i);
    }
    mean /= n;
    let mut var = Array1::<f64>::zeros(d);
    for i in 0..train.n() {
        let diff = &train.point(i) - &mean;
        var += &(&diff * &diff);
    }
    var /= n;
    let std = var.mapv(|v| if v.sqrt() == 0.0 { 1.0 } else { v.sqrt() });
    let record = Standardization { mean, std };

    let transform = |ds: &Dataset| -> Result<Dataset, DataError> {
        let mut points = Array2::<f64>::zeros((ds.n(), ds.d()));
        for i in 0..ds.n() {
            let row = record.apply_point(&ds.point(i).to_owned());
            for j in 0..ds.d() {
                points[[i, j]] = row[j];
            }
        }
        Ok(Dataset::new(points, ds.labels().to_owned())?)
    };
    let train_out = transform(train)?;
    let test_out = match test {
        Some(ts) => Some(transform(ts)?),
        None => None,
    };
    Ok((train_out, test_out, record))
}

/// Splits a dataset by a seeded shuffle: the first `ceil(fraction * n)`
/// shuffled points form the train set; the rest, if any, the test set.
pub fn split(
    dataset: &Dataset,
    fraction: f64,
    seed: u64,
) -> Result<(Dataset, Option<Dataset>), DataError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(DataError::InvalidFraction { fraction });
    }
    let n = dataset.n();
    let k = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let take = |ids: &[usize]| -> Result<Dataset, DataError> {
        let mut points = Array2::<f64>::zeros((ids.len(), dataset.d()));
        let mut labels = Array1::<f64>::zeros(ids.len());
        for (row, &i) in ids.iter().enumerate() {
            for j in 0..dataset.d() {
                points[[row, j]] = dataset.point(i)[j];
            }
            labels[row] = dataset.label(i);
        }
        Ok(Dataset::new(points, labels)?)
    };
    let train = take(&indices[..k])?;
    let test = if k < n {
        Some(take(&indices[k..])?)
    } else {
        None
    };
    Ok((train, test))
}

/// Runs the full pipeline: generate or load, flip labels, split, and
/// standardize. Sub-stages use offset seeds (`seed`, `seed + 1`, `seed + 2`
/// for generation, noise, and split) so changing one stage's randomness
/// never reshuffles another's.
pub fn prepare(config: &DataConfig) -> Result<Prepared, DataError> {
    let base = match &config.source {
        DataSource::SupportAnchor { n_total } => gen_support_anchor(*n_total, config.seed)?,
        DataSource::GaussianBlobs { n_total, std } => {
            gen_gaussian_blobs(*n_total, *std, config.seed)?
        }
        DataSource::File { path, format } => load_file(path, *format)?,
    };
    let noisy = if config.noise_p > 0.0 {
        flip_labels(&base, config.noise_p, config.seed.wrapping_add(1))?
    } else {
        if !(0.0..=1.0).contains(&config.noise_p) {
            return Err(DataError::InvalidNoise { p: config.noise_p });
        }
        base
    };
    let (train, test) = split(&noisy, config.split, config.seed.wrapping_add(2))?;
    if config.standardize {
        let (train, test, record) = standardize(&train, test.as_ref())?;
        Ok(Prepared {
            train,
            test,
            standardization: Some(record),
        })
    } else {
        Ok(Prepared {
            train,
            test,
            standardization: None,
        })
    }
}
