//! Dataset ingestion: NPY/CSV readers, hyperspectral cube flattening and
//! binary class-pair extraction.

mod npy;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, Array3, ArrayView2, Axis, Ix1, Ix2, Ix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use npy::{load_npy, parse_npy, to_npy_bytes, write_npy, NpyArray, NpyData, NpyDtype};

use crate::{Error, Result};

/// Class id reserved for unlabeled pixels.
pub const UNLABELED: u32 = 0;

/// Labeled sample matrix: one row per point, one column per spectral band.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDataset {
    samples: Array2<f64>,
    labels: Array1<u32>,
    source: String,
}

impl SpectralDataset {
    pub fn new(
        samples: Array2<f64>,
        labels: Array1<u32>,
        source: impl Into<String>,
    ) -> Result<Self> {
        let (m, n) = samples.dim();
        if labels.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: labels.len(),
            });
        }
        if m < 2 || n < 2 {
            return Err(Error::InvalidInput(format!(
                "a dataset needs at least 2 samples and 2 bands, got {m}x{n}"
            )));
        }
        if let Some(((i, j), v)) = samples.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value {v} at row {i}, column {j}"
            )));
        }
        Ok(Self {
            samples,
            labels,
            source: source.into(),
        })
    }

    pub fn samples(&self) -> ArrayView2<'_, f64> {
        self.samples.view()
    }

    pub fn labels(&self) -> &Array1<u32> {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn band_count(&self) -> usize {
        self.samples.ncols()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Number of samples per class id, in ascending id order.
    pub fn class_counts(&self) -> BTreeMap<u32, usize> {
        let mut counts = BTreeMap::new();
        for &l in &self.labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        counts
    }

    pub fn into_parts(self) -> (Array2<f64>, Array1<u32>, String) {
        (self.samples, self.labels, self.source)
    }
}

/// A hyperspectral scene: `H x W x B` reflectance plus an `H x W` ground-truth
/// map where [`UNLABELED`] marks pixels without a class.
#[derive(Debug, Clone)]
pub struct HsiCube {
    data: Array3<f64>,
    ground_truth: Array2<u32>,
}

impl HsiCube {
    pub fn new(data: Array3<f64>, ground_truth: Array2<u32>) -> Result<Self> {
        let (h, w, b) = data.dim();
        if ground_truth.dim() != (h, w) {
            return Err(Error::InvalidInput(format!(
                "cube is {h}x{w} but ground truth is {}x{}",
                ground_truth.nrows(),
                ground_truth.ncols()
            )));
        }
        if b == 0 {
            return Err(Error::InvalidInput("cube has no bands".into()));
        }
        Ok(Self { data, ground_truth })
    }

    /// Loads a cube and its ground truth from two NPY files.
    pub fn load(cube_path: impl AsRef<Path>, gt_path: impl AsRef<Path>) -> Result<Self> {
        let cube = load_npy(cube_path.as_ref())?;
        if cube.ndim() != 3 {
            return Err(Error::Npy(format!(
                "{}: expected a 3-d cube, found shape {:?}",
                cube_path.as_ref().display(),
                cube.shape
            )));
        }
        let gt = load_npy(gt_path.as_ref())?;
        if gt.ndim() != 2 {
            return Err(Error::Npy(format!(
                "{}: expected a 2-d ground truth, found shape {:?}",
                gt_path.as_ref().display(),
                gt.shape
            )));
        }
        let data = cube
            .to_f64()
            .into_dimensionality::<Ix3>()
            .expect("ndim checked");
        let ground_truth = gt
            .to_labels()?
            .into_dimensionality::<Ix2>()
            .expect("ndim checked");
        Self::new(data, ground_truth)
    }

    /// A seeded stand-in scene: `classes` classes laid out in 5x5 patches
    /// (with an unlabeled pixel at each patch corner), smooth class spectra on
    /// a large positive baseline, and uniform noise.
    pub fn synthetic(
        seed: u64,
        height: usize,
        width: usize,
        bands: usize,
        classes: u32,
    ) -> Result<Self> {
        if classes == 0 {
            return Err(Error::InvalidInput(
                "synthetic scene needs at least one class".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gt = Array2::zeros((height, width));
        let mut data = Array3::zeros((height, width, bands));
        for i in 0..height {
            for j in 0..width {
                let label = if i % 5 == 0 && j % 5 == 0 {
                    UNLABELED
                } else {
                    1 + ((i / 5 + 2 * (j / 5)) as u32 % classes)
                };
                gt[[i, j]] = label;
                let c = f64::from(label.max(1));
                let brightness = 1.0 + 0.2 * rng.random_range(-1.0..1.0);
                for b in 0..bands {
                    let t = b as f64 / bands as f64;
                    let common = 200.0 * (1.5 * std::f64::consts::PI * t).sin();
                    let class_shape = 12.0 * c * (std::f64::consts::PI * t * (1.0 + 0.5 * c)).sin();
                    let signal = 1000.0 + common + class_shape;
                    data[[i, j, b]] = brightness * signal + 80.0 * rng.random_range(-1.0..1.0);
                }
            }
        }
        Self::new(data, gt)
    }

    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    pub fn ground_truth(&self) -> &Array2<u32> {
        &self.ground_truth
    }
}

/// An ordered pair of distinct classes for binary classification.
/// `class_a` maps to label 0 and `class_b` to label 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassPairTask {
    class_a: u32,
    class_b: u32,
}

impl ClassPairTask {
    pub fn new(class_a: u32, class_b: u32) -> Result<Self> {
        if class_a == class_b {
            return Err(Error::InvalidInput(format!(
                "class pair needs two distinct classes, got {class_a}/{class_b}"
            )));
        }
        Ok(Self { class_a, class_b })
    }

    pub fn class_a(&self) -> u32 {
        self.class_a
    }

    pub fn class_b(&self) -> u32 {
        self.class_b
    }
}

impl fmt::Display for ClassPairTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.class_a, self.class_b)
    }
}

impl FromStr for ClassPairTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once('/').ok_or_else(|| {
            Error::InvalidInput(format!("class pair '{s}' is not of the form A/B"))
        })?;
        let parse = |t: &str| {
            t.trim().parse::<u32>().map_err(|_| {
                Error::InvalidInput(format!("class pair '{s}': '{t}' is not a class id"))
            })
        };
        Self::new(parse(a)?, parse(b)?)
    }
}

/// Which CSV column carries the integer class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Last,
}

pub fn load_csv(
    path: impl AsRef<Path>,
    has_header: bool,
    label_column: LabelColumn,
) -> Result<SpectralDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, has_header, label_column, &path.display().to_string())
}

/// Parses CSV text. Row and column numbers in errors are 1-based and count
/// the header line when present.
pub fn parse_csv(
    text: &str,
    has_header: bool,
    label_column: LabelColumn,
    source: &str,
) -> Result<SpectralDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Csv {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if has_header && i == 0 {
            continue;
        }
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let columns = record.len();
        match width {
            None => {
                if columns < 3 {
                    return Err(Error::Csv {
                        row,
                        column: columns,
                        message: "need at least two feature columns and a label column".into(),
                    });
                }
                width = Some(columns)
            }
            Some(w) if w != columns => {
                return Err(Error::Csv {
                    row,
                    column: columns,
                    message: format!("ragged row: expected {w} columns, found {columns}"),
                })
            }
            _ => {}
        }
        let label_idx = match label_column {
            LabelColumn::Last => columns - 1,
            LabelColumn::Index(k) if k < columns => k,
            LabelColumn::Index(k) => {
                return Err(Error::Csv {
                    row,
                    column: k + 1,
                    message: format!("label column {k} out of range"),
                })
            }
        };
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                let label = cell.parse::<u32>().map_err(|_| Error::Csv {
                    row,
                    column: j + 1,
                    message: format!("label '{cell}' is not a non-negative integer"),
                })?;
                labels.push(label);
            } else {
                let v = cell
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Csv {
                        row,
                        column: j + 1,
                        message: format!("'{cell}' is not a finite number"),
                    })?;
                values.push(v);
            }
        }
    }
    let width = width.ok_or(Error::Empty)?;
    let samples = Array2::from_shape_vec((labels.len(), width - 1), values)
        .expect("rectangular by construction");
    SpectralDataset::new(samples, Array1::from(labels), source)
}

/// Turns a cube into a labeled point set: one row per pixel whose label is in
/// `keep_classes`, in raster order. Unlabeled pixels are always dropped.
pub fn flatten_cube(cube: &HsiCube, keep_classes: &BTreeSet<u32>) -> Result<SpectralDataset> {
    if keep_classes.is_empty() {
        return Err(Error::InvalidInput("keep_classes is empty".into()));
    }
    let bands = cube.data.len_of(Axis(2));
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for ((r, c), &label) in cube.ground_truth.indexed_iter() {
        if label != UNLABELED && keep_classes.contains(&label) {
            values.extend(cube.data.slice(ndarray::s![r, c, ..]).iter().copied());
            labels.push(label);
        }
    }
    if labels.is_empty() {
        return Err(Error::NoSamples);
    }
    let samples =
        Array2::from_shape_vec((labels.len(), bands), values).expect("rectangular by construction");
    let classes: Vec<String> = keep_classes.iter().map(u32::to_string).collect();
    SpectralDataset::new(
        samples,
        Array1::from(labels),
        format!(
            "cube {:?} classes {{{}}}",
            cube.data.dim(),
            classes.join(",")
        ),
    )
}

/// Extracts the two classes of `task`, relabeled to `{0, 1}`, preserving order.
pub fn select_pair(ds: &SpectralDataset, task: ClassPairTask) -> Result<SpectralDataset> {
    let counts = ds.class_counts();
    for class in [task.class_a, task.class_b] {
        if !counts.contains_key(&class) {
            return Err(Error::MissingClass(class));
        }
    }
    let rows: Vec<usize> = ds
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == task.class_a || l == task.class_b)
        .map(|(i, _)| i)
        .collect();
    let samples = ds.samples.select(Axis(0), &rows);
    let labels: Array1<u32> = rows
        .iter()
        .map(|&i| u32::from(ds.labels[i] == task.class_b))
        .collect();
    SpectralDataset::new(samples, labels, format!("{} | pair {task}", ds.source))
}

/// Loads a flat dataset: either a `.csv` file (label in the last column,
/// optional header detected from a non-numeric first line) or a directory
/// holding `samples.npy` and `labels.npy`.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<SpectralDataset> {
    let path = path.as_ref();
    if path.is_dir() {
        let samples = load_npy(path.join(SAMPLES_FILE))?;
        let labels = load_npy(path.join(LABELS_FILE))?;
        if samples.ndim() != 2 || labels.ndim() != 1 {
            return Err(Error::Npy(format!(
                "{}: expected 2-d samples and 1-d labels, found {:?} and {:?}",
                path.display(),
                samples.shape,
                labels.shape
            )));
        }
        let x = samples
            .to_f64()
            .into_dimensionality::<Ix2>()
            .expect("ndim checked");
        let y = labels
            .to_labels()?
            .into_dimensionality::<Ix1>()
            .expect("ndim checked");
        return SpectralDataset::new(x, y, path.display().to_string());
    }
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::from(std::io::ErrorKind::NotFound),
        ));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let has_header = text
        .lines()
        .next()
        .and_then(|l| l.split(',').next())
        .is_some_and(|cell| cell.trim().parse::<f64>().is_err());
    parse_csv(
        &text,
        has_header,
        LabelColumn::Last,
        &path.display().to_string(),
    )
}

pub const SAMPLES_FILE: &str = "samples.npy";
pub const LABELS_FILE: &str = "labels.npy";

/// Writes `samples.npy` (`<f8`) and `labels.npy` (`<u4`) into `dir`.
pub fn save_dataset_npy(ds: &SpectralDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let samples = NpyArray::from_f64(&ds.samples.clone().into_dyn());
    write_npy(dir.join(SAMPLES_FILE), &samples)?;
    let labels = NpyArray::new(vec![ds.len()], NpyData::U32(ds.labels.to_vec()))?;
    write_npy(dir.join(LABELS_FILE), &labels)
}

/// Writes the dataset as CSV with a `b0..b{n-1},label` header line.
pub fn save_dataset_csv(ds: &SpectralDataset, path: impl AsRef<Path>) -> Result<()> {
    use std::fmt::Write as _;
    let path = path.as_ref();
    let mut out = String::new();
    let header: Vec<String> = (0..ds.band_count()).map(|j| format!("b{j}")).collect();
    writeln!(out, "{},label", header.join(",")).unwrap();
    for (row, label) in ds.samples.rows().into_iter().zip(ds.labels.iter()) {
        for v in row {
            write!(out, "{},", crate::fmt_f64(*v)).unwrap();
        }
        writeln!(out, "{label}").unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
