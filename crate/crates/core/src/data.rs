//! Delimited-text datasets, splits, standardization and the dataset manifest.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Samples × features.
    pub x: Array2<f64>,
    pub y: Vec<usize>,
    pub feature_names: Vec<String>,
    /// Label strings in code order.
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Vec<usize>, feature_names: Vec<String>, class_names: Vec<String>) -> Result<Self> {
        let d = Dataset {
            x: x.as_standard_layout().into_owned(),
            y,
            feature_names,
            class_names,
        };
        d.check()?;
        Ok(d)
    }

    fn check(&self) -> Result<()> {
        if self.x.nrows() != self.y.len() {
            return Err(Error::Data(format!(
                "{} rows but {} labels",
                self.x.nrows(),
                self.y.len()
            )));
        }
        if self.feature_names.len() != self.x.ncols() {
            return Err(Error::Data("feature name count differs from column count".into()));
        }
        if let Some(&bad) = self.y.iter().find(|&&c| c >= self.class_names.len()) {
            return Err(Error::Data(format!("label {bad} out of range")));
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite feature value".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.x.ncols()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    /// Features of sample `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.x.ncols();
        &self.x.as_slice().expect("row-major feature matrix")[i * k..(i + 1) * k]
    }

    /// Rows `idx`, in the given order. Class metadata is kept.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.class_count()];
        self.y.iter().for_each(|&l| c[l] += 1);
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[default]
    Ordinal,
    Onehot,
}

/// Column roles for [`load_csv`].
#[derive(Debug, Clone, Default)]
pub struct CsvSchema {
    pub label: String,
    pub categorical: Vec<String>,
    pub encoding: Encoding,
}

impl CsvSchema {
    pub fn label(label: impl Into<String>) -> Self {
        CsvSchema {
            label: label.into(),
            ..Default::default()
        }
    }
}

const MISSING: [&str; 4] = ["", "?", "NA", "nan"];

/// Loads a comma-separated file with a header row. Rows containing a
/// missing marker (empty, `?`, `NA`, `nan`) are dropped; labels and
/// categorical values are coded in order of first occurrence.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Data("empty file".into()));
    }
    let label_col = header
        .iter()
        .position(|h| *h == schema.label)
        .ok_or_else(|| Error::Data(format!("label column `{}` not found", schema.label)))?;
    for c in &schema.categorical {
        if !header.contains(c) || *c == schema.label {
            return Err(Error::Data(format!("categorical column `{c}` not found")));
        }
    }
    let is_cat: Vec<bool> = header.iter().map(|h| schema.categorical.contains(h)).collect();

    let mut labels = Coder::default();
    let mut cats: Vec<Coder> = vec![Coder::default(); header.len()];
    let mut rows: Vec<Vec<Cell>> = Vec::new();
    let mut y = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based line number in the file, counting the header
        let line = r + 2;
        if record.len() != header.len() {
            return Err(Error::Data(format!(
                "line {line}: expected {} fields, found {}",
                header.len(),
                record.len()
            )));
        }
        if record.iter().any(|v| MISSING.contains(&v)) {
            continue;
        }
        let mut row = Vec::with_capacity(header.len() - 1);
        for (c, value) in record.iter().enumerate() {
            if c == label_col {
                continue;
            }
            if is_cat[c] {
                row.push(Cell::Code(cats[c].code(value)));
            } else {
                let v: f64 = value.parse().map_err(|_| Error::Cell {
                    row: line,
                    column: header[c].clone(),
                    value: value.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(Error::Cell {
                        row: line,
                        column: header[c].clone(),
                        value: value.to_string(),
                    });
                }
                row.push(Cell::Real(v));
            }
        }
        y.push(labels.code(&record[label_col]));
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }

    // column layout after encoding
    let mut names = Vec::new();
    let mut widths = Vec::new();
    for (c, h) in header.iter().enumerate() {
        if c == label_col {
            continue;
        }
        if is_cat[c] && schema.encoding == Encoding::Onehot {
            for v in &cats[c].values {
                names.push(format!("{h}={v}"));
            }
            widths.push(cats[c].values.len());
        } else {
            names.push(h.clone());
            widths.push(1);
        }
    }
    let mut x = Array2::zeros((rows.len(), names.len()));
    for (r, row) in rows.iter().enumerate() {
        let mut at = 0;
        for (cell, &w) in row.iter().zip(&widths) {
            match *cell {
                Cell::Real(v) => x[[r, at]] = v,
                Cell::Code(k) if schema.encoding == Encoding::Onehot => x[[r, at + k]] = 1.0,
                Cell::Code(k) => x[[r, at]] = k as f64,
            }
            at += w;
        }
    }
    Dataset::new(x, y, names, labels.values)
}

/// Reads an all-numeric CSV with a header row into a matrix.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut flat = Vec::new();
    let mut rows = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Data(format!(
                "line {}: expected {} fields, found {}",
                r + 2,
                header.len(),
                record.len()
            )));
        }
        for (c, value) in record.iter().enumerate() {
            flat.push(value.parse::<f64>().map_err(|_| Error::Cell {
                row: r + 2,
                column: header[c].clone(),
                value: value.to_string(),
            })?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Data("no data rows".into()));
    }
    Ok(Array2::from_shape_vec((rows, header.len()), flat).expect("rectangular"))
}

enum Cell {
    Real(f64),
    Code(usize),
}

#[derive(Debug, Clone, Default)]
struct Coder {
    values: Vec<String>,
    index: HashMap<String, usize>,
}

impl Coder {
    fn code(&mut self, v: &str) -> usize {
        if let Some(&k) = self.index.get(v) {
            return k;
        }
        let k = self.values.len();
        self.values.push(v.to_string());
        self.index.insert(v.to_string(), k);
        k
    }
}

/// Row indices of a train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Stratification was requested but some class had fewer than two samples.
    pub fell_back: bool,
}

impl Split {
    pub fn apply(&self, data: &Dataset) -> (Dataset, Dataset) {
        (data.subset(&self.train), data.subset(&self.test))
    }
}

/// Seeded train/test split. Stratified splits draw `round(fraction * n_c)`
/// test rows from every class; index lists are returned in ascending order.
pub fn split(data: &Dataset, test_fraction: f64, seed: u64, stratified: bool) -> Result<Split> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if data.len() < 2 {
        return Err(Error::Data("need at least two rows to split".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = data.class_counts();
    let fell_back = stratified && counts.iter().any(|&c| c == 1);
    let mut test = Vec::new();
    if stratified && !fell_back {
        for class in 0..data.class_count() {
            let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data.y[i] == class).collect();
            idx.shuffle(&mut rng);
            let take = (test_fraction * idx.len() as f64).round() as usize;
            test.extend_from_slice(&idx[..take]);
        }
    } else {
        let mut idx: Vec<usize> = (0..data.len()).collect();
        idx.shuffle(&mut rng);
        let take = ((test_fraction * data.len() as f64).round() as usize).clamp(1, data.len() - 1);
        test.extend_from_slice(&idx[..take]);
    }
    test.sort_unstable();
    let mut in_test = vec![false; data.len()];
    test.iter().for_each(|&i| in_test[i] = true);
    let train = (0..data.len()).filter(|&i| !in_test[i]).collect();
    Ok(Split {
        train,
        test,
        fell_back,
    })
}

/// Per-feature affine map `(x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Mean and population standard deviation; constant columns get scale 1.
    pub fn fit(x: &Array2<f64>) -> Self {
        let m = x.nrows().max(1) as f64;
        let mean: Array1<f64> = x.sum_axis(Axis(0)) / m;
        let scale = x
            .columns()
            .into_iter()
            .zip(mean.iter())
            .map(|(c, &mu)| {
                let var = c.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer {
            mean: mean.to_vec(),
            scale,
        }
    }

    pub fn identity(k: usize) -> Self {
        Standardizer {
            mean: vec![0.0; k],
            scale: vec![1.0; k],
        }
    }

    pub fn transform(&self, data: &Dataset) -> Dataset {
        let mut out = data.clone();
        for (j, mut col) in out.x.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| (v - self.mean[j]) / self.scale[j]);
        }
        out
    }
}

/// Dataset manifest: names mapped to local files and column roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub datasets: Vec<ManifestEntry>,
    #[serde(skip)]
    base: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub path: String,
    pub label: String,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub encoding: Encoding,
}

impl Manifest {
    /// Reads a manifest; relative dataset paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut m: Manifest = serde_json::from_slice(&text)?;
        m.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn get(&self, name: &str) -> Result<&ManifestEntry> {
        self.datasets
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| Error::Data(format!("dataset `{name}` not in manifest")))
    }

    pub fn load_dataset(&self, name: &str) -> Result<Dataset> {
        let e = self.get(name)?;
        let schema = CsvSchema {
            label: e.label.clone(),
            categorical: e.categorical.clone(),
            encoding: e.encoding,
        };
        load_csv(self.base.join(&e.path), &schema)
    }
}
