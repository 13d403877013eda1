//! Dataset representation, standardization, and train/test partitioning.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;

use crate::error::{PcsError, Result};
use crate::seed::SeedSpec;

/// Tolerance on column moments for a matrix flagged as standardized.
pub const STANDARDIZED_TOL: f64 = 1e-10;

/// Feature matrix `x` (rows are observations) paired with the response `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    x: Array2<f64>,
    y: Array1<f64>,
    feature_names: Vec<String>,
    standardized: bool,
}

impl DataMatrix {
    pub fn new(x: Array2<f64>, y: Array1<f64>, feature_names: Vec<String>) -> Result<Self> {
        let (n, p) = x.dim();
        if n < 2 {
            return Err(PcsError::InvalidData(format!("need at least 2 observations, got {n}")));
        }
        if p < 1 {
            return Err(PcsError::InvalidData("need at least one feature".into()));
        }
        if y.len() != n {
            return Err(PcsError::DimensionMismatch { expected: n, got: y.len() });
        }
        if feature_names.len() != p {
            return Err(PcsError::DimensionMismatch { expected: p, got: feature_names.len() });
        }
        if let Some(((i, j), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(PcsError::InvalidData(format!("non-finite feature value at row {i}, column {j}")));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(PcsError::InvalidData(format!("non-finite response at row {i}")));
        }
        Ok(Self { x, y, feature_names, standardized: false })
    }

    /// Builds a matrix with generated names `x1..xp`.
    pub fn from_arrays(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let names = default_feature_names(x.ncols());
        Self::new(x, y, names)
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Rows `indices` (repeats allowed). The result is not flagged standardized.
    pub fn select_rows(&self, indices: &[usize]) -> Result<DataMatrix> {
        DataMatrix::new(
            self.x.select(Axis(0), indices),
            self.y.select(Axis(0), indices),
            self.feature_names.clone(),
        )
    }

    /// Keeps the listed columns in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<DataMatrix> {
        let names = columns.iter().map(|&j| self.feature_names[j].clone()).collect();
        let mut out = DataMatrix::new(self.x.select(Axis(1), columns), self.y.clone(), names)?;
        out.standardized = self.standardized;
        Ok(out)
    }

    /// Marks columns as standardized without touching them; the caller guarantees the moments.
    pub(crate) fn assume_standardized(mut self) -> Self {
        self.standardized = true;
        self
    }

    /// Same features, new response.
    pub fn with_response(&self, y: Array1<f64>) -> Result<DataMatrix> {
        let mut out = DataMatrix::new(self.x.clone(), y, self.feature_names.clone())?;
        out.standardized = self.standardized;
        Ok(out)
    }
}

pub fn default_feature_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

/// Sample mean and standard deviation (n - 1 denominator).
pub fn mean_sd(values: ArrayView1<'_, f64>) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.sum() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Centers every column and scales it to unit sample standard deviation.
pub fn standardize(data: &DataMatrix) -> Result<DataMatrix> {
    let mut x = data.x.clone();
    standardize_columns(&mut x)?;
    let mut out = DataMatrix::new(x, data.y.clone(), data.feature_names.clone())?;
    out.standardized = true;
    Ok(out)
}

/// In-place column standardization of a bare matrix.
pub fn standardize_columns(x: &mut Array2<f64>) -> Result<()> {
    for (j, mut col) in x.axis_iter_mut(Axis(1)).enumerate() {
        let (mean, sd) = mean_sd(col.view());
        if !(sd > 1e-12) {
            return Err(PcsError::ConstantColumn(j));
        }
        col.mapv_inplace(|v| (v - mean) / sd);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTestSplit {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub fraction: f64,
}

/// Size of the test set: `fraction * n` rounded half up.
pub fn test_size(n: usize, fraction: f64) -> usize {
    (fraction * n as f64 + 0.5).floor() as usize
}

/// Uniformly random partition with `round(fraction * n)` test rows.
pub fn split(data: &DataMatrix, fraction: f64, seed: &SeedSpec) -> Result<TrainTestSplit> {
    split_indices(data.n(), fraction, seed)
}

pub fn split_indices(n: usize, fraction: f64, seed: &SeedSpec) -> Result<TrainTestSplit> {
    let bad = || PcsError::BadFraction { fraction, n };
    if !(fraction > 0.0 && fraction < 1.0) || fraction * (n as f64) < 1.0 {
        return Err(bad());
    }
    let n_test = test_size(n, fraction);
    if n_test == 0 || n_test >= n {
        return Err(bad());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed.stream("split", &[]));
    let mut test_indices = order[..n_test].to_vec();
    let mut train_indices = order[n_test..].to_vec();
    test_indices.sort_unstable();
    train_indices.sort_unstable();
    Ok(TrainTestSplit { train_indices, test_indices, fraction })
}

/// Both orderings of the partition: `(train, test)` and `(test, train)`.
pub fn swap_halves(data: &DataMatrix, split: &TrainTestSplit) -> Result<[(DataMatrix, DataMatrix); 2]> {
    let n = data.n();
    let mut seen = vec![false; n];
    for &i in split.train_indices.iter().chain(&split.test_indices) {
        if i >= n || seen[i] {
            return Err(PcsError::InvalidData(format!("split is not a partition of 0..{n}")));
        }
        seen[i] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(PcsError::InvalidData(format!("split is not a partition of 0..{n}")));
    }
    let a = data.select_rows(&split.train_indices)?;
    let b = data.select_rows(&split.test_indices)?;
    Ok([(a.clone(), b.clone()), (b, a)])
}

/// Reads a numeric CSV with a header row. `response` names the column used as `y`;
/// every other column becomes a feature. Lines starting with `#` are skipped.
pub fn read_csv<R: Read>(reader: R, response: &str) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let response_col = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| PcsError::InvalidData(format!("response column `{response}` not found")))?;
    let feature_names: Vec<String> =
        headers.iter().enumerate().filter(|(i, _)| *i != response_col).map(|(_, h)| h.to_string()).collect();
    let p = feature_names.len();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                PcsError::InvalidData(format!("non-numeric cell `{cell}` at data row {}, column {}", row + 1, col + 1))
            })?;
            if col == response_col {
                ys.push(v);
            } else {
                xs.push(v);
            }
        }
    }
    let n = ys.len();
    let x = Array2::from_shape_vec((n, p), xs).map_err(|e| PcsError::InvalidData(e.to_string()))?;
    DataMatrix::new(x, Array1::from(ys), feature_names)
}

pub fn read_csv_path(path: &Path, response: &str) -> Result<DataMatrix> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), response)
}

/// Writes features followed by a response column named `response`.
/// `comment` lines are emitted first, each prefixed with `# `.
pub fn write_csv<W: Write>(mut writer: W, data: &DataMatrix, response: &str, comment: &[String]) -> Result<()> {
    for line in comment {
        writeln!(writer, "# {line}")?;
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = data.feature_names.iter().map(String::as_str).collect();
    header.push(response);
    wtr.write_record(&header)?;
    for (row, y) in data.x.rows().into_iter().zip(data.y.iter()) {
        let mut record: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
        record.push(format_float(*y));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}
