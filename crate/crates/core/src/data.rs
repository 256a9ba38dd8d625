//! Sample-by-feature matrices, partitions and CSV I/O.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n × p` sample-by-feature matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
    centered: bool,
    label: Option<String>,
}

impl DataMatrix {
    /// Builds a matrix from row-major `values`. Requires `n ≥ 2`, `p ≥ 1`
    /// and finite entries.
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 || p < 1 {
            return Err(Error::Shape(format!(
                "a data matrix needs at least 2 rows and 1 column, got {n}×{p}"
            )));
        }
        if values.len() != n * p {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {n}×{p} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: pos / p + 1,
                col: pos % p + 1,
                cell: values[pos].to_string(),
            });
        }
        Ok(DataMatrix {
            n,
            p,
            values,
            centered: false,
            label: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::Shape(format!(
                "row {} has {} columns, expected {p}",
                i + 1,
                rows[i].len()
            )));
        }
        Self::new(rows.len(), p, rows.concat())
    }

    pub fn from_fn(n: usize, p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(n * p);
        for i in 0..n {
            for j in 0..p {
                values.push(f(i, j));
            }
        }
        Self::new(n, p, values)
    }

    pub fn from_mat(m: MatRef<'_, f64>) -> Result<Self> {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.p)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.p];
        for r in self.rows() {
            for (a, v) in m.iter_mut().zip(r) {
                *a += v;
            }
        }
        m.iter_mut().for_each(|a| *a /= self.n as f64);
        m
    }

    pub fn to_mat(&self) -> Mat<f64> {
        Mat::from_fn(self.n, self.p, |i, j| self.get(i, j))
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stack(&self, other: &DataMatrix) -> Result<DataMatrix> {
        if self.p != other.p {
            return Err(Error::Shape(format!(
                "cannot stack {} and {} features",
                self.p, other.p
            )));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        DataMatrix::new(self.n + other.n, self.p, values)
    }

    /// The listed rows in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<DataMatrix> {
        let mut values = Vec::with_capacity(idx.len() * self.p);
        for &i in idx {
            if i >= self.n {
                return Err(Error::Index(format!("row {i} of {}", self.n)));
            }
            values.extend_from_slice(self.row(i));
        }
        let mut out = DataMatrix::new(idx.len(), self.p, values)?;
        out.label.clone_from(&self.label);
        Ok(out)
    }

    /// Applies `f` to each row in place, producing a new matrix.
    pub fn map_rows(&self, mut f: impl FnMut(&[f64], &mut [f64])) -> Result<DataMatrix> {
        let mut values = vec![0.0; self.values.len()];
        for (src, dst) in self.values.chunks_exact(self.p).zip(values.chunks_exact_mut(self.p)) {
            f(src, dst);
        }
        let mut out = DataMatrix::new(self.n, self.p, values)?;
        out.label.clone_from(&self.label);
        Ok(out)
    }
}

/// Subtracts every column mean. A second correction pass removes the
/// round-off left by the first, so the result is idempotent.
pub fn center_columns(d: &DataMatrix) -> DataMatrix {
    let mut out = d.clone();
    for _ in 0..2 {
        let means = out.column_means();
        for row in out.values.chunks_exact_mut(out.p) {
            for (v, m) in row.iter_mut().zip(&means) {
                *v -= m;
            }
        }
    }
    out.centered = true;
    out
}

/// Cluster assignments with ids `0..k`, every cluster nonempty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPartition {
    assignments: Vec<usize>,
    k: usize,
}

impl LabeledPartition {
    /// Validates that ids are exactly `0..k` with no empty cluster.
    pub fn new(assignments: Vec<usize>) -> Result<Self> {
        let k = assignments.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; k];
        for &a in &assignments {
            seen[a] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return Err(Error::Shape(format!("cluster {empty} of {k} is empty")));
        }
        Ok(LabeledPartition { assignments, k })
    }

    /// Relabels arbitrary ids to `0..k` in order of first appearance.
    pub fn from_labels<T: std::hash::Hash + Eq + Clone>(labels: &[T]) -> Self {
        let mut ids: HashMap<T, usize> = HashMap::new();
        let assignments = labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l.clone()).or_insert(next)
            })
            .collect();
        LabeledPartition {
            assignments,
            k: ids.len(),
        }
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

fn read_records(path: &Path, has_header: bool) -> Result<Vec<csv::StringRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    rdr.records()
        .map(|r| {
            r.map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                other => Error::Shape(format!("malformed CSV in {}: {other:?}", path.display())),
            })
        })
        .collect()
}

/// Reads a numeric CSV with one sample per row.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<DataMatrix> {
    let path = path.as_ref();
    let records = read_records(path, has_header)?;
    if records.is_empty() {
        return Err(Error::Shape(format!("{} has no data rows", path.display())));
    }
    let p = records[0].len();
    let mut values = Vec::with_capacity(records.len() * p);
    for (i, rec) in records.iter().enumerate() {
        if rec.len() != p {
            return Err(Error::Shape(format!(
                "row {} has {} columns, expected {p}",
                i + 1,
                rec.len()
            )));
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                Error::Parse {
                    row: i + 1,
                    col: j + 1,
                    cell: cell.to_string(),
                }
            })?;
            values.push(v);
        }
    }
    DataMatrix::new(records.len(), p, values)
}

/// Formats a value with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows<'a>(path: &Path, rows: impl Iterator<Item = Vec<f64>> + 'a) -> Result<()> {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes a headerless CSV that [`load_csv`] reads back exactly.
pub fn save_csv(path: impl AsRef<Path>, d: &DataMatrix) -> Result<()> {
    write_rows(path.as_ref(), d.rows().map(<[f64]>::to_vec))
}

/// Writes any dense matrix as a headerless CSV (one row per line).
pub fn save_mat_csv(path: impl AsRef<Path>, m: MatRef<'_, f64>) -> Result<()> {
    write_rows(
        path.as_ref(),
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()),
    )
}

/// Writes one integer label per line.
pub fn save_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a single-column CSV of nonnegative integer labels.
pub fn load_labels(path: impl AsRef<Path>, has_header: bool) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let records = read_records(path, has_header)?;
    records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            if rec.len() != 1 {
                return Err(Error::Shape(format!(
                    "label row {} has {} columns, expected 1",
                    i + 1,
                    rec.len()
                )));
            }
            let cell = &rec[0];
            cell.parse::<usize>()
                .or_else(|_| {
                    cell.parse::<f64>()
                        .ok()
                        .filter(|v| v.fract() == 0.0 && *v >= 0.0)
                        .map(|v| v as usize)
                        .ok_or(())
                })
                .map_err(|_| Error::Parse {
                    row: i + 1,
                    col: 1,
                    cell: cell.to_string(),
                })
        })
        .collect()
}
