//! Ordered multivariate samples grouped into contiguous batches, plus
//! min-max normalization fitted on training data.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A contiguous run of samples that belong to one batch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSpan {
    pub id: String,
    pub start: usize,
    pub len: usize,
}

impl BatchSpan {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// Immutable table of `len() x dim()` finite values in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    values: Vec<f64>,
    dim: usize,
    batches: Vec<BatchSpan>,
}

impl Dataset {
    /// Builds a dataset from row vectors and one batch label per row.
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        batch_ids: Vec<String>,
    ) -> Result<Self> {
        let dim = feature_names.len();
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InconsistentWidth {
                    row: i + 1,
                    expected: dim,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(feature_names, values, batch_ids)
    }

    /// Builds a dataset from row-major values.
    pub fn from_flat(
        feature_names: Vec<String>,
        values: Vec<f64>,
        batch_ids: Vec<String>,
    ) -> Result<Self> {
        let dim = feature_names.len();
        if dim == 0 {
            return Err(Error::NoFeatures);
        }
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: values.len() % dim,
            });
        }
        let len = values.len() / dim;
        if batch_ids.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: batch_ids.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: pos / dim + 1,
                column: feature_names[pos % dim].clone(),
                value: values[pos].to_string(),
            });
        }
        let batches = spans_from_ids(&batch_ids)?;
        Ok(Dataset {
            feature_names,
            values,
            dim,
            batches,
        })
    }

    /// Single-batch dataset, used for synthetic sample sets such as ITM nodes.
    pub fn single_batch(
        feature_names: Vec<String>,
        values: Vec<f64>,
        batch_id: &str,
    ) -> Result<Self> {
        let dim = feature_names.len().max(1);
        let ids = vec![batch_id.to_string(); values.len() / dim];
        Self::from_flat(feature_names, values, ids)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn samples(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn batches(&self) -> &[BatchSpan] {
        &self.batches
    }

    /// Batch label of sample `i`.
    pub fn batch_id(&self, i: usize) -> &str {
        let idx = self.batches.partition_point(|b| b.start + b.len <= i);
        &self.batches[idx].id
    }

    pub fn batch_ids(&self) -> Vec<String> {
        self.batches
            .iter()
            .flat_map(|b| std::iter::repeat_n(b.id.clone(), b.len))
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.samples().map(|s| s[j]).collect()
    }

    /// Per-feature `(min, max)` over all samples.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for s in self.samples() {
            for (b, &v) in bounds.iter_mut().zip(s) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        bounds
    }

    /// Keeps only the batches accepted by `keep`, preserving order.
    pub fn select_batches(&self, mut keep: impl FnMut(&str) -> bool) -> Result<Dataset> {
        let mut values = Vec::new();
        let mut ids = Vec::new();
        for b in self.batches.iter().filter(|b| keep(&b.id)) {
            values.extend_from_slice(&self.values[b.start * self.dim..(b.start + b.len) * self.dim]);
            ids.extend(std::iter::repeat_n(b.id.clone(), b.len));
        }
        Dataset::from_flat(self.feature_names.clone(), values, ids)
    }

    /// Concatenates datasets with identical feature names.
    pub fn concat(parts: &[&Dataset]) -> Result<Dataset> {
        let first = parts.first().ok_or(Error::EmptyDataset)?;
        let mut values = Vec::new();
        let mut ids = Vec::new();
        for p in parts {
            if p.feature_names != first.feature_names {
                return Err(Error::FeatureMismatch {
                    expected: first.feature_names.clone(),
                    found: p.feature_names.clone(),
                });
            }
            values.extend_from_slice(&p.values);
            ids.extend(p.batch_ids());
        }
        Dataset::from_flat(first.feature_names.clone(), values, ids)
    }

    /// Same samples and batches, new values (row-major, same shape).
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Dataset {
        debug_assert_eq!(values.len(), self.values.len());
        Dataset {
            feature_names: self.feature_names.clone(),
            values,
            dim: self.dim,
            batches: self.batches.clone(),
        }
    }

    pub fn load_csv(path: impl AsRef<Path>, batch_column: &str) -> Result<Dataset> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, batch_column)
    }

    /// Parses CSV with a header row; every column other than `batch_column`
    /// becomes a feature.
    pub fn read_csv<R: Read>(reader: R, batch_column: &str) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let batch_col = header
            .iter()
            .position(|h| h == batch_column)
            .ok_or_else(|| Error::MissingColumn(batch_column.to_string()))?;
        let feature_names: Vec<String> = header
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != batch_col)
            .map(|(_, h)| h.clone())
            .collect();

        let mut values = Vec::new();
        let mut ids = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            // header is line 1, so data row i sits on line i + 2
            let line = i + 2;
            if record.len() != header.len() {
                return Err(Error::InconsistentWidth {
                    row: line,
                    expected: header.len(),
                    found: record.len(),
                });
            }
            for (j, cell) in record.iter().enumerate() {
                if j == batch_col {
                    ids.push(cell.trim().to_string());
                    continue;
                }
                let v: f64 = cell
                    .trim()
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        row: line,
                        column: header[j].clone(),
                        value: cell.to_string(),
                    })?;
                values.push(v);
            }
        }
        Dataset::from_flat(feature_names, values, ids)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, batch_column: &str) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv_to(&mut w, batch_column)
            .and_then(|_| w.flush().map_err(|e| Error::io(path, e)))
    }

    /// Writes `batch_column` first, then the features; floats use the
    /// shortest round-trip representation.
    pub fn write_csv_to<W: Write>(&self, writer: W, batch_column: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![batch_column.to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for b in &self.batches {
            for i in b.range() {
                let mut row = vec![b.id.clone()];
                row.extend(self.sample(i).iter().map(|v| v.to_string()));
                w.write_record(&row)?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn spans_from_ids(ids: &[String]) -> Result<Vec<BatchSpan>> {
    let mut spans: Vec<BatchSpan> = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        match spans.last_mut() {
            Some(last) if &last.id == id => last.len += 1,
            _ => {
                if spans.iter().any(|s| &s.id == id) {
                    return Err(Error::NonContiguousBatch(id.clone()));
                }
                spans.push(BatchSpan {
                    id: id.clone(),
                    start: i,
                    len: 1,
                });
            }
        }
    }
    Ok(spans)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMethod {
    MinMax,
}

/// Per-feature affine map fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub method: NormalizationMethod,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationParams {
    /// Fits min-max parameters mapping every training feature onto `[0, 1]`.
    pub fn fit(data: &Dataset, method: NormalizationMethod) -> Result<Self> {
        match method {
            NormalizationMethod::MinMax => {}
        }
        if data.len() < 2 {
            return Err(Error::InvalidConfig(
                "normalization needs at least two samples".into(),
            ));
        }
        let (min, max): (Vec<f64>, Vec<f64>) = data.bounds().into_iter().unzip();
        let constant: Vec<String> = min
            .iter()
            .zip(&max)
            .zip(data.feature_names())
            .filter(|((lo, hi), _)| hi <= lo)
            .map(|(_, name)| name.clone())
            .collect();
        if !constant.is_empty() {
            return Err(Error::ConstantFeature(constant));
        }
        Ok(NormalizationParams { method, min, max })
    }

    /// Identity parameters for data that is already on the unit scale.
    pub fn identity(dim: usize) -> Self {
        NormalizationParams {
            method: NormalizationMethod::MinMax,
            min: vec![0.0; dim],
            max: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn normalize_into(&self, x: &[f64], out: &mut [f64]) {
        for (j, (o, &v)) in out.iter_mut().zip(x).enumerate() {
            *o = (v - self.min[j]) / (self.max[j] - self.min[j]);
        }
    }

    /// Normalizes a dataset. Values outside the training range are not clipped.
    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        self.check_dim(data)?;
        let mut values = data.values().to_vec();
        for s in values.chunks_exact_mut(self.dim()) {
            for (j, v) in s.iter_mut().enumerate() {
                *v = (*v - self.min[j]) / (self.max[j] - self.min[j]);
            }
        }
        Ok(data.with_values(values))
    }

    pub fn invert(&self, data: &Dataset) -> Result<Dataset> {
        self.check_dim(data)?;
        let mut values = data.values().to_vec();
        for s in values.chunks_exact_mut(self.dim()) {
            for (j, v) in s.iter_mut().enumerate() {
                *v = *v * (self.max[j] - self.min[j]) + self.min[j];
            }
        }
        Ok(data.with_values(values))
    }

    fn check_dim(&self, data: &Dataset) -> Result<()> {
        if data.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: data.dim(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn loads_six_rows_two_batches() {
        let csv = "batch,P,F,L,D,Z\n\
                   T1,1,2,3,4,5\nT1,1,2,3,4,5\nT1,1,2,3,4,5\n\
                   T2,0,0,0,0,0\nT2,0,0,0,0,1\nT2,0,0,0,1,1\n";
        let ds = Dataset::read_csv(csv.as_bytes(), "batch").unwrap();
        assert_eq!(ds.len(), 6);
        assert_eq!(ds.dim(), 5);
        assert_eq!(ds.feature_names(), &["P", "F", "L", "D", "Z"]);
        assert_eq!(ds.batches().len(), 2);
        assert_eq!(ds.batches()[1], BatchSpan { id: "T2".into(), start: 3, len: 3 });
        assert_eq!(ds.batch_id(4), "T2");
        assert_eq!(ds.sample(5), &[0.0, 0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn nan_cell_names_the_row() {
        let csv = "batch,a,b\nT1,1,2\nT1,NaN,3\n";
        match Dataset::read_csv(csv.as_bytes(), "batch") {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "a");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let csv = "batch,a\nT1,abc\n";
        assert!(matches!(
            Dataset::read_csv(csv.as_bytes(), "batch"),
            Err(Error::Parse { row: 2, .. })
        ));
    }

    #[test]
    fn contract_errors() {
        assert!(matches!(
            Dataset::read_csv("batch,a\n".as_bytes(), "batch"),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            Dataset::read_csv("a,b\n1,2\n".as_bytes(), "batch"),
            Err(Error::MissingColumn(_))
        ));
        assert!(matches!(
            Dataset::read_csv("batch,a,b\nT1,1,2\nT1,1\n".as_bytes(), "batch"),
            Err(Error::InconsistentWidth { row: 3, .. })
        ));
        assert!(matches!(
            Dataset::read_csv("batch,a\nT1,1\nT2,1\nT1,2\n".as_bytes(), "batch"),
            Err(Error::NonContiguousBatch(_))
        ));
        assert!(matches!(
            Dataset::load_csv("/nonexistent/file.csv", "batch"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let ds = Dataset::new(
            names(2),
            vec![vec![0.1, 1.0 / 3.0], vec![-2.5e-17, 7.0]],
            vec!["A".into(), "B".into()],
        )
        .unwrap();
        let mut buf = Vec::new();
        ds.write_csv_to(&mut buf, "batch").unwrap();
        let back = Dataset::read_csv(buf.as_slice(), "batch").unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn minmax_linear_map() {
        let ds = Dataset::new(
            names(1),
            vec![vec![0.0], vec![5.0], vec![10.0]],
            vec!["T".into(); 3],
        )
        .unwrap();
        let p = NormalizationParams::fit(&ds, NormalizationMethod::MinMax).unwrap();
        assert_eq!((p.min[0], p.max[0]), (0.0, 10.0));
        assert_eq!(p.apply(&ds).unwrap().column(0), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_feature_is_reported() {
        let ds = Dataset::new(
            vec!["x".into(), "flat".into()],
            vec![vec![0.0, 3.0], vec![1.0, 3.0], vec![2.0, 3.0]],
            vec!["T".into(); 3],
        )
        .unwrap();
        match NormalizationParams::fit(&ds, NormalizationMethod::MinMax) {
            Err(Error::ConstantFeature(f)) => assert_eq!(f, vec!["flat".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn per_feature_params_match_column_scan() {
        let rows = vec![vec![3.0, -1.0], vec![-4.0, 8.0], vec![0.5, 2.0], vec![9.0, 0.0]];
        let ds = Dataset::new(names(2), rows.clone(), vec!["T".into(); 4]).unwrap();
        let p = NormalizationParams::fit(&ds, NormalizationMethod::MinMax).unwrap();
        for j in 0..2 {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!((p.min[j], p.max[j]), (lo, hi));
        }
    }

    #[test]
    fn apply_does_not_clip_and_inverts() {
        let p = NormalizationParams {
            method: NormalizationMethod::MinMax,
            min: vec![0.0],
            max: vec![10.0],
        };
        let ds = Dataset::new(names(1), vec![vec![10.0], vec![20.0]], vec!["N".into(); 2]).unwrap();
        let n = p.apply(&ds).unwrap();
        assert_eq!(n.column(0), vec![1.0, 2.0]);
        let back = p.invert(&n).unwrap();
        for (a, b) in back.values().iter().zip(ds.values()) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
        let wrong = Dataset::new(names(2), vec![vec![1.0, 2.0]], vec!["N".into()]).unwrap();
        assert!(matches!(p.apply(&wrong), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn select_and_concat_preserve_order() {
        let ds = Dataset::new(
            names(1),
            vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            vec!["T1".into(), "N1".into(), "N1".into(), "T2".into()],
        )
        .unwrap();
        let t = ds.select_batches(|id| id.starts_with('T')).unwrap();
        assert_eq!(t.column(0), vec![1.0, 4.0]);
        let n = ds.select_batches(|id| id.starts_with('N')).unwrap();
        let both = Dataset::concat(&[&t, &n]).unwrap();
        assert_eq!(both.column(0), vec![1.0, 4.0, 2.0, 3.0]);
        assert_eq!(both.batches().len(), 3);
    }
}
