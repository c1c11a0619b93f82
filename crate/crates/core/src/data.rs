//! Observation matrices and CSV ingestion.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read '{path}': {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing value at row {row}, column {col} ('{name}')")]
    MissingValue { row: usize, col: usize, name: String },
    #[error("non-numeric value '{value}' at row {row}, column {col} ('{name}')")]
    NonNumeric { row: usize, col: usize, name: String, value: String },
    #[error("row {row} has {found} fields, header has {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },
    #[error("column '{0}' is constant")]
    ConstantColumn(String),
    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// An `n × p` observation matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    values: DMatrix<f64>,
}

impl Dataset {
    pub fn new(names: Vec<String>, values: DMatrix<f64>) -> Result<Self, DataError> {
        if names.len() != values.ncols() {
            return Err(DataError::Shape(format!("{} names for {} columns", names.len(), values.ncols())));
        }
        Ok(Self { names, values })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.values.as_slice()[j * n..(j + 1) * n]
    }

    /// Centers every column and scales it to unit sample variance (divisor `n − 1`).
    pub fn standardize(&self) -> Result<Dataset, DataError> {
        let n = self.n();
        if n < 2 {
            return Err(DataError::TooFewRows { needed: 2, found: n });
        }
        let mut out = self.values.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let mean = col.iter().sum::<f64>() / n as f64;
            let ss: f64 = col.iter().map(|x| (x - mean).powi(2)).sum();
            let sd = (ss / (n - 1) as f64).sqrt();
            // Relative test so that columns like [1e9, 1e9, 1e9] still count as constant.
            let scale = col.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
            if sd.is_nan() || sd <= 1e-12 * scale {
                return Err(DataError::ConstantColumn(self.names[j].clone()));
            }
            col.iter_mut().for_each(|x| *x = (*x - mean) / sd);
        }
        Ok(Dataset { names: self.names.clone(), values: out })
    }

    pub fn read_csv_path(path: &Path) -> Result<Self, DataError> {
        let file = std::fs::File::open(path)
            .map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
        Self::read_csv(file)
    }

    /// Header row of names followed by numeric rows. Rows and columns in
    /// error messages are 1-based, counting the header as row 1.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let p = names.len();
        let mut flat: Vec<f64> = Vec::new();
        let mut n = 0usize;
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = r + 2;
            if rec.len() != p {
                return Err(DataError::RaggedRow { row, found: rec.len(), expected: p });
            }
            for (c, field) in rec.iter().enumerate() {
                let field = field.trim();
                if field.is_empty() || field.eq_ignore_ascii_case("na") || field.eq_ignore_ascii_case("nan") {
                    return Err(DataError::MissingValue { row, col: c + 1, name: names[c].clone() });
                }
                let v: f64 = field.parse().map_err(|_| DataError::NonNumeric {
                    row,
                    col: c + 1,
                    name: names[c].clone(),
                    value: field.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(DataError::NonNumeric { row, col: c + 1, name: names[c].clone(), value: field.to_string() });
                }
                flat.push(v);
            }
            n += 1;
        }
        let values = DMatrix::from_row_slice(n, p, &flat);
        Self::new(names, values)
    }

    /// Writes with the shortest representation that round-trips each value.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names)?;
        let mut row = Vec::with_capacity(self.p());
        for i in 0..self.n() {
            row.clear();
            row.extend((0..self.p()).map(|j| format!("{:?}", self.values[(i, j)])));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| DataError::Csv(e.into()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(cols: &[&[f64]]) -> Dataset {
        let n = cols[0].len();
        let flat: Vec<f64> = cols.iter().flat_map(|c| c.iter().copied()).collect();
        let names = (0..cols.len()).map(|j| format!("c{j}")).collect();
        Dataset::new(names, DMatrix::from_column_slice(n, cols.len(), &flat)).unwrap()
    }

    #[test]
    fn standardize_small_column() {
        let s = ds(&[&[1.0, 2.0, 3.0]]).standardize().unwrap();
        assert_eq!(s.column(0), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn standardize_is_idempotent() {
        let once = ds(&[&[0.3, -1.2, 4.0, 2.2, 0.0], &[1.0, 1.5, -2.0, 0.1, 7.0]]).standardize().unwrap();
        let twice = once.standardize().unwrap();
        for (a, b) in once.values().iter().zip(twice.values().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_rejected() {
        let err = ds(&[&[1.0, 2.0, 4.0], &[5.0, 5.0, 5.0]]).standardize().unwrap_err();
        assert!(matches!(err, DataError::ConstantColumn(ref c) if c == "c1"));
        assert!(matches!(ds(&[&[1.0]]).standardize(), Err(DataError::TooFewRows { .. })));
    }

    #[test]
    fn csv_roundtrip_and_diagnostics() {
        let text = "a,b\n1.5,2\n-3,4e-2\n";
        let d = Dataset::read_csv(text.as_bytes()).unwrap();
        assert_eq!(d.names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.column(1), &[2.0, 0.04]);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap(), d);

        let missing = Dataset::read_csv("a,b\n1,2\n3,\n".as_bytes()).unwrap_err();
        assert!(matches!(missing, DataError::MissingValue { row: 3, col: 2, .. }));
        let bad = Dataset::read_csv("a,b\n1,x\n".as_bytes()).unwrap_err();
        assert!(matches!(bad, DataError::NonNumeric { row: 2, col: 2, .. }));
        let ragged = Dataset::read_csv("a,b\n1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(ragged, DataError::RaggedRow { row: 2, .. }));
    }
}
