use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Feature matrix with one string label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub feature_names: Vec<String>,
    pub label_name: String,
}

impl Dataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<String>,
        feature_names: Vec<String>,
        label_name: String,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Data("dataset has no rows".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let p = feature_names.len();
        if p == 0 {
            return Err(Error::Data("dataset has no feature columns".into()));
        }
        for row in &features {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
            label_name,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    /// Distinct labels in sorted order.
    pub fn classes(&self) -> Vec<String> {
        let mut c = self.labels.clone();
        c.sort();
        c.dedup();
        c
    }

    pub fn subset(&self, rows: &[usize]) -> (Vec<Vec<f64>>, Vec<String>) {
        (
            rows.iter().map(|&i| self.features[i].clone()).collect(),
            rows.iter().map(|&i| self.labels[i].clone()).collect(),
        )
    }

    /// Per-feature (min, max) over all rows.
    pub fn extrema(&self) -> (Vec<f64>, Vec<f64>) {
        let p = self.dim();
        let mut mins = vec![f64::INFINITY; p];
        let mut maxs = vec![f64::NEG_INFINITY; p];
        for row in &self.features {
            for j in 0..p {
                mins[j] = mins[j].min(row[j]);
                maxs[j] = maxs[j].max(row[j]);
            }
        }
        (mins, maxs)
    }

    /// SHA-256 over the column names, the exact feature bits and the labels.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for name in self.feature_names.iter().chain(std::iter::once(&self.label_name)) {
            h.update(name.as_bytes());
            h.update([0u8]);
        }
        for (row, label) in self.features.iter().zip(&self.labels) {
            for v in row {
                h.update(v.to_bits().to_le_bytes());
            }
            h.update(label.as_bytes());
            h.update([0u8]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        self.write_records(&mut w)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_records(&mut w)?;
        let bytes = w.into_inner().map_err(|e| Error::Data(format!("csv buffer: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
    }

    fn write_records<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        let mut header = self.feature_names.clone();
        header.push(self.label_name.clone());
        w.write_record(&header)?;
        for (row, label) in self.features.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(label.clone());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Rows kept and rows dropped while reading a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvLoad {
    pub dataset: Dataset,
    pub dropped: usize,
}

/// Read selected feature columns and a label column.
///
/// Rows whose selected values are missing, unparseable or non-finite, or whose
/// label is empty, are dropped and counted.
pub fn load_csv<S: AsRef<str>>(path: &Path, feature_cols: &[S], label_col: &str) -> Result<CsvLoad> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, feature_cols, label_col)
}

pub fn read_csv<R: std::io::Read, S: AsRef<str>>(reader: R, feature_cols: &[S], label_col: &str) -> Result<CsvLoad> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    if feature_cols.is_empty() {
        return Err(Error::Data("no feature columns selected".into()));
    }
    let feature_idx = feature_cols
        .iter()
        .map(|c| column(c.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let label_idx = column(label_col)?;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = 0;
    for record in rdr.records() {
        let record = record?;
        let row: Option<Vec<f64>> = feature_idx
            .iter()
            .map(|&i| {
                record
                    .get(i)
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|v| v.is_finite())
            })
            .collect();
        let label = record.get(label_idx).filter(|l| !l.is_empty());
        match (row, label) {
            (Some(row), Some(label)) => {
                features.push(row);
                labels.push(label.to_owned());
            }
            _ => dropped += 1,
        }
    }
    if features.is_empty() {
        return Err(Error::Data(format!("no usable rows ({dropped} dropped)")));
    }
    let dataset = Dataset::new(
        features,
        labels,
        feature_cols.iter().map(|c| c.as_ref().to_owned()).collect(),
        label_col.to_owned(),
    )?;
    Ok(CsvLoad { dataset, dropped })
}

/// Read only the feature columns (no label), for prediction inputs.
pub fn read_feature_rows<R: std::io::Read, S: AsRef<str>>(reader: R, feature_cols: &[S]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = feature_cols
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == c.as_ref())
                .ok_or_else(|| Error::MissingColumn(c.as_ref().to_owned()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = idx
            .iter()
            .map(|&i| {
                record
                    .get(i)
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Data(format!("row {line}: unusable value in column {i}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data("no rows to predict".into()));
    }
    Ok(rows)
}
