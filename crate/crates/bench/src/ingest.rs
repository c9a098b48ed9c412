//! Reads user-supplied datasets.

use std::io::Read;
use std::path::Path;

use spherelet::geometry::PointCloud;

use crate::config::InputSpec;
use crate::error::{BenchError, Result};

/// A parsed dataset: features plus the optional label and response columns.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub cloud: PointCloud,
    pub feature_names: Vec<String>,
    /// Raw label strings, one per row.
    pub labels: Option<Vec<String>>,
    pub responses: Option<Vec<f64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    /// Labels as dense codes `0..C` in order of first appearance.
    pub fn label_codes(&self) -> Option<Vec<usize>> {
        let labels = self.labels.as_ref()?;
        let mut seen: Vec<&str> = Vec::new();
        Some(
            labels
                .iter()
                .map(|l| match seen.iter().position(|s| *s == l.as_str()) {
                    Some(p) => p,
                    None => {
                        seen.push(l);
                        seen.len() - 1
                    }
                })
                .collect(),
        )
    }
}

/// Parses a headered CSV. Every column that is not the label, the response or
/// ignored becomes a numeric feature.
pub fn ingest_csv(path: &Path, schema: &InputSpec) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| BenchError::io(path, e))?;
    ingest_reader(file, schema).map_err(|e| match e {
        BenchError::Input(msg) => BenchError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn ingest_reader<R: Read>(input: R, schema: &InputSpec) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| BenchError::Input(format!("cannot read header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(BenchError::Input("file is empty".into()));
    }
    let column = |name: &Option<String>| -> Result<Option<usize>> {
        name.as_ref()
            .map(|n| {
                headers
                    .iter()
                    .position(|h| h == n)
                    .ok_or_else(|| BenchError::Input(format!("no column named {n:?}; header is {}", headers.join(","))))
            })
            .transpose()
    };
    let label_col = column(&schema.label_column)?;
    let response_col = column(&schema.response_column)?;
    for name in &schema.ignore_columns {
        column(&Some(name.clone()))?;
    }
    let features: Vec<usize> = (0..headers.len())
        .filter(|&c| Some(c) != label_col && Some(c) != response_col && !schema.ignore_columns.contains(&headers[c]))
        .collect();
    if features.is_empty() {
        return Err(BenchError::Input("no feature columns left".into()));
    }

    let mut data = Vec::new();
    let mut labels = label_col.map(|_| Vec::new());
    let mut responses = response_col.map(|_| Vec::new());
    let parse = |cell: &str, row: usize, col: usize| -> Result<f64> {
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(BenchError::Input(format!(
                "row {row}, column {:?}: {cell:?} is not a finite number",
                headers[col]
            ))),
        }
    };
    for (r, record) in reader.records().enumerate() {
        // Data rows are numbered from 1 after the header row.
        let row = r + 1;
        let record = record.map_err(|e| BenchError::Input(format!("row {row}: {e}")))?;
        if record.len() != headers.len() {
            return Err(BenchError::Input(format!(
                "row {row} has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        for &c in &features {
            data.push(parse(&record[c], row, c)?);
        }
        if let (Some(c), Some(l)) = (label_col, labels.as_mut()) {
            l.push(record[c].to_owned());
        }
        if let (Some(c), Some(y)) = (response_col, responses.as_mut()) {
            y.push(parse(&record[c], row, c)?);
        }
    }
    if data.is_empty() {
        return Err(BenchError::Input("file has a header but no data rows".into()));
    }
    Ok(Dataset {
        cloud: PointCloud::from_flat(data, features.len())?,
        feature_names: features.iter().map(|&c| headers[c].clone()).collect(),
        labels,
        responses,
    })
}
