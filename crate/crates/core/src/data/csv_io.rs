use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Dataset, Provenance, Task};
use crate::error::{Error, Result};
use crate::model::{Sample, Target};

/// Column layout of a CSV dataset. Every column other than `label_column`
/// is a feature, in header order. With `classes` empty the label is a real
/// target; otherwise it must be one of the listed names and maps to its
/// position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub label_column: String,
    #[serde(default)]
    pub classes: Vec<String>,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Row order defines ids. Any malformed row is an error naming its line.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes.as_slice());
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let label_idx = header
        .iter()
        .position(|h| h.trim() == schema.label_column)
        .ok_or_else(|| parse_err(1, format!("no column named {:?}", schema.label_column)))?;
    if header.len() < 2 {
        return Err(parse_err(1, "need at least one feature column".into()));
    }

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let mut features = Vec::with_capacity(header.len() - 1);
        let mut target = None;
        for (i, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if i == label_idx {
                target = Some(if schema.classes.is_empty() {
                    Target::Value(cell.parse::<f64>().map_err(|_| {
                        parse_err(line, format!("label {cell:?} is not a number"))
                    })?)
                } else {
                    Target::Class(
                        schema
                            .classes
                            .iter()
                            .position(|c| c == cell)
                            .ok_or_else(|| parse_err(line, format!("unknown label {cell:?}")))?,
                    )
                });
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| parse_err(line, format!("non-numeric cell {cell:?}")))?;
                if !v.is_finite() {
                    return Err(parse_err(line, format!("non-finite cell {cell:?}")));
                }
                features.push(v);
            }
        }
        samples.push(Sample::new(samples.len(), features, target.unwrap()));
    }
    if samples.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    let task = if schema.classes.is_empty() {
        Task::Regression
    } else {
        Task::Classification {
            classes: schema.classes.len(),
        }
    };
    Dataset::new(
        samples,
        task,
        Provenance::File {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        },
    )
}

/// Writes features as `x0..x{d-1}` followed by the label column. Floats use
/// the shortest representation that parses back to the same bits.
pub fn write_csv(dataset: &Dataset, path: &Path, schema: &CsvSchema) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..dataset.feature_dim()).map(|i| format!("x{i}")).collect();
    header.push(schema.label_column.clone());
    writer
        .write_record(&header)
        .map_err(|e| Error::io(path, e.into()))?;
    for s in dataset.samples() {
        let mut row: Vec<String> = s.features.iter().map(|v| format!("{v:?}")).collect();
        row.push(match s.target {
            Target::Class(c) => schema
                .classes
                .get(c)
                .cloned()
                .ok_or_else(|| Error::BadLabel {
                    id: s.id,
                    label: c.to_string(),
                })?,
            Target::Value(v) => format!("{v:?}"),
        });
        writer.write_record(&row).map_err(|e| Error::io(path, e.into()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
