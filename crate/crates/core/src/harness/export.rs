use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Writes the selected fields of a JSON-lines metrics file as CSV: a header
/// row, then one row per record. Header and diagnostic records of
/// `metrics.jsonl` are skipped, so the same call works on `epochs.jsonl`.
/// Numbers are printed in shortest round-trip form; nulls become empty
/// cells; arrays are written as JSON.
pub fn export_series(metrics: &Path, fields: &[String], out: &mut impl Write) -> Result<usize> {
    let file = std::fs::File::open(metrics).map_err(|e| Error::io(metrics, e))?;
    let mut records: Vec<Map<String, Value>> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(metrics, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: metrics.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        let Value::Object(map) = value else {
            return Err(Error::Parse {
                path: metrics.to_path_buf(),
                line: i + 1,
                message: "expected a JSON object".into(),
            });
        };
        match map.get("record").and_then(Value::as_str) {
            Some("header") | Some("diagnostic") => continue,
            _ => records.push(map),
        }
    }

    let available: BTreeSet<&str> = records.iter().flat_map(|r| r.keys().map(String::as_str)).collect();
    if let Some(bad) = fields.iter().find(|f| !available.contains(f.as_str())) {
        let list = available.iter().copied().collect::<Vec<_>>().join(", ");
        return Err(Error::config(
            "fields",
            format!("unknown field {bad:?}; available: {list}"),
        ));
    }

    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Format {
        what: "CSV output",
        message: e.to_string(),
    };
    w.write_record(fields).map_err(csv_err)?;
    for r in &records {
        let row = fields.iter().map(|f| match r.get(f) {
            None | Some(Value::Null) => String::new(),
            Some(Value::String(s)) => s.clone(),
            Some(v) => v.to_string(),
        });
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(records.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"record":"header","method":"sam"}}"#).unwrap();
        for (i, loss) in [std::f64::consts::LN_2, 0.1 + 0.2, 1e-300].iter().enumerate() {
            writeln!(f, r#"{{"record":"step","step":{i},"train_loss":{loss:?},"perturbed_grad_norm":null}}"#)
                .unwrap();
        }
        f
    }

    #[test]
    fn header_plus_one_row_per_record() {
        let f = fixture();
        let mut out = Vec::new();
        let fields = vec!["step".to_string(), "train_loss".to_string()];
        assert_eq!(export_series(f.path(), &fields, &mut out).unwrap(), 3);
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next().unwrap(), "step,train_loss");
    }

    #[test]
    fn values_round_trip() {
        let f = fixture();
        let mut out = Vec::new();
        export_series(f.path(), &["train_loss".into(), "perturbed_grad_norm".into()], &mut out).unwrap();
        let mut rd = csv::Reader::from_reader(out.as_slice());
        let parsed: Vec<(f64, String)> = rd
            .records()
            .map(|r| {
                let r = r.unwrap();
                (r[0].parse().unwrap(), r[1].to_string())
            })
            .collect();
        assert_eq!(parsed[0].0, std::f64::consts::LN_2);
        assert_eq!(parsed[1].0, 0.1 + 0.2);
        assert_eq!(parsed[2].0, 1e-300);
        assert_eq!(parsed[0].1, "");
    }

    #[test]
    fn unknown_field_lists_the_available_ones() {
        let f = fixture();
        let err = export_series(f.path(), &["nope".into()], &mut Vec::new()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nope") && msg.contains("train_loss") && msg.contains("step"), "{msg}");
    }
}
