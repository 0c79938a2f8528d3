//! Sparse `<label> <idx>:<val> ...` files as distributed by LIBSVM.
//!
//! ```text
//! +1 1:0.5 3:2.0   # trailing comments are ignored
//! -1 2:1
//! ```
//!
//! Indices are 1-based and strictly increasing within a line. The dense width
//! is the largest index seen in the file; absent entries are zero.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::csv_file::dataset_name;
use super::{DataError, Dataset, LabelEncoder};
use crate::numerics::Matrix;

struct SparseRow {
    label: String,
    entries: Vec<(usize, f64)>,
}

fn parse_line(path: &str, line_no: usize, line: &str) -> Result<Option<SparseRow>, DataError> {
    let content = line.split('#').next().unwrap_or("").trim();
    if content.is_empty() {
        return Ok(None);
    }
    let malformed = |message: String| DataError::Malformed {
        path: path.to_string(),
        line: line_no,
        message,
    };
    let mut tokens = content.split_whitespace();
    let label = tokens.next().expect("non-empty line").to_string();
    let mut entries = Vec::new();
    let mut last = 0usize;
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| malformed(format!("token {tok:?} is not idx:value")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| malformed(format!("bad feature index in {tok:?}")))?;
        let val: f64 = val
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| malformed(format!("bad feature value in {tok:?}")))?;
        if idx == 0 {
            return Err(malformed("feature indices are 1-based".into()));
        }
        if idx <= last {
            return Err(malformed(format!(
                "feature index {idx} does not increase (previous {last})"
            )));
        }
        last = idx;
        entries.push((idx, val));
    }
    Ok(Some(SparseRow { label, entries }))
}

pub fn load_svmlight(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: display.clone(),
        source,
    })?;

    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(row) = parse_line(&display, i + 1, line)? {
            rows.push(row);
        }
    }
    if rows.is_empty() {
        return Err(DataError::Empty { path: display });
    }

    let width = rows
        .iter()
        .filter_map(|r| r.entries.last().map(|e| e.0))
        .max()
        .unwrap_or(0);
    let mut features = Matrix::zeros(rows.len(), width);
    let mut encoder = LabelEncoder::default();
    let mut labels = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        labels.push(encoder.encode(&row.label));
        for &(idx, val) in &row.entries {
            features.set(r, idx - 1, val);
        }
    }
    Dataset::new(dataset_name(path), features, labels, encoder.into_names())
}

/// Writes non-zero entries with shortest round-trip formatting.
pub fn write_svmlight(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let io = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = Vec::new();
    let x = dataset.features();
    for (r, &y) in dataset.labels().iter().enumerate() {
        write!(out, "{}", dataset.class_names()[y]).map_err(io)?;
        for (c, &v) in x.row(r).iter().enumerate() {
            if v != 0.0 {
                write!(out, " {}:{}", c + 1, v).map_err(io)?;
            }
        }
        writeln!(out).map_err(io)?;
    }
    fs::write(path, out).map_err(io)
}
