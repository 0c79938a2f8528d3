use std::path::Path;
use std::str::FromStr;

use super::{DataError, Dataset, LabelEncoder};
use crate::numerics::Matrix;

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    /// Header name.
    Name(String),
    /// Zero-based column index.
    Index(usize),
    Last,
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "last" => LabelColumn::Last,
            _ => match s.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(s.to_string()),
            },
        })
    }
}

impl std::fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelColumn::Name(n) => write!(f, "{n}"),
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Last => write!(f, "last"),
        }
    }
}

struct RawTable {
    header: Option<Vec<String>>,
    /// (physical line number, cells)
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table(path: &Path) -> Result<RawTable, DataError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_error(&display, e))?;

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| io_error(&display, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        records.push((line, rec.iter().map(str::to_string).collect::<Vec<_>>()));
    }

    let mut rows = records.into_iter();
    let mut header = None;
    let mut data = Vec::new();
    if let Some((line, first)) = rows.next() {
        if first.iter().any(|c| c.parse::<f64>().is_err()) {
            header = Some(first);
        } else {
            data.push((line, first));
        }
    }
    data.extend(rows);
    Ok(RawTable { header, rows: data })
}

fn io_error(path: &str, e: csv::Error) -> DataError {
    let source = match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{other:?}")),
    };
    DataError::Io {
        path: path.to_string(),
        source,
    }
}

fn resolve_label(table: &RawTable, label: &LabelColumn, width: usize) -> Result<usize, DataError> {
    let missing = || DataError::MissingLabelColumn(label.to_string());
    match label {
        LabelColumn::Last => width.checked_sub(1).ok_or_else(missing),
        LabelColumn::Index(i) if *i < width => Ok(*i),
        LabelColumn::Index(_) => Err(missing()),
        LabelColumn::Name(name) => table
            .header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(missing),
    }
}

fn parse_rows(
    path: &str,
    table: &RawTable,
    label_col: Option<usize>,
    width: usize,
) -> Result<(Matrix, Vec<String>), DataError> {
    let n_features = width - usize::from(label_col.is_some());
    let mut data = Vec::with_capacity(table.rows.len() * n_features);
    let mut raw_labels = Vec::with_capacity(table.rows.len());
    for (line, cells) in &table.rows {
        if cells.len() != width {
            return Err(DataError::Malformed {
                path: path.to_string(),
                line: *line,
                message: format!("expected {width} cells, found {}", cells.len()),
            });
        }
        for (col, cell) in cells.iter().enumerate() {
            if Some(col) == label_col {
                raw_labels.push(cell.clone());
                continue;
            }
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DataError::BadCell {
                    path: path.to_string(),
                    line: *line,
                    column: col + 1,
                    cell: cell.clone(),
                })?;
            data.push(v);
        }
    }
    let features = Matrix::from_vec(table.rows.len(), n_features, data)
        .map_err(|e| DataError::Invalid(e.to_string()))?;
    Ok((features, raw_labels))
}

/// Loads a comma-separated file. The first line is a header when any of its
/// cells is non-numeric. Labels are re-encoded in first-appearance order.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let table = read_table(path)?;
    let width = table
        .rows
        .first()
        .map(|(_, r)| r.len())
        .or_else(|| table.header.as_ref().map(Vec::len))
        .unwrap_or(0);
    let label_col = resolve_label(&table, label, width)?;
    if table.rows.is_empty() {
        return Err(DataError::Empty { path: display });
    }
    let (features, raw_labels) = parse_rows(&display, &table, Some(label_col), width)?;
    let mut encoder = LabelEncoder::default();
    let labels = raw_labels.iter().map(|l| encoder.encode(l)).collect();
    Dataset::new(dataset_name(path), features, labels, encoder.into_names())
}

/// Reads features for prediction. When `label` is given, that column is
/// split off and returned as raw strings.
pub fn read_csv_features(
    path: impl AsRef<Path>,
    label: Option<&LabelColumn>,
) -> Result<(Matrix, Option<Vec<String>>), DataError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let table = read_table(path)?;
    if table.rows.is_empty() {
        return Err(DataError::Empty { path: display });
    }
    let width = table.rows[0].1.len();
    let label_col = label.map(|l| resolve_label(&table, l, width)).transpose()?;
    let (features, raw) = parse_rows(&display, &table, label_col, width)?;
    Ok((features, label_col.map(|_| raw)))
}

pub(crate) fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}
