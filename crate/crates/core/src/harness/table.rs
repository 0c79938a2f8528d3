use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{Metrics, MetricsReport};
use crate::{Error, Result};

/// One CSV row: the test metrics of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub model: String,
    pub seed: u64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ResultRow {
    pub fn new(dataset: &str, model: &str, seed: u64, m: &Metrics) -> Self {
        ResultRow {
            dataset: dataset.to_string(),
            model: model.to_string(),
            seed,
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        }
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            accuracy: self.accuracy,
            precision: self.precision,
            recall: self.recall,
            f1: self.f1,
        }
    }
}

/// `0.9282, 0.0340` becomes `92.82±3.40`.
pub fn format_cell(mean: f64, std: f64) -> String {
    format!("{:.2}±{:.2}", mean * 100.0, std * 100.0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedTables {
    pub csv: PathBuf,
    pub markdown: PathBuf,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

pub fn results_csv(rows: &[ResultRow]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::State(format!("csv encoding: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::State(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// One line per (dataset, model) with `mean±std` percentages.
pub fn summary_markdown(rows: &[ResultRow]) -> String {
    let mut groups: BTreeMap<(&str, &str), Vec<Metrics>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((&r.dataset, &r.model))
            .or_default()
            .push(r.metrics());
    }
    let mut out = String::from("| Dataset | Model | Accuracy | Precision | Recall | F1 |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    for ((dataset, model), runs) in groups {
        let report = MetricsReport::aggregate(runs);
        let cells: Vec<String> = report
            .mean
            .as_array()
            .iter()
            .zip(report.std.as_array())
            .map(|(&m, s)| format_cell(m, s))
            .collect();
        out.push_str(&format!(
            "| {dataset} | {model} | {} |\n",
            cells.join(" | ")
        ));
    }
    out
}

/// Writes `<stem>.csv` and `<stem>.md` into `dir`.
pub fn emit_table(rows: &[ResultRow], dir: &Path, stem: &str) -> Result<EmittedTables> {
    if rows.is_empty() {
        return Err(Error::State("no results to write".into()));
    }
    let csv = dir.join(format!("{stem}.csv"));
    let markdown = dir.join(format!("{stem}.md"));
    write_atomic(&csv, results_csv(rows)?.as_bytes())?;
    write_atomic(&markdown, summary_markdown(rows).as_bytes())?;
    Ok(EmittedTables { csv, markdown })
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display()))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_format() {
        assert_eq!(format_cell(0.9282, 0.0340), "92.82±3.40");
        assert_eq!(format_cell(1.0, 0.0), "100.00±0.00");
    }

    #[test]
    fn one_result_gives_header_and_one_row() {
        let m = Metrics {
            accuracy: 0.5,
            precision: 0.25,
            recall: 0.5,
            f1: 1.0 / 3.0,
        };
        let text = results_csv(&[ResultRow::new("iris", "samn", 1, &m)]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "dataset,model,seed,accuracy,precision,recall,f1");
        let md = summary_markdown(&[ResultRow::new("iris", "samn", 1, &m)]);
        assert!(md.contains("| iris | samn | 50.00±0.00 | 25.00±0.00 | 50.00±0.00 | 33.33±0.00 |"));
    }
}
