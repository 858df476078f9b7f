use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ChoiceError, Result};
use crate::io::write_atomic;

/// Per-trial values behind one table cell.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub values: Vec<f64>,
    /// Trials that produced no value, with the reason.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
    /// Trials whose value is kept but deserves a remark, such as a solver
    /// stopped by its time limit.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Cell {
    /// Mean in trial order; NaN for an empty cell.
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return f64::NAN;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }
}

/// Rows x columns of per-trial values, reported as their means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub title: String,
    pub metric: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cells: Vec<Vec<Cell>>,
}

impl ReportTable {
    pub fn new(
        title: impl Into<String>,
        metric: impl Into<String>,
        rows: Vec<String>,
        cols: Vec<String>,
    ) -> Self {
        let cells = vec![vec![Cell::default(); cols.len()]; rows.len()];
        Self {
            title: title.into(),
            metric: metric.into(),
            rows,
            cols,
            cells,
        }
    }

    fn index(&self, row: &str, col: &str) -> Option<(usize, usize)> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.cols.iter().position(|x| x == col)?;
        Some((r, c))
    }

    pub fn cell(&self, row: &str, col: &str) -> Option<&Cell> {
        self.index(row, col).map(|(r, c)| &self.cells[r][c])
    }

    fn cell_mut(&mut self, row: &str, col: &str) -> &mut Cell {
        let (r, c) = self
            .index(row, col)
            .unwrap_or_else(|| panic!("no cell ({row}, {col}) in table {}", self.title));
        &mut self.cells[r][c]
    }

    pub fn push(&mut self, row: &str, col: &str, value: f64) {
        self.cell_mut(row, col).values.push(value);
    }

    pub fn fail(&mut self, row: &str, col: &str, reason: impl Into<String>) {
        self.cell_mut(row, col).failures.push(reason.into());
    }

    pub fn note(&mut self, row: &str, col: &str, remark: impl Into<String>) {
        self.cell_mut(row, col).notes.push(remark.into());
    }

    /// Cell mean, `None` for an unknown label.
    pub fn mean(&self, row: &str, col: &str) -> Option<f64> {
        self.cell(row, col).map(Cell::mean)
    }

    /// Long-format CSV with the per-trial values, so every mean can be
    /// recomputed exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,metric,mean,trials,failed,noted,values\n");
        for (r, row) in self.rows.iter().enumerate() {
            for (c, col) in self.cols.iter().enumerate() {
                let cell = &self.cells[r][c];
                let values: Vec<String> = cell.values.iter().map(|v| format!("{v:?}")).collect();
                let _ = writeln!(
                    out,
                    "{},{},{},{:?},{},{},{},{}",
                    csv_field(row),
                    csv_field(col),
                    csv_field(&self.metric),
                    cell.mean(),
                    cell.count(),
                    cell.failures.len(),
                    cell.notes.len(),
                    values.join(";")
                );
            }
        }
        out
    }

    /// Aligned grid of means with four decimals.
    pub fn to_text(&self) -> String {
        let head = self
            .rows
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max(self.metric.len());
        let widths: Vec<usize> = self.cols.iter().map(|c| c.len().max(8)).collect();
        let mut out = format!("{}\n", self.title);
        let _ = write!(out, "{:<head$}", self.metric);
        for (c, w) in self.cols.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
        for (r, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{row:<head$}");
            for (c, w) in widths.iter().enumerate() {
                let cell = &self.cells[r][c];
                let text = if cell.count() == 0 {
                    "-".to_string()
                } else {
                    format!("{:.4}", cell.mean())
                };
                let _ = write!(out, "  {text:>w$}");
            }
            out.push('\n');
        }
        out
    }

    /// Places the columns of `other` to the right of this table's; rows are
    /// matched by label and missing ones are appended.
    pub fn hstack(&mut self, other: &ReportTable) {
        for row in &other.rows {
            if !self.rows.contains(row) {
                self.rows.push(row.clone());
                self.cells.push(vec![Cell::default(); self.cols.len()]);
            }
        }
        for (c, col) in other.cols.iter().enumerate() {
            let mut name = col.clone();
            while self.cols.contains(&name) {
                name.push('\'');
            }
            self.cols.push(name);
            for (r, row) in self.rows.iter().enumerate() {
                let cell = other
                    .rows
                    .iter()
                    .position(|x| x == row)
                    .map(|k| other.cells[k][c].clone())
                    .unwrap_or_default();
                self.cells[r].push(cell);
            }
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// What is needed to replay a table: the experiment settings, the derived
/// seeds and a hash over both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub spec: serde_json::Value,
    pub seeds: Vec<u64>,
    pub input_hash: String,
    pub crate_version: String,
}

impl Manifest {
    pub fn new<S: Serialize>(experiment: &str, spec: &S, seeds: Vec<u64>) -> Result<Self> {
        let spec = serde_json::to_value(spec)?;
        let mut h = Sha256::new();
        h.update(experiment.as_bytes());
        h.update([0]);
        h.update(serde_json::to_vec(&spec)?);
        for s in &seeds {
            h.update(s.to_le_bytes());
        }
        Ok(Self {
            experiment: experiment.to_string(),
            spec,
            seeds,
            input_hash: hex::encode(h.finalize()),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }
}

/// Writes `<stem>.csv`, `<stem>.txt` and `<stem>.manifest.json` into `dir`.
pub fn write_report(
    dir: &Path,
    stem: &str,
    table: &ReportTable,
    manifest: &Manifest,
) -> Result<Vec<PathBuf>> {
    if stem.is_empty() || stem.contains(['/', '\\']) {
        return Err(ChoiceError::Config(format!("invalid report name {stem:?}")));
    }
    std::fs::create_dir_all(dir)?;
    let files = [
        (dir.join(format!("{stem}.csv")), table.to_csv()),
        (dir.join(format!("{stem}.txt")), table.to_text()),
        (
            dir.join(format!("{stem}.manifest.json")),
            serde_json::to_string_pretty(manifest)? + "\n",
        ),
    ];
    let mut out = Vec::new();
    for (path, text) in files {
        write_atomic(&path, text.as_bytes())?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ReportTable {
        let mut t = ReportTable::new("demo", "ce", vec!["a".into(), "b".into()], vec!["x".into()]);
        t.push("a", "x", 0.1);
        t.push("a", "x", 0.2);
        t.push("a", "x", 0.7);
        t.fail("b", "x", "diverged");
        t
    }

    #[test]
    fn csv_values_reaggregate_exactly() {
        let t = table();
        let csv = t.to_csv();
        let line = csv.lines().nth(1).unwrap();
        let fields: Vec<&str> = line.split(',').collect();
        let values: Vec<f64> = fields[7].split(';').map(|v| v.parse().unwrap()).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        assert_eq!(mean.to_bits(), t.mean("a", "x").unwrap().to_bits());
        assert_eq!(fields[4], "3");
        assert!(csv.lines().nth(2).unwrap().contains(",0,1,0,"));
    }

    #[test]
    fn text_marks_empty_cells() {
        let text = table().to_text();
        assert!(text.contains("0.3333"));
        assert!(text.lines().last().unwrap().trim_end().ends_with('-'));
    }

    #[test]
    fn hstack_aligns_rows() {
        let mut a = table();
        let mut b = ReportTable::new(
            "other",
            "ce",
            vec!["b".into(), "c".into()],
            vec!["x".into()],
        );
        b.push("c", "x", 1.0);
        a.hstack(&b);
        assert_eq!(a.cols, vec!["x", "x'"]);
        assert_eq!(a.rows, vec!["a", "b", "c"]);
        assert_eq!(a.mean("c", "x'"), Some(1.0));
        assert!(a.mean("a", "x'").unwrap().is_nan());
    }

    #[test]
    fn manifest_hash_tracks_inputs() {
        let a = Manifest::new("t5", &serde_json::json!({"n": 20}), vec![1, 2]).unwrap();
        let b = Manifest::new("t5", &serde_json::json!({"n": 20}), vec![1, 2]).unwrap();
        let c = Manifest::new("t5", &serde_json::json!({"n": 21}), vec![1, 2]).unwrap();
        assert_eq!(a.input_hash, b.input_hash);
        assert_ne!(a.input_hash, c.input_hash);
        assert_eq!(a.input_hash.len(), 64);
    }
}
