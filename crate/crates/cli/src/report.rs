//! Run outputs: verdicts, numeric tables, CSV serialization and the JSON
//! report. CSV bodies are the reproducibility contract: headers mandatory,
//! UTF-8, LF line endings, `inf`/`-inf` for the infinite rate values, and no
//! volatile fields — timing lives only in the JSON report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn to_csv_field(&self) -> String {
        match self {
            Cell::Num(v) => {
                if v.is_nan() {
                    "nan".to_string()
                } else if v.is_infinite() {
                    if *v > 0.0 {
                        "inf".to_string()
                    } else {
                        "-inf".to_string()
                    }
                } else {
                    format!("{v}")
                }
            }
            Cell::Text(s) => {
                if s.contains(',') || s.contains('"') || s.contains('\n') {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            headers: headers.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.headers.join(","));
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(Cell::to_csv_field).collect();
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        }
    }
}

/// Everything a family run produces.
#[derive(Debug, Clone)]
pub struct FamilyOutput {
    pub verdicts: Vec<Verdict>,
    pub tables: Vec<Table>,
}

impl FamilyOutput {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

#[derive(Debug, Serialize)]
pub struct TableSummary {
    pub name: String,
    pub path: String,
    pub rows: usize,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub id: String,
    pub family: String,
    pub seed: u64,
    pub pass: bool,
    pub verdicts: Vec<Verdict>,
    pub tables: Vec<TableSummary>,
    pub config: std::collections::BTreeMap<String, serde_json::Value>,
    pub versions: Versions,
    pub timing_ms: u128,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub ratelab: &'static str,
}

/// Writes `<id>.<table>.csv` files plus `<id>.report.json`; returns the
/// written paths. A single writer owns all output.
pub fn write_outputs(
    out_dir: &Path,
    report: &mut RunReport,
    output: &FamilyOutput,
) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for table in &output.tables {
        let path = out_dir.join(format!("{}.{}.csv", report.id, table.name));
        std::fs::write(&path, table.to_csv())?;
        report.tables.push(TableSummary {
            name: table.name.clone(),
            path: path.display().to_string(),
            rows: table.rows.len(),
        });
        written.push(path);
    }
    let report_path = out_dir.join(format!("{}.report.json", report.id));
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(&report_path, json)?;
    written.push(report_path);
    Ok(written)
}
