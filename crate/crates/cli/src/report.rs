//! Versioned JSON report and CSV tables.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Reported quantity without a pass/fail claim.
    Info,
}

#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub name: String,
    /// The statement the check exercises.
    pub anchor: String,
    pub inputs: BTreeMap<String, Value>,
    pub outputs: BTreeMap<String, Value>,
    pub residuals: BTreeMap<String, f64>,
    /// Bound the pass/fail claim was checked against.
    pub tolerance: Option<f64>,
    pub verdict: Status,
    pub witness: Option<[f64; 3]>,
    pub detail: Option<String>,
}

impl Record {
    pub fn new(name: &str, anchor: &str) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            residuals: BTreeMap::new(),
            tolerance: None,
            verdict: Status::Info,
            witness: None,
            detail: None,
        }
    }

    pub fn input(mut self, k: &str, v: impl Serialize) -> Self {
        self.inputs.insert(k.into(), json!(v));
        self
    }

    pub fn output(mut self, k: &str, v: impl Serialize) -> Self {
        self.outputs.insert(k.into(), json!(v));
        self
    }

    pub fn residual(mut self, k: &str, v: f64) -> Self {
        self.residuals.insert(k.into(), v);
        self
    }

    /// Pass iff `value <= tol` (NaN fails).
    pub fn at_most(mut self, key: &str, value: f64, tol: f64) -> Self {
        self.residuals.insert(key.into(), value);
        self.tolerance = Some(tol);
        self.verdict = if value <= tol { Status::Pass } else { Status::Fail };
        self
    }

    pub fn judged(mut self, ok: bool, tol: Option<f64>) -> Self {
        self.tolerance = tol;
        self.verdict = if ok { Status::Pass } else { Status::Fail };
        self
    }

    pub fn witness(mut self, p: Option<[f64; 3]>) -> Self {
        self.witness = p;
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

/// A CSV table written next to the report.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(file: &str, columns: &[&str]) -> Self {
        Self { file: file.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// Output of one command before serialization.
#[derive(Debug, Default)]
pub struct Outcome {
    pub records: Vec<Record>,
    pub tables: Vec<Table>,
    /// Extra text files, e.g. the exported matrix.
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.verdict != Status::Fail)
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub records: Vec<Record>,
    pub tables: Vec<String>,
    pub verdict: Status,
    pub timing: Timing,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub seconds: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn write_outputs(dir: &Path, report: &Report, outcome: &Outcome) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Internal(format!("writing to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut f = std::fs::File::create(dir.join("report.json")).map_err(io)?;
    f.write_all(report.to_json().as_bytes()).map_err(io)?;
    f.write_all(b"\n").map_err(io)?;
    for t in &outcome.tables {
        std::fs::write(dir.join(&t.file), t.to_csv()).map_err(io)?;
    }
    for (name, bytes) in &outcome.files {
        std::fs::write(dir.join(name), bytes).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_judgement_and_nan() {
        assert_eq!(Record::new("a", "x").at_most("r", 1e-12, 1e-10).verdict, Status::Pass);
        assert_eq!(Record::new("a", "x").at_most("r", f64::NAN, 1e-10).verdict, Status::Fail);
        let r = Record::new("a", "x").output("v", 1.5).input("n", 3);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"verdict\":\"info\"") && s.contains("\"tolerance\":null"));
    }

    #[test]
    fn csv_round_trips_floats() {
        let mut t = Table::new("e.csv", &["index", "value"]);
        t.rows.push(vec![0.0, 29.585039326022193]);
        let csv = t.to_csv();
        let v: f64 = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 29.585039326022193);
    }
}
