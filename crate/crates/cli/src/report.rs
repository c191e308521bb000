//! JSON reports and CSV tables.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use apaths_core::CheckRecord;
use serde::{Deserialize, Serialize};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Outcome of one run. Field order is the serialized key order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub records: Vec<CheckRecord>,
    pub pass: bool,
    pub wall_ms: u64,
}

impl Report {
    /// `pass` is the conjunction of the records.
    pub fn new(seed: u64, config: serde_json::Value, records: Vec<CheckRecord>) -> Self {
        Report {
            version: VERSION.to_string(),
            seed,
            config,
            pass: records.iter().all(|r| r.pass),
            records,
            wall_ms: 0,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn emit_report(report: &Report, path: &Path) -> io::Result<()> {
    std::fs::write(path, report.to_json())
}

/// Columns of numbers; `None` is written as an empty field.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.map_or_else(String::new, |v| v.to_string())))?;
        }
        w.flush()
    }

    pub fn emit(&self, path: &Path) -> io::Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }
}

/// One grid of a convergence study. `order` is `log2` of the defect ratio
/// to the previous row.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n_t: usize,
    pub defect: f64,
    pub order: Option<f64>,
}

pub fn convergence_rows(defects: &[(usize, f64)]) -> Vec<ConvergenceRow> {
    defects
        .iter()
        .enumerate()
        .map(|(i, &(n_t, defect))| ConvergenceRow {
            n_t,
            defect,
            order: (i > 0).then(|| (defects[i - 1].1 / defect).log2()),
        })
        .collect()
}

pub fn convergence_table(rows: &[ConvergenceRow]) -> Table {
    let mut t = Table::new(["n_t", "defect", "order"]);
    for r in rows {
        t.push(vec![Some(r.n_t as f64), Some(r.defect), r.order]);
    }
    t
}

pub fn emit_convergence_table(rows: &[ConvergenceRow], path: &Path) -> io::Result<()> {
    convergence_table(rows).emit(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_passes() {
        let r = Report::new(1, serde_json::json!({}), vec![]);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["pass"], true);
        assert_eq!(v["records"], serde_json::json!([]));
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 6);
    }

    #[test]
    fn one_failure_fails() {
        let r = Report::new(
            1,
            serde_json::Value::Null,
            vec![CheckRecord::below("a", 0.0, 1.0), CheckRecord::below("b", 2.0, 1.0)],
        );
        assert!(!r.pass);
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn key_order() {
        let json = Report::new(7, serde_json::json!({"dim": 2}), vec![]).to_json();
        let at = |k: &str| json.find(&format!("\"{k}\"")).unwrap();
        let order = ["version", "seed", "config", "records", "pass", "wall_ms"].map(at);
        assert!(order.windows(2).all(|w| w[0] < w[1]), "{json}");
    }

    #[test]
    fn convergence_csv() {
        let rows = convergence_rows(&[(33, 1.6e-5), (65, 1e-6), (129, 6.25e-8)]);
        assert_eq!(rows[0].order, None);
        assert!((rows[1].order.unwrap() - 4.0).abs() < 1e-12);
        let mut buf = Vec::new();
        convergence_table(&rows).write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n_t,defect,order");
        assert_eq!(lines[1], "33,0.000016,");
        assert_eq!(lines.len(), 4);
    }
}
