//! Report files: `<name>.json`, optional `<name>.csv`, and `manifest.json`.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::settings::Settings;
use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn render(&self, hash: &str) -> String {
        let mut s = format!("# manifest_sha256={hash}\n{}\n", self.header.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| quote(c)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub result: Value,
    pub table: Option<Table>,
    /// Inequality violations found; any makes the run exit with status 1.
    pub findings: Vec<String>,
}

impl Report {
    pub fn new(result: impl Serialize) -> Result<Self, CliError> {
        Ok(Report {
            result: serde_json::to_value(result).map_err(|e| CliError::Io(e.to_string()))?,
            table: None,
            findings: Vec::new(),
        })
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn violated(&self) -> bool {
        !self.findings.is_empty()
    }
}

/// The manifest echoes the resolved configuration; the worker count is
/// left out since outputs do not depend on it.
pub fn manifest(settings: &Settings) -> Value {
    json!({
        "tool": "diophlab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": settings.command(),
        "config": settings.values(),
    })
}

pub fn manifest_hash(manifest: &Value) -> String {
    let bytes = serde_json::to_vec(manifest).expect("manifest serializes");
    hex::encode(Sha256::digest(&bytes))
}

pub fn render_json(report: &Report, settings: &Settings, hash: &str) -> String {
    let doc = json!({
        "manifest_sha256": hash,
        "command": settings.command(),
        "status": if report.violated() { "violation" } else { "ok" },
        "findings": report.findings,
        "result": report.result,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

/// Writes the three files into `dir`, or prints the JSON when `dir` is
/// `None`.
pub fn emit(report: &Report, settings: &Settings, dir: Option<&Path>, name: &str) -> Result<(), CliError> {
    let m = manifest(settings);
    let hash = manifest_hash(&m);
    let json = render_json(report, settings, &hash);
    let Some(dir) = dir else {
        print!("{json}");
        return Ok(());
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join(format!("{name}.json")), json).map_err(io)?;
    if let Some(t) = &report.table {
        std::fs::write(dir.join(format!("{name}.csv")), t.render(&hash)).map_err(io)?;
    }
    let mut doc = serde_json::to_string_pretty(&json!({ "manifest": m, "sha256": hash })).expect("manifest");
    doc.push('\n');
    std::fs::write(dir.join("manifest.json"), doc).map_err(io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quoting() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.render("h"), "# manifest_sha256=h\na,b\n1,\"x,y\"\n");
    }

    #[test]
    fn hash_is_stable() {
        let m = json!({"b": 1, "a": [2, 3]});
        assert_eq!(manifest_hash(&m), manifest_hash(&m.clone()));
        assert_eq!(manifest_hash(&m).len(), 64);
    }
}
