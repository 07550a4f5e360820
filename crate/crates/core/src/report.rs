//! Report bundles and their serialization.
//!
//! Every JSON document carries the schema version, the library version and
//! the resolved configuration next to its payload. CSV floats use 17
//! significant digits so that values round-trip exactly. Nothing
//! time-dependent is written, so identical runs give identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::error::Result;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One acceptance check with its measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    /// Human-readable threshold, e.g. `>= 1.8`.
    pub threshold: String,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, threshold: impl Into<String>, passed: bool) -> Self {
        Check { name: name.into(), passed, value, threshold: threshold.into() }
    }

    /// `|value - target| <= tol`.
    pub fn within(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let passed = (value - target).abs() <= tol;
        Check::new(name, value, format!("{} ± {}", fmt_f64(target), fmt_f64(tol)), passed)
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check::new(name, value, format!(">= {}", fmt_f64(bound)), value >= bound)
    }

    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check::new(name, value, format!("< {}", fmt_f64(bound)), value < bound)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// Everything one command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub command: String,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub files: Vec<OutputFile>,
}

impl ReportBundle {
    pub fn new(command: impl Into<String>, config: ExperimentConfig) -> Self {
        ReportBundle { command: command.into(), config, checks: vec![], files: vec![] }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn add_csv(&mut self, name: &str, contents: String) {
        self.files.push(OutputFile { name: name.into(), contents });
    }

    /// Wraps `data` in the standard envelope.
    pub fn add_json(&mut self, name: &str, data: Value) {
        let doc = envelope(&self.config, &self.command, data);
        self.files.push(OutputFile { name: name.into(), contents: to_pretty(&doc) });
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.contents.as_str())
    }

    pub fn summary(&self) -> Value {
        envelope(
            &self.config,
            &self.command,
            json!({ "all_passed": self.passed(), "checks": self.checks }),
        )
    }

    /// One `PASS`/`FAIL` line per check.
    pub fn summary_lines(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{tag} {}: {} (threshold {})", c.name, fmt_f64(c.value), c.threshold);
        }
        s
    }
}

fn envelope(config: &ExperimentConfig, command: &str, data: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "library_version": LIBRARY_VERSION,
        "command": command,
        "config": config,
        "data": data,
    })
}

fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Writes every file, `summary.json` and the echoed `config.toml` into
/// `dir`, creating it if needed. Returns the written paths.
pub fn write_report(bundle: &ReportBundle, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = vec![];
    let mut put = |name: &str, contents: &str| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };
    for f in &bundle.files {
        put(&f.name, &f.contents)?;
    }
    put("summary.json", &to_pretty(&bundle.summary()))?;
    put("config.toml", &bundle.config.to_toml_string())?;
    Ok(written)
}

/// Checks recorded in a `summary.json`.
pub fn read_summary(path: impl AsRef<Path>) -> Result<(String, Vec<Check>)> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)?;
    let command = v["command"].as_str().unwrap_or_default().to_string();
    let checks: Vec<Check> = serde_json::from_value(v["data"]["checks"].clone())?;
    Ok((command, checks))
}

/// CSV text from a header and numeric rows.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}
