//! Output plumbing: CSV files with fixed headers, JSON summaries, and the
//! 7-significant-digit number format used across both.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{Map, Value};

use crate::CliError;

/// Format with 7 significant digits, plain decimal in a sane range and
/// scientific outside it (matching the densest reference-table entries).
pub fn sig7(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..7).contains(&magnitude) {
        return format!("{x:.6e}");
    }
    let decimals = (6 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub struct CsvFile {
    path: PathBuf,
    lines: Vec<String>,
    columns: usize,
}

impl CsvFile {
    pub fn new(dir: &Path, name: &str, header: &[&str]) -> Self {
        Self { path: dir.join(name), lines: vec![header.join(",")], columns: header.len() }
    }

    pub fn row(&mut self, fields: Vec<String>) {
        assert_eq!(fields.len(), self.columns, "row width must match the header");
        self.lines.push(fields.join(","));
    }

    pub fn write(self) -> Result<PathBuf, CliError> {
        let body = self.lines.join("\n") + "\n";
        std::fs::write(&self.path, body)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", self.path.display())))?;
        Ok(self.path)
    }
}

/// Assemble and write `<command>_summary.json`. Keys are sorted by the JSON
/// map, so identical inputs produce identical bytes; the timestamp is
/// omitted under `--deterministic`.
pub struct Summary {
    fields: Map<String, Value>,
}

impl Summary {
    pub fn new(command: &str, deterministic: bool) -> Self {
        let mut fields = Map::new();
        fields.insert("schema_version".into(), Value::String(crate::config::SCHEMA_VERSION.into()));
        fields.insert("command".into(), Value::String(command.into()));
        if !deterministic {
            let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default().as_secs();
            fields.insert("generated_unix_seconds".into(), Value::from(now));
        }
        Self { fields }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.fields.insert(key.into(), value.into());
    }

    pub fn write(self, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        let text = serde_json::to_string_pretty(&Value::Object(self.fields))
            .expect("summary is valid JSON")
            + "\n";
        std::fs::write(&path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Mean and standard error of a sample.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n.is_multiple_of(2) {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    } else {
        values[n / 2]
    }
}
