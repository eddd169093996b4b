//! Output directory handling: float formatting, atomic writes and the
//! digest manifest.

use serde_json::{json, Number, Value};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

/// Seventeen significant digits, round-trip exact, with a signed exponent
/// (`1.0000000000000000e+0`) as JSON numbers are printed.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        let s = format!("{x:.16e}");
        match s.split_once('e') {
            Some((m, e)) if !e.starts_with('-') => format!("{m}e+{e}"),
            _ => s,
        }
    }
}

/// A JSON number printed like [`fmt_f64`]; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(fmt_f64(x).parse::<Number>().expect("formatted float is a JSON number"))
    } else {
        Value::Null
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Writes `name` through a temporary file in the same directory, then
    /// renames it into place.
    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let target = self.dir.join(name);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        let parent = target.parent().unwrap_or(&self.dir);
        let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| CliError::io(parent, e))?;
        tmp.write_all(contents).map_err(|e| CliError::io(&target, e))?;
        tmp.as_file().sync_all().map_err(|e| CliError::io(&target, e))?;
        tmp.persist(&target).map_err(|e| CliError::io(&target, e.error))?;
        let entry = FileEntry { name: name.to_string(), sha256: hex(&Sha256::digest(contents)), bytes: contents.len() as u64 };
        self.files.retain(|f| f.name != name);
        self.files.push(entry);
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write_csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        self.write(name, table.render().as_bytes())
    }

    /// Writes the manifest of everything written so far.
    pub fn finish(&mut self, schema: &str) -> Result<(), CliError> {
        let mut files = self.files.clone();
        files.sort_by(|a, b| a.name.cmp(&b.name));
        let listing: Vec<Value> =
            files.iter().map(|f| json!({"name": f.name, "sha256": f.sha256, "bytes": f.bytes})).collect();
        let manifest = json!({"schema_version": schema, "files": listing});
        let mut text = serde_json::to_string_pretty(&manifest).expect("JSON values serialize");
        text.push('\n');
        let target = self.dir.join(MANIFEST);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        tmp.write_all(text.as_bytes()).map_err(|e| CliError::io(&target, e))?;
        tmp.persist(&target).map_err(|e| CliError::io(&target, e.error))?;
        Ok(())
    }
}

/// A CSV table with a fixed header; cells are preformatted strings.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shorthand for a float cell.
pub fn f(x: f64) -> String {
    fmt_f64(x)
}

/// Shorthand for an integer cell.
pub fn i<T: ToString>(x: T) -> String {
    x.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_seventeen_digits() {
        for x in [std::f64::consts::PI, -1e-300, 0.1, 2.0f64.sqrt() * 1e10, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(serde_json::to_string(&num(0.5)).unwrap(), "5.0000000000000000e-1");
        for x in [2.0, 1e5, 0.0, -3.5] {
            assert_eq!(serde_json::to_string(&num(x)).unwrap(), fmt_f64(x));
        }
    }

    #[test]
    fn tables_use_unix_newlines() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![i(1), f(0.25)]);
        assert_eq!(t.render(), "a,b\n1,2.5000000000000000e-1\n");
    }
}
