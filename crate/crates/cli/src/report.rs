use serde_json::{json, Map, Value};
use std::time::Duration;

use crate::output::{num, FileEntry};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
    pub detail: Option<String>,
}

impl Check {
    /// Passes when `value ≤ limit`; NaN fails.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.to_string(), value, limit, passed: value <= limit, detail: None }
    }

    /// Passes when `lo ≤ value ≤ hi`; the recorded limit is `hi`.
    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        let detail = Some(format!("expected in [{lo}, {hi}]"));
        Self { name: name.to_string(), value, limit: hi, passed: lo <= value && value <= hi, detail }
    }

    pub fn holds(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        let v = if passed { 0.0 } else { 1.0 };
        Self { name: name.to_string(), value: v, limit: 0.0, passed, detail: Some(detail.into()) }
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("name".into(), json!(self.name));
        m.insert("value".into(), num(self.value));
        m.insert("limit".into(), num(self.limit));
        m.insert("passed".into(), json!(self.passed));
        if let Some(d) = &self.detail {
            m.insert("detail".into(), json!(d));
        }
        Value::Object(m)
    }
}

/// Outcome of one run. Everything except the wall time is written to
/// `report.json`, so identical configurations give identical files.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: Value,
    pub checks: Vec<Check>,
    pub results: Map<String, Value>,
    pub files: Vec<FileEntry>,
    pub wall_time: Duration,
}

pub const REPORT: &str = "report.json";

impl RunReport {
    pub fn new(command: Value) -> Self {
        Self { command, checks: Vec::new(), results: Map::new(), files: Vec::new(), wall_time: Duration::ZERO }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn result(&mut self, key: &str, v: Value) {
        self.results.insert(key.to_string(), v);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Value {
        let mut files: Vec<&FileEntry> = self.files.iter().collect();
        files.sort_by(|a, b| a.name.cmp(&b.name));
        json!({
            "command": self.command,
            "library_version": symdesk_core::VERSION,
            "cli_version": env!("CARGO_PKG_VERSION"),
            "schema_version": crate::SCHEMA_VERSION,
            "passed": self.passed(),
            "checks": self.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
            "results": Value::Object(self.results.clone()),
            "files": files.iter().map(|f| json!({"name": f.name, "sha256": f.sha256})).collect::<Vec<_>>(),
        })
    }

    /// One line per check for the terminal.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            s.push_str(&format!("{tag} {} = {:.3e} (limit {:.3e})", c.name, c.value, c.limit));
            if let Some(d) = &c.detail {
                s.push_str(&format!(" [{d}]"));
            }
            s.push('\n');
        }
        s.push_str(&format!("wall time {:.3} s\n", self.wall_time.as_secs_f64()));
        s
    }
}
