use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::Result;

/// Bumped whenever a CSV layout changes.
pub const CSV_VERSION: u32 = 1;

/// Outcome of a command's `--check`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

/// Files a command produced, keyed by file name, plus its self-check.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: BTreeMap<String, String>,
    pub check: Option<CheckResult>,
    pub summary: String,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.insert(name.into(), contents);
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.get(name).map(String::as_str)
    }

    /// Writes every file into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, contents)?;
            written.push(p);
        }
        Ok(written)
    }
}

/// `# ldpsq <table> csv v<N>` followed by a header row and one line per record.
pub fn csv_table<S: Serialize>(table: &str, rows: &[S]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8");
    Ok(format!("# ldpsq {table} csv v{CSV_VERSION}\n{body}"))
}

pub fn json<S: Serialize>(v: &S) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

pub(crate) fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}
