//! Output files with provenance headers.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(command: &str, canonical_config: &str, seed: u64) -> Self {
        Self {
            tool: "dnctd",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: hex::encode(Sha256::digest(canonical_config.as_bytes())),
            seed,
        }
    }

    fn csv_line(&self) -> String {
        format!(
            "# {} {} command={} config_sha256={} seed={}\n",
            self.tool, self.version, self.command, self.config_sha256, self.seed
        )
    }
}

pub struct Output {
    dir: PathBuf,
    pub format: Format,
    provenance: Provenance,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path, format: Format, provenance: Provenance) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            provenance,
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    /// Writes a numeric table as `<stem>.csv` or `<stem>.json` depending on the format.
    pub fn table(&mut self, stem: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        match self.format {
            Format::Csv => {
                let mut s = self.provenance.csv_line();
                s.push_str(&columns.join(","));
                s.push('\n');
                for row in rows {
                    let cells: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                self.put(&format!("{stem}.csv"), s.as_bytes())
            }
            Format::Json => {
                let v = json!({ "columns": columns, "rows": rows });
                self.json(stem, v)
            }
        }
    }

    /// Writes pre-rendered CSV text, prefixed with the provenance line.
    pub fn csv_text(&mut self, file: &str, body: &str) -> Result<()> {
        let mut s = self.provenance.csv_line();
        s.push_str(body);
        self.put(file, s.as_bytes())
    }

    /// Writes `<stem>.json` with a `provenance` member added to `value`.
    pub fn json(&mut self, stem: &str, value: Value) -> Result<()> {
        let mut obj = serde_json::Map::new();
        obj.insert("provenance".into(), serde_json::to_value(&self.provenance)?);
        match value {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("data".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(obj))?;
        text.push('\n');
        self.put(&format!("{stem}.json"), text.as_bytes())
    }

    pub fn raw(&mut self, file: &str, bytes: &[u8]) -> Result<()> {
        self.put(file, bytes)
    }
}

pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}
