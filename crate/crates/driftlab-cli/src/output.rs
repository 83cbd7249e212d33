//! Paths under the working directory, atomic writes, and the CSV and JSON
//! report formats.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug)]
pub struct Workdir(PathBuf);

impl Workdir {
    pub fn new(root: PathBuf) -> Self {
        Workdir(root)
    }

    /// Relative paths resolve under the working directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.0.join(p)
    }

    pub fn read(&self, p: &Path) -> Result<String, CliError> {
        let path = self.resolve(p);
        std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    /// Writes through a temporary file in the target directory and renames
    /// it into place, so readers never see a partial report.
    pub fn write_atomic(&self, p: &Path, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.resolve(p);
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&dir).map_err(io)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&path).map_err(|e| io(e.error))?;
        Ok(path)
    }
}

/// Config echo and versions attached to every report.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub library_version: &'static str,
    pub command: &'static str,
    pub config: serde_json::Value,
    pub config_sha256: String,
}

impl Provenance {
    pub fn new<C: Serialize>(command: &'static str, config: &C) -> Self {
        let config = serde_json::to_value(config).expect("configs serialise");
        let canonical = serde_json::to_string(&config).expect("values serialise");
        let digest = Sha256::digest(canonical.as_bytes());
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            tool_version: env!("CARGO_PKG_VERSION"),
            library_version: driftlab::VERSION,
            command,
            config,
            config_sha256: format!("{digest:x}"),
        }
    }
}

/// A JSON report: the payload under `result` plus provenance.
pub fn json_report<T: Serialize>(prov: &Provenance, result: &T) -> Vec<u8> {
    #[derive(Serialize)]
    struct Report<'a, T> {
        provenance: &'a Provenance,
        result: &'a T,
    }
    let mut out = serde_json::to_vec_pretty(&Report { provenance: prov, result }).expect("reports serialise");
    out.push(b'\n');
    out
}

/// CSV body followed by `# key: value` metadata lines.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    meta: Vec<(String, String)>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            meta: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self, prov: &Provenance) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        let mut out = w.into_inner().expect("in-memory flush");
        let mut line = |k: &str, v: &str| {
            out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
        };
        line("command", prov.command);
        line("tool_version", prov.tool_version);
        line("library_version", prov.library_version);
        line("config_sha256", &prov.config_sha256);
        for (k, v) in &self.meta {
            line(k, v);
        }
        out
    }
}

/// Shortest round-trip representation; `-0.0` is written as `0.0`.
pub fn num(x: f64) -> String {
    format!("{:?}", x + 0.0)
}
