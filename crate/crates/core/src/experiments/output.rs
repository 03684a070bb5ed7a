use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::decomposition::{PROP_TOL, DIAG_TOL};
use crate::error::{Error, Result};
use crate::interpolation::LIN_TOL;
use crate::linalg::{EIG_TOL, PSD_TOL, RANK_TOL, SYM_TOL};

pub const TOOL_VERSION: &str = concat!("mvk ", env!("CARGO_PKG_VERSION"));

/// Hex SHA-256 of the effective configuration text.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Comment block written at the top of every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub command: String,
    pub config_hash: String,
    pub seeds: Vec<(String, u64)>,
    pub extra: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &str, config_text: &str) -> Self {
        Self {
            command: command.to_string(),
            config_hash: config_hash(config_text),
            seeds: Vec::new(),
            extra: Vec::new(),
        }
    }

    pub fn seed(mut self, name: &str, value: u64) -> Self {
        self.seeds.push((name.to_string(), value));
        self
    }

    pub fn note(mut self, key: &str, value: impl Into<String>) -> Self {
        self.extra.push((key.to_string(), value.into()));
        self
    }

    pub fn render(&self) -> String {
        let seeds = if self.seeds.is_empty() {
            "none".to_string()
        } else {
            self.seeds
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = format!(
            "# tool: {TOOL_VERSION}\n# command: {}\n# config_sha256: {}\n# seeds: {seeds}\n# tolerances: {}\n",
            self.command,
            self.config_hash,
            tolerance_summary()
        );
        for (k, v) in &self.extra {
            s.push_str(&format!("# {k}: {v}\n"));
        }
        s
    }
}

pub fn tolerance_summary() -> String {
    format!(
        "sym_tol={SYM_TOL:e} eig_tol={EIG_TOL:e} rank_tol={RANK_TOL:e} psd_tol={PSD_TOL:e} lin_tol={LIN_TOL:e} prop_tol={PROP_TOL:e} diag_tol={DIAG_TOL:e}"
    )
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// A named output file held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: &str, contents: String) -> Self {
        Self {
            name: name.to_string(),
            contents,
        }
    }
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for a in artifacts {
        fs::write(dir.join(&a.name), &a.contents)?;
    }
    Ok(())
}

/// Header block followed by a CSV table.
pub fn csv_text(header: &Header, columns: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns)?;
    for r in rows {
        debug_assert_eq!(r.len(), columns.len());
        w.write_record(r)?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let mut s = header.render();
    s.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    Ok(s)
}

/// A numeric CSV table. Lines starting with `#` are skipped; empty cells
/// read as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            source_name: source_name.to_string(),
            message,
        };
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let row = rec
                .iter()
                .enumerate()
                .map(|(c, cell)| {
                    if cell.is_empty() {
                        Ok(f64::NAN)
                    } else {
                        cell.parse::<f64>().map_err(|_| {
                            parse_err(format!("line {line}, column `{}`: `{cell}` is not a number", columns[c]))
                        })
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Indices of columns `prefix1, prefix2, …` in numeric order.
    pub fn prefixed(&self, prefix: &str) -> Vec<usize> {
        let mut found: Vec<(usize, usize)> = self
            .columns
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.strip_prefix(prefix)?.parse::<usize>().ok().map(|k| (k, i)))
            .collect();
        found.sort();
        found.into_iter().map(|(_, i)| i).collect()
    }
}
