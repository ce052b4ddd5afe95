//! Result rows, CSV files and run manifests.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "scenario,protocol,beta,rho,eta,alpha2,snr_db,user,stage,ber_analytic,ber_mc,n_bits,n_errors,ci95";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Relay,
    Phase2,
    E2e,
}

/// One line of a result file. Fields that do not apply are `None` and come
/// out as empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub protocol: String,
    pub beta: Option<f64>,
    pub rho: Option<f64>,
    pub eta: Option<f64>,
    pub alpha2: f64,
    pub snr_db: f64,
    pub user: u8,
    pub stage: Stage,
    pub ber_analytic: Option<f64>,
    pub ber_mc: Option<f64>,
    pub n_bits: Option<u64>,
    pub n_errors: Option<u64>,
    pub ci95: Option<f64>,
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv { path: path.to_path_buf(), source }
}

/// Writes rows as CSV. The header is written even when there are no rows.
/// Floats use the shortest representation that parses back to the same value.
pub fn write_rows<W: Write>(sink: W, rows: &[ResultRow]) -> Result<()> {
    let label = Path::new("<stream>");
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(CSV_HEADER.split(',')).map_err(|e| csv_err(label, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(label, e))?;
    }
    w.flush().map_err(|source| Error::Io { path: label.to_path_buf(), source })
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    write_rows(std::io::BufWriter::new(file), rows).map_err(|e| match e {
        Error::Csv { source, .. } => csv_err(path, source),
        Error::Io { source, .. } => Error::Io { path: path.to_path_buf(), source },
        other => other,
    })
}

pub fn read_rows<R: Read>(source: R) -> Result<Vec<ResultRow>> {
    let label = Path::new("<stream>");
    let mut r = csv::Reader::from_reader(source);
    let header = r.headers().map_err(|e| csv_err(label, e))?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(|e| csv_err(label, e))).collect()
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    read_rows(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Csv { source, .. } => csv_err(path, source),
        other => other,
    })
}

/// Per-point bookkeeping recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub scenario: String,
    pub protocol: String,
    pub alpha2: f64,
    pub snr_db: f64,
    pub seed: Option<u64>,
    pub batches: Option<u64>,
    /// The frame budget ran out before the error target was met.
    pub budget_exhausted: bool,
    /// A second-hop value came from quadrature instead of the closed form.
    pub analytic_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub index: usize,
    pub scenario: String,
    pub protocol: String,
    pub kind: String,
    pub message: String,
}

/// Sidecar written next to every result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    pub config_digest: String,
    pub master_seed: u64,
    pub workers: usize,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
    pub points: Vec<PointRecord>,
    pub failures: Vec<PointFailure>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub optima: Option<serde_json::Value>,
}

impl RunManifest {
    /// `out.csv` gets `out.manifest.json`.
    pub fn path_for(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("manifest.json")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Ok(serde_json::from_str(&text)?)
    }
}
