//! Run configuration, result files and the manifest that ties them together.
//!
//! Configs are flat `key = value` text. Tables are CSV with 12 significant
//! digits, plots are standalone SVG, and every file written through a
//! [`ResultBundle`] is listed with its SHA-256 in `manifest.json`.

mod bundle;
mod config;
mod csv;
mod svg;

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use self::bundle::{stability_json, Provenance, ResultBundle, MANIFEST_NAME};
pub use self::config::{
    parse_config, parse_config_with, ConfigError, ConfigIssue, Grids, Origin, RunConfig,
    SensitivityConfig,
};
pub use self::csv::{
    format_sig, parse_csv, read_csv, to_csv_string, unit_of, write_csv, Table,
    ROUND_TRIP_TOLERANCE, SIGNIFICANT_DIGITS,
};
pub use self::svg::{plot_svg, render_svg, Plot, Series};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("table: {0}")]
    Table(String),
    #[error("nothing to plot: {0}")]
    EmptyPlot(String),
}

/// One emitted file.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub kind: String,
    pub bytes: u64,
    pub sha256: String,
    /// `(name, unit)` for tables.
    pub columns: Vec<(String, String)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes`, creating parent directories as needed.
pub(crate) fn write_file(
    path: &Path,
    kind: &str,
    bytes: &[u8],
) -> Result<ManifestEntry, ReportError> {
    let io = |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, bytes).map_err(io)?;
    Ok(ManifestEntry {
        path: path.to_path_buf(),
        kind: kind.to_string(),
        bytes: bytes.len() as u64,
        sha256: sha256_hex(bytes),
        columns: Vec::new(),
    })
}
