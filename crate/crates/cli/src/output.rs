use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::experiments::Table;

fn output_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.to_path_buf(),
        source,
    }
}

pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn write_csv(path: &Path, table: &Table) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(output_error(dir))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Output {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    let io = |e: csv::Error| CliError::Output {
        path: path.to_path_buf(),
        source: e.into(),
    };
    w.write_record(table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(output_error(path))
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub config: &'a Value,
    pub seed: u64,
    pub workers: usize,
    pub version: &'static str,
    pub started_unix_seconds: u64,
    pub wall_time_seconds: f64,
    pub rows: usize,
    pub csv: &'a Path,
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> CliResult<()> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(path, text + "\n").map_err(output_error(path))
}
