use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use repelsim::integrate::fmt17;
use serde::Serialize;

use crate::{CliError, RunConfig};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Writes a CSV with the given header; every cell is a 17-digit float.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let body = || -> std::io::Result<()> {
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            let cells: Vec<String> = row.into_iter().map(fmt17).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    };
    body().map_err(io_err(path))
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: String,
    seed: u64,
    version: &'static str,
    config: &'a RunConfig,
    files: Vec<String>,
}

/// `manifest.json`: config hash, seed and version, plus the resolved config
/// so the run can be repeated exactly.
pub fn write_manifest(cfg: &RunConfig, command: &str, files: &[PathBuf]) -> Result<(), CliError> {
    let manifest = Manifest {
        command,
        config_hash: cfg.hash(),
        seed: cfg.sim.seed,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        files: files
            .iter()
            .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
            .collect(),
    };
    write_json(&cfg.output.dir.join("manifest.json"), &manifest)
}
