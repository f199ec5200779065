//! Output directory: CSV/JSON writers, manifest and error file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Float with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
struct OutputEntry {
    name: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    command: &'a str,
    seed: u64,
    config_sha256: &'a str,
    config: &'a C,
    outputs: &'a [OutputEntry],
}

/// Collects the artifacts of one command.
pub struct OutputDir {
    dir: PathBuf,
    outputs: Vec<OutputEntry>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), outputs: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.retain(|o| o.name != name);
        self.outputs.push(OutputEntry { name: name.into(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// CSV with a header; every row must match the header width.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Invalid(format!("{name}: {e}"));
        w.write_record(header).map_err(fail)?;
        for r in rows {
            w.write_record(r).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Invalid(format!("{name}: {e}")))?;
        self.write(name, &bytes)
    }

    /// Writes `manifest.json`; call last.
    pub fn finish<C: Serialize>(mut self, command: &str, seed: u64, config: &C, config_sha256: &str) -> Result<(), CliError> {
        let outputs = std::mem::take(&mut self.outputs);
        let manifest = Manifest {
            tool: "stripeforge",
            version: env!("CARGO_PKG_VERSION"),
            core_version: stripeforge_core::VERSION,
            command,
            seed,
            config_sha256,
            config,
            outputs: &outputs,
        };
        self.write_json("manifest.json", &manifest)
    }
}

#[derive(Debug, Serialize)]
struct ErrorFile<'a> {
    kind: &'a str,
    exit_code: u8,
    message: String,
}

/// Best-effort `error.json`; failures to write are ignored.
pub fn write_error(dir: &Path, err: &CliError) {
    let body = ErrorFile { kind: err.kind(), exit_code: err.exit_code(), message: err.to_string() };
    if fs::create_dir_all(dir).is_ok() {
        if let Ok(mut f) = fs::File::create(dir.join("error.json")) {
            let _ = serde_json::to_writer_pretty(&mut f, &body);
            let _ = writeln!(f);
        }
    }
}
