//! Run directories, manifests and CSV formatting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

/// 17 significant digits, enough to round-trip any f64.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { text: format!("{}\n", header.join(",")), columns: header.len() }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.columns);
        let cells: Vec<String> = values.iter().map(|&v| num(v)).collect();
        writeln!(self.text, "{}", cells.join(",")).unwrap();
    }

    /// Row with leading integer labels followed by floats.
    pub fn labeled_row(&mut self, labels: &[usize], values: &[f64]) {
        debug_assert_eq!(labels.len() + values.len(), self.columns);
        let mut cells: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
        cells.extend(values.iter().map(|&v| num(v)));
        writeln!(self.text, "{}", cells.join(",")).unwrap();
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    cli_version: &'static str,
    core_version: &'static str,
    subcommand: &'a str,
    config_sha256: &'a str,
    seed: u64,
    /// paths relative to the run directory
    files: &'a [String],
}

/// One run directory. Files are recorded as they are written and listed in
/// manifest.json by `finish`.
pub struct RunDir {
    pub path: PathBuf,
    subcommand: String,
    hash: String,
    seed: u64,
    files: Vec<String>,
}

impl RunDir {
    /// Creates `root/<output_dir>/<subcommand>-<timestamp>-<hash8>`, or `exact` when given.
    pub fn create(root: &Path, cfg: &RunConfig, subcommand: &str, exact: Option<&Path>) -> Result<Self, CliError> {
        let hash = config_hash(cfg);
        let path = match exact {
            Some(p) => p.to_path_buf(),
            None => {
                let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S");
                let base = root.join(&cfg.output_dir).join(format!("{subcommand}-{stamp}-{}", &hash[..8]));
                let mut candidate = base.clone();
                let mut k = 1;
                while candidate.exists() {
                    candidate = PathBuf::from(format!("{}-{k}", base.display()));
                    k += 1;
                }
                candidate
            }
        };
        std::fs::create_dir_all(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        let mut dir = RunDir { path, subcommand: subcommand.to_string(), hash, seed: cfg.seed, files: Vec::new() };
        dir.write_json("config.json", cfg)?;
        Ok(dir)
    }

    pub fn write_text(&mut self, rel: &str, content: &str) -> Result<(), CliError> {
        let full = self.path.join(rel);
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent).map_err(|source| CliError::Io { path: parent.to_path_buf(), source })?;
        }
        std::fs::write(&full, content).map_err(|source| CliError::Io { path: full.clone(), source })?;
        self.files.push(rel.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        self.write_text(rel, &text)
    }

    pub fn write_csv(&mut self, rel: &str, csv: Csv) -> Result<(), CliError> {
        self.write_text(rel, &csv.into_string())
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        let files = std::mem::take(&mut self.files);
        let (subcommand, hash) = (self.subcommand.clone(), self.hash.clone());
        let manifest = Manifest {
            tool: "combustion-ns",
            cli_version: env!("CARGO_PKG_VERSION"),
            core_version: combustion_ns::VERSION,
            subcommand: &subcommand,
            config_sha256: &hash,
            seed: self.seed,
            files: &files,
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(self.path)
    }
}
