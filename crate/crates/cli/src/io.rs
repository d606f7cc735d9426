//! File plumbing: atomic writes, CSV tables and run manifests.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::seeds::SeedPlan;

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

/// Writes through a sibling temporary file so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    tmp.push(format!(".tmp{}-{}", std::process::id(), COUNTER.fetch_add(1, Ordering::Relaxed)));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| HarnessError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Shortest decimal that round-trips; `NaN` for missing values.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Subcarrier lists are written `;`-separated inside one field.
pub fn index_list(idx: &[usize]) -> String {
    idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory csv");
        for r in &self.rows {
            w.write_record(r).expect("in-memory csv");
        }
        w.into_inner().expect("in-memory csv")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn read(path: &Path) -> Result<Table> {
        let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::format(path, e.to_string()))?;
        let header = r
            .headers()
            .map_err(|e| HarnessError::format(path, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()
            .map_err(|e| HarnessError::format(path, e.to_string()))?;
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let c = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c].as_str()).collect())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Everything needed to regenerate a command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_digest: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedPlan>,
    pub workers: usize,
    pub wall_time_s: f64,
    pub artifacts: Vec<ArtifactEntry>,
}

/// Collects outputs of one command and writes `<command>.manifest.json`.
pub struct RunRecorder {
    command: String,
    out: PathBuf,
    started: Instant,
    files: Vec<PathBuf>,
    seeds: Vec<SeedPlan>,
}

impl RunRecorder {
    pub fn new(command: &str, out: &Path) -> Self {
        RunRecorder {
            command: command.to_string(),
            out: out.to_path_buf(),
            started: Instant::now(),
            files: Vec::new(),
            seeds: Vec::new(),
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    pub fn add(&mut self, path: PathBuf) {
        if !self.files.contains(&path) {
            self.files.push(path);
        }
    }

    pub fn table(&mut self, rel: &str, table: &Table) -> Result<PathBuf> {
        let p = self.path(rel);
        table.write(&p)?;
        self.add(p.clone());
        Ok(p)
    }

    pub fn seeds(&mut self, plan: SeedPlan) {
        if !self.seeds.contains(&plan) {
            self.seeds.push(plan);
        }
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn finish(self, cfg: &ExperimentConfig) -> Result<PathBuf> {
        let artifacts = self
            .files
            .iter()
            .map(|p| {
                let bytes = std::fs::metadata(p).map_err(|e| HarnessError::io(p, e))?.len();
                Ok(ArtifactEntry {
                    path: p.strip_prefix(&self.out).unwrap_or(p).display().to_string(),
                    sha256: sha256_file(p)?,
                    bytes,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = RunManifest {
            command: self.command.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest: cfg.digest(),
            config: cfg.clone(),
            seeds: self.seeds,
            workers: rayon::current_num_threads(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
            artifacts,
        };
        let path = self.out.join(format!("{}.manifest.json", self.command));
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
