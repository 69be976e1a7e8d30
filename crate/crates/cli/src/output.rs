use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use pamlab_core::io::csv_bytes;

pub type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Axis of a plot: a CSV column and whether it is drawn on a log scale.
#[derive(Debug, Clone, Serialize)]
pub struct Axis {
    pub column: &'static str,
    pub log: bool,
}

/// Declarative plot over one CSV file: one curve per `y` column, optionally
/// one curve per distinct value of `group`.
#[derive(Debug, Clone, Serialize)]
pub struct PlotSpec {
    pub file: &'static str,
    pub title: &'static str,
    pub x: Axis,
    pub y: Vec<Axis>,
    pub yerr: Option<&'static str>,
    pub group: Option<&'static str>,
}

impl PlotSpec {
    pub fn new(file: &'static str, title: &'static str, x: Axis, y: Vec<Axis>) -> Self {
        Self { file, title, x, y, yerr: None, group: None }
    }

    pub fn yerr(mut self, column: &'static str) -> Self {
        self.yerr = Some(column);
        self
    }

    pub fn group(mut self, column: &'static str) -> Self {
        self.group = Some(column);
        self
    }
}

pub fn lin(column: &'static str) -> Axis {
    Axis { column, log: false }
}

pub fn log(column: &'static str) -> Axis {
    Axis { column, log: true }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Output of one subcommand, written into a staging directory that replaces
/// `<out>/<subcommand>` only once every artifact is complete.
pub struct Staging {
    dir: PathBuf,
    target: PathBuf,
    pub artifacts: Vec<ArtifactEntry>,
    pub plots: Vec<PlotSpec>,
    pub checks: Vec<CheckOutcome>,
    committed: bool,
}

impl Staging {
    pub fn new(out: &Path, subcommand: &str) -> CliResult<Self> {
        fs::create_dir_all(out)?;
        let dir = out.join(format!(".{subcommand}.partial"));
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir(&dir)?;
        Ok(Self {
            dir,
            target: out.join(subcommand),
            artifacts: Vec::new(),
            plots: Vec::new(),
            checks: Vec::new(),
            committed: false,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        fs::write(self.path(name), bytes)?;
        self.artifacts.push(ArtifactEntry { file: name.to_string(), bytes: bytes.len(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn csv<S: Serialize>(&mut self, name: &str, rows: &[S]) -> CliResult<()> {
        let bytes = csv_bytes(rows)?;
        self.bytes(name, &bytes)
    }

    pub fn json<S: Serialize>(&mut self, name: &str, value: &S) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.bytes(name, &bytes)
    }

    /// Lists files a core exporter wrote into the staging directory.
    pub fn adopt(&mut self, written: (PathBuf, PathBuf)) -> CliResult<()> {
        for p in [written.0, written.1] {
            let bytes = fs::read(&p)?;
            let file = p.file_name().expect("written file has a name").to_string_lossy().into_owned();
            self.artifacts.push(ArtifactEntry { file, bytes: bytes.len(), sha256: sha256_hex(&bytes) });
        }
        Ok(())
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(CheckOutcome { name: name.to_string(), pass, detail });
    }

    /// Moves the staging directory into place, replacing a previous run.
    pub fn commit(mut self) -> CliResult<PathBuf> {
        if self.target.exists() {
            fs::remove_dir_all(&self.target)?;
        }
        fs::rename(&self.dir, &self.target)?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}
