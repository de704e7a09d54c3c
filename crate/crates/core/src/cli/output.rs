//! Run directories, artifact digests and the manifest.
//!
//! Artifacts are written into a hidden staging directory next to the target,
//! which is renamed into place once the manifest is complete and removed if
//! the run fails.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CliError, Command, RunConfig};

pub const OUTPUT_ROOT_ENV: &str = "KBBM_OUTPUT_ROOT";

/// `flag`, else `$KBBM_OUTPUT_ROOT`, else the working directory.
pub fn output_root(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the run directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub value: Option<f64>,
    pub limit: Option<f64>,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= limit`.
    pub fn at_most(name: &str, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self::new(name, value <= limit, Some(value), Some(limit), detail)
    }

    /// Passes when `value >= limit`.
    pub fn at_least(name: &str, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self::new(name, value >= limit, Some(value), Some(limit), detail)
    }

    pub fn flag(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Self::new(name, ok, None, None, detail)
    }

    pub fn info(name: &str, value: Option<f64>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Info,
            value,
            limit: None,
            detail: detail.into(),
        }
    }

    fn new(
        name: &str,
        ok: bool,
        value: Option<f64>,
        limit: Option<f64>,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            status: if ok {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            value,
            limit,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Info => "INFO",
        };
        write!(f, "{tag} {}", self.name)?;
        if let Some(v) = self.value {
            write!(f, " value={v:.6e}")?;
        }
        if let Some(l) = self.limit {
            write!(f, " limit={l:.6e}")?;
        }
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub info: usize,
}

impl Summary {
    pub fn of(checks: &[Check]) -> Self {
        let count = |s| checks.iter().filter(|c| c.status == s).count();
        Self {
            pass: count(CheckStatus::Pass),
            fail: count(CheckStatus::Fail),
            info: count(CheckStatus::Info),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub seed: u64,
    /// The configuration after defaults and overrides.
    pub config: RunConfig,
    pub started_at: String,
    pub finished_at: String,
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
    pub summary: Summary,
    /// Command-specific headline numbers.
    pub results: serde_json::Value,
}

static STAGING_COUNTER: AtomicU64 = AtomicU64::new(0);

/// A run directory under construction. Dropping it without [`promote`]
/// removes everything written so far.
///
/// [`promote`]: Staging::promote
#[derive(Debug)]
pub struct Staging {
    dir: PathBuf,
    target: PathBuf,
    artifacts: Vec<Artifact>,
    promoted: bool,
}

impl Staging {
    /// `output_dir` must be a relative path without `..`.
    pub fn create(root: &Path, output_dir: &str) -> Result<Self, CliError> {
        let rel = Path::new(output_dir);
        let normal = rel.components().all(|c| matches!(c, Component::Normal(_)));
        if output_dir.is_empty() || !normal {
            return Err(CliError::Config(format!(
                "output_dir `{output_dir}` must be a relative path without `..`"
            )));
        }
        let target = root.join(rel);
        let parent = target.parent().unwrap_or(root).to_path_buf();
        fs::create_dir_all(&parent)?;
        let name = target
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let dir = parent.join(format!(
            ".{name}.staging-{}-{}",
            std::process::id(),
            STAGING_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        fs::create_dir(&dir)?;
        Ok(Self {
            dir,
            target,
            artifacts: Vec::new(),
            promoted: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    /// Writes an artifact produced by `fill` and records its digest.
    pub fn write_with(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> io::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        fs::write(self.dir.join(name), &buf)?;
        self.artifacts.push(Artifact {
            path: name.into(),
            sha256: format!("{:x}", Sha256::digest(&buf)),
            bytes: buf.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }

    /// Writes `manifest.json` and moves the directory into place, replacing
    /// an earlier run directory at the same path.
    pub fn promote(mut self, manifest: &RunManifest) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_vec_pretty(manifest).map_err(io::Error::from)?;
        text.push(b'\n');
        fs::write(self.dir.join("manifest.json"), text)?;
        if self.target.exists() {
            if !self.target.join("manifest.json").is_file() {
                return Err(CliError::Io(io::Error::new(
                    io::ErrorKind::AlreadyExists,
                    format!(
                        "{} exists and is not a run directory",
                        self.target.display()
                    ),
                )));
            }
            fs::remove_dir_all(&self.target)?;
        }
        fs::rename(&self.dir, &self.target)?;
        self.promoted = true;
        Ok(self.target.clone())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.promoted {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}
