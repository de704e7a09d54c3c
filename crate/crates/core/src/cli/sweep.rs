//! Parameter sweeps: one run per point of the cross product of `--vary`
//! lists, each in `<output_dir>/run_NNN`, run in parallel.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{execute, parse_config, CliError, Command};

/// Splits `key=v1,v2,...` into the key and its values.
pub fn parse_vary(arg: &str) -> Result<(String, Vec<String>), CliError> {
    let (key, values) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--vary `{arg}` is not key=v1,v2,...")))?;
    let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
    if key.trim().is_empty() || values.iter().any(String::is_empty) {
        return Err(CliError::Config(format!(
            "--vary `{arg}` has an empty key or value"
        )));
    }
    Ok((key.trim().to_string(), values))
}

/// Cross product of the lists as `key=value` override sets, the last key
/// varying fastest.
pub fn expand_grid(varies: &[(String, Vec<String>)]) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for (key, values) in varies {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(format!("{key}={v}"));
                    p
                })
            })
            .collect();
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub index: usize,
    pub overrides: Vec<String>,
    pub output_dir: String,
    /// `ok`, `check_failed`, `config_error` or `runtime_error`.
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub command: Command,
    pub vary: Vec<String>,
    pub entries: Vec<SweepEntry>,
}

impl SweepReport {
    /// The most severe exit code among the runs.
    pub fn exit_code(&self) -> i32 {
        self.entries.iter().map(|e| e.exit_code).max().unwrap_or(0)
    }
}

/// Runs `command` once per sweep point and writes `sweep.json` into the base
/// output directory. Individual run failures are recorded, not propagated;
/// an unparsable base config or `--vary` list is an error.
pub fn run_sweep(
    config_text: &str,
    base_overrides: &[String],
    vary: &[String],
    command: Command,
    root: &Path,
) -> Result<SweepReport, CliError> {
    let base = parse_config(config_text, base_overrides)?;
    if root.join(&base.output_dir).join("manifest.json").exists() {
        return Err(CliError::Config(format!(
            "output_dir `{}` holds a single run; pick another for the sweep",
            base.output_dir
        )));
    }
    let varies = vary
        .iter()
        .map(|v| parse_vary(v))
        .collect::<Result<Vec<_>, _>>()?;
    let points = expand_grid(&varies);

    let entries: Vec<SweepEntry> = points
        .into_par_iter()
        .enumerate()
        .map(|(index, point)| {
            let output_dir = format!("{}/run_{index:03}", base.output_dir);
            let mut overrides = base_overrides.to_vec();
            overrides.extend(point.iter().cloned());
            let result = parse_config(config_text, &overrides).and_then(|mut cfg| {
                cfg.output_dir = output_dir.clone();
                execute(command, &cfg, root)
            });
            let (status, exit_code, error) = match result {
                Ok(o) if o.exit_code() == 0 => ("ok", 0, None),
                Ok(o) => ("check_failed", o.exit_code(), None),
                Err(e @ CliError::Config(_)) => {
                    ("config_error", e.exit_code(), Some(e.to_string()))
                }
                Err(e) => ("runtime_error", e.exit_code(), Some(e.to_string())),
            };
            SweepEntry {
                index,
                overrides: point,
                output_dir,
                status: status.into(),
                exit_code,
                error,
            }
        })
        .collect();

    let report = SweepReport {
        command,
        vary: vary.to_vec(),
        entries,
    };
    let dir = root.join(&base.output_dir);
    std::fs::create_dir_all(&dir)?;
    let mut text = serde_json::to_vec_pretty(&report).map_err(std::io::Error::from)?;
    text.push(b'\n');
    std::fs::write(dir.join("sweep.json"), text)?;
    Ok(report)
}
