//! Atomic output commits and the per-run manifest.
//!
//! Output files are staged next to their destination and renamed into
//! place, so readers only ever see a complete file. The manifest is
//! written last and records digests of what actually landed on disk.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{CliError, Result, RunConfig};

#[derive(Serialize)]
struct OutputDigest {
    path: String,
    sha256: String,
    bytes: u64,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: &'a str,
    seed: u64,
    workers: usize,
    duration_seconds: f64,
    parameters: &'a toml::Table,
    outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn stage_and_rename(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

/// Atomically writes one output file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    stage_and_rename(path, bytes)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::Runtime)
}

/// Manifest lands next to the data file as `<stem>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    output.with_file_name(format!("{stem}.manifest.json"))
}

/// Commits the data file, then the manifest describing it. Returns both
/// paths. A failure before the first rename leaves nothing behind.
pub fn write_run(
    cfg: &RunConfig,
    workers: usize,
    duration: Duration,
    data: &[u8],
) -> Result<(PathBuf, PathBuf)> {
    write_atomic(&cfg.output_path, data)?;

    let data_name = cfg
        .output_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| cfg.output_path.display().to_string());
    let manifest = RunManifest {
        tool: "worklock",
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment,
        seed: cfg.seed,
        workers,
        duration_seconds: duration.as_secs_f64(),
        parameters: &cfg.parameters,
        outputs: vec![OutputDigest {
            path: data_name,
            sha256: sha256_hex(data),
            bytes: data.len() as u64,
        }],
    };
    let mut body = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("could not encode manifest: {e}")))?;
    body.push(b'\n');

    let manifest_file = manifest_path(&cfg.output_path);
    write_atomic(&manifest_file, &body)?;
    Ok((cfg.output_path.clone(), manifest_file))
}
