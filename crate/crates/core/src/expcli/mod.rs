//! Experiment orchestration behind the `qwalk` binary.
//!
//! Each command builds one lab from an [`ExperimentConfig`], runs its
//! acquisition sequentially, and returns its artifacts in memory. Writing
//! adds a `manifest.json` listing every file with its SHA-256; verifying
//! recomputes the artifacts and compares them against that manifest.

mod commands;
mod config;
mod output;

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

pub use commands::{
    build_lab, focus_cmd, hom_scan_cmd, measure_tm_cmd, phase_grid_cmd, ttm_matrix_cmd, FocusConfigSummary,
    FocusSummary, HomCurveSummary, HomScanSummary, PhaseGridSummary, Run, TmReport, TtmMatrixSummary, HOM_SETTINGS,
};
pub use config::{parse_noise, ExperimentConfig, Overrides};
pub use output::{encode_pgm, fmt_f64, pgm_artifacts, sha256_hex, Artifact, Csv, PgmScale};

use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    MeasureTm,
    TtmMatrix,
    Focus,
    PhaseGrid,
    HomScan,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::MeasureTm,
        Command::TtmMatrix,
        Command::Focus,
        Command::PhaseGrid,
        Command::HomScan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::MeasureTm => "measure-tm",
            Command::TtmMatrix => "ttm-matrix",
            Command::Focus => "focus",
            Command::PhaseGrid => "phase-grid",
            Command::HomScan => "hom-scan",
        }
    }

    /// Runs the command without touching the file system.
    pub fn artifacts(self, cfg: &ExperimentConfig) -> Result<Vec<Artifact>> {
        Ok(match self {
            Command::MeasureTm => measure_tm_cmd(cfg)?.artifacts,
            Command::TtmMatrix => ttm_matrix_cmd(cfg)?.artifacts,
            Command::Focus => focus_cmd(cfg)?.artifacts,
            Command::PhaseGrid => phase_grid_cmd(cfg)?.artifacts,
            Command::HomScan => hom_scan_cmd(cfg)?.artifacts,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub fiber_seed: u64,
    pub detector_seed: u64,
    pub config: std::collections::BTreeMap<String, String>,
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
    pub files: Vec<FileEntry>,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn entries(artifacts: &[Artifact]) -> Vec<FileEntry> {
    artifacts
        .iter()
        .map(|a| FileEntry {
            name: a.name.clone(),
            sha256: a.sha256(),
            bytes: a.bytes.len(),
        })
        .collect()
}

/// Runs `command` and writes its artifacts and manifest to `cfg.out_dir`.
pub fn run_and_write(command: Command, cfg: &ExperimentConfig) -> Result<RunManifest> {
    let started = unix_now();
    let artifacts = command.artifacts(cfg)?;
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for a in &artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.bytes).map_err(|e| Error::io(&path, e))?;
    }
    let manifest = RunManifest {
        command: command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        fiber_seed: cfg.fiber.seed,
        detector_seed: cfg.detector.seed,
        config: cfg.echo(),
        started_unix_s: started,
        finished_unix_s: unix_now(),
        files: entries(&artifacts),
    };
    let path = dir.join(MANIFEST_NAME);
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("serializable manifest");
    bytes.push(b'\n');
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.clone(),
        reason: e.to_string(),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub checked: usize,
    /// Files whose recomputed, recorded, or on-disk checksums disagree.
    pub mismatched: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.mismatched.is_empty()
    }
}

/// Recomputes every artifact and compares it with the manifest in
/// `cfg.out_dir` and with the files on disk.
pub fn verify(command: Command, cfg: &ExperimentConfig) -> Result<VerifyReport> {
    let manifest = read_manifest(&cfg.out_dir)?;
    if manifest.command != command.name() {
        return Err(Error::Config(format!(
            "manifest was written by '{}', not '{}'",
            manifest.command,
            command.name()
        )));
    }
    let fresh = entries(&command.artifacts(cfg)?);
    let mut report = VerifyReport::default();
    let mut names: Vec<&String> = fresh.iter().map(|e| &e.name).collect();
    for recorded in &manifest.files {
        if !names.contains(&&recorded.name) {
            names.push(&recorded.name);
        }
    }
    for name in names {
        report.checked += 1;
        let a = fresh.iter().find(|e| &e.name == name).map(|e| &e.sha256);
        let b = manifest.files.iter().find(|e| &e.name == name).map(|e| &e.sha256);
        let on_disk = fs::read(cfg.out_dir.join(name)).ok().map(|bytes| sha256_hex(&bytes));
        if a.is_none() || a != b || a != on_disk.as_ref() {
            report.mismatched.push(name.clone());
        }
    }
    Ok(report)
}

/// Process exit status for an error: 2 for configuration problems, 3 for
/// physically degenerate targets, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InsufficientSteps(_) => 2,
        e if e.is_physics_degenerate() => 3,
        _ => 1,
    }
}

/// Loads the config file (if any) and applies command-line overrides.
pub fn resolve_config(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p).map_err(|e| match e {
            Error::Io { path, source } => Error::Config(format!("{}: {source}", path.display())),
            other => other,
        })?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(overrides);
    cfg.validate()?;
    Ok(cfg)
}
