//! Config-driven experiment runs.
//!
//! A run validates its [`ExperimentConfig`] completely, computes every
//! output in memory and only then writes the data files followed by
//! `manifest.json`. Data files depend only on the config: all randomness is
//! derived from `seed` per sample, so the worker count does not matter.

mod audit;
mod config;
mod runs;
mod samplers;

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use audit::{audit_islands, IslandAudit, AUDIT_DEFAULT_LADDER, AUDIT_DEFAULT_MAX_VERTICES, AUDIT_DEFAULT_RADIUS};
pub use config::{apply_overrides, load_config, Experiment, ExperimentConfig, DEFAULT_OFFSPRING, DEFAULT_SIZE_CAP, DEFAULT_VERTEX_CAP};
pub use runs::{
    binary_norm, ct_rows, induced_return_audit, norm_bound, norm_samples, CtRow, InducedReturnAudit, NormSample,
    BAD_EVENT_DEFAULT_RADIUS, BOUND_SLACK, CT_DEFAULT_RADIUS, INDUCED_SLACK, NORM_DEFAULT_RADIUS, NORM_HOST_MARGIN,
    NORM_ITERATIONS, QUALIFY_ATTEMPTS,
};
pub use samplers::{random_connected_graph, random_forest_host};

use crate::branching::BranchingError;
use crate::ergraph::ErError;
use crate::induced_walk::InducedError;
use crate::isoperimetry::IsoError;
use crate::spectra::SpectraError;
use crate::walks::WalkError;

/// Version string recorded in manifests.
pub const VERSION: &str = env!("GWLAB_VERSION");

/// A config problem, located by its field path.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Branching(#[from] BranchingError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Iso(#[from] IsoError),
    #[error(transparent)]
    Induced(#[from] InducedError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Er(#[from] ErError),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

impl RunError {
    /// Process exit status: 2 for config errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// One data file produced by a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

impl OutputFile {
    pub fn new(name: &str, contents: String) -> Self {
        debug_assert!(contents.ends_with('\n'));
        Self { name: name.to_string(), contents }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: usize,
    /// Hex fingerprint of the file contents.
    pub fingerprint: String,
}

/// Written next to the data files as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: Experiment,
    pub version: String,
    pub seed: u64,
    /// The config document after `--set` overrides, as given.
    pub config: serde_json::Value,
    pub outputs: Vec<ManifestEntry>,
    pub wall_time_seconds: f64,
}

/// Validates `config` for `kind` and computes the outputs without touching disk.
pub fn run(kind: Experiment, config: &ExperimentConfig) -> Result<Vec<OutputFile>, RunError> {
    config.validate(kind)?;
    match kind {
        Experiment::ReturnProb => runs::return_prob(config),
        Experiment::CtReturn => runs::ct_return(config),
        Experiment::LifshitsExtinct => runs::lifshits_extinct(config),
        Experiment::Dos => runs::dos(config),
        Experiment::AtomZero => runs::atom_zero(config),
        Experiment::IslandsAudit => audit::islands_audit(config),
        Experiment::NormAudit => runs::norm_audit(config),
        Experiment::BadEvent => runs::bad_event(config),
    }
}

/// Runs `kind` and writes its data files and manifest into `out`.
pub fn run_to_dir(
    kind: Experiment,
    config: &ExperimentConfig,
    echo: serde_json::Value,
    out: &Path,
) -> Result<Manifest, RunError> {
    let start = Instant::now();
    let files = run(kind, config)?;
    let io = |path: &Path, e: std::io::Error| RunError::Io { path: path.display().to_string(), message: e.to_string() };
    std::fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let mut outputs = Vec::with_capacity(files.len());
    for f in &files {
        let path = out.join(&f.name);
        std::fs::write(&path, &f.contents).map_err(|e| io(&path, e))?;
        outputs.push(ManifestEntry {
            file: f.name.clone(),
            bytes: f.contents.len(),
            fingerprint: format!("{:016x}", crate::seed::fingerprint(f.contents.as_bytes())),
        });
    }
    let manifest = Manifest {
        experiment: kind,
        version: VERSION.to_string(),
        seed: config.seed,
        config: echo,
        outputs,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let path = out.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| io(&path, e))?;
    Ok(manifest)
}
