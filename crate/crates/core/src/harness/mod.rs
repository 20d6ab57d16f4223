//! Experiment runner: config loading, dataset handling and report emission.

mod config;
mod experiments;
mod ingest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use config::{
    CompressionSection, DatasetSection, ExperimentConfig, ExperimentId, MarketSection, RecognitionSection,
    RoundTripSection,
};
pub use experiments::{recognize, spearman, LinkPayloads};
pub use ingest::{ingest_csv, ingest_labeled};

use crate::error::{Error, Result};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment_id: ExperimentId,
    pub rng_seed: u64,
    pub config_fingerprint: String,
    pub metrics: BTreeMap<String, f64>,
    /// Output files, relative to the output directory.
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Collects metrics and writes artifacts into one output directory.
pub(crate) struct Outputs {
    dir: PathBuf,
    pub metrics: BTreeMap<String, f64>,
    pub artifacts: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            metrics: BTreeMap::new(),
            artifacts: Vec::new(),
        })
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }
}

/// Independent seed for a named sub-stream of the run.
pub(crate) fn sub_seed(base: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.random()
}

/// Run the experiment described by a JSON config file.
pub fn run(config_path: impl AsRef<Path>) -> Result<RunReport> {
    run_with(config_path, None, None)
}

/// Run with optional output-directory and seed overrides.
pub fn run_with(config_path: impl AsRef<Path>, out: Option<PathBuf>, seed: Option<u64>) -> Result<RunReport> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    if let Some(seed) = seed {
        cfg.rng_seed = seed;
    }
    run_config(&cfg)
}

/// Execute a validated config and write `report.json` next to its artifacts.
pub fn run_config(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut out = Outputs::new(&cfg.output_dir)?;
    match cfg.experiment_id {
        ExperimentId::E1 => experiments::roundtrip(cfg, &mut out)?,
        ExperimentId::E2 => experiments::compression(cfg, &mut out)?,
        ExperimentId::E3 => experiments::recognition(cfg, &mut out)?,
        ExperimentId::E4 => experiments::award_sweep(cfg, &mut out)?,
        ExperimentId::E5 => experiments::risk_appetite(cfg, &mut out)?,
    }
    out.artifacts.push(REPORT_FILE.to_string());
    let report = RunReport {
        experiment_id: cfg.experiment_id,
        rng_seed: cfg.rng_seed,
        config_fingerprint: cfg.fingerprint(),
        metrics: out.metrics,
        artifacts: out.artifacts,
    };
    let path = cfg.output_dir.join(REPORT_FILE);
    fs::write(&path, report.to_json()).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}
