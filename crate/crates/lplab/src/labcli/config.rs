//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::kernel::FunctionalK;
use crate::linproc::ProcessConfig;
use crate::scaling::ThetaConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Smallest replicate count for which KS verdicts are issued.
pub const MIN_REPLICATES: usize = 100;

fn default_t_grid() -> Vec<f64> {
    vec![0.5, 1.0]
}

/// Default number of replicates carrying the surrogate sums.
pub const DEFAULT_SURROGATE_REPLICATES: usize = 200;

fn default_ks_threshold() -> f64 {
    0.08
}

fn default_truncation_tol() -> f64 {
    1e-3
}

/// One experiment: a process, a functional, an `N` grid and Monte Carlo settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub id: String,
    pub process: ProcessConfig,
    pub kernel: FunctionalK,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    /// Replicates (the first ones) on which the surrogate sums are evaluated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrogate_replicates: Option<usize>,
    #[serde(default = "default_ks_threshold")]
    pub ks_threshold: f64,
    /// Bound on the neglected coefficient mass, in units of the innovation cutoff `x₀`.
    #[serde(default = "default_truncation_tol")]
    pub truncation_tol: f64,
    /// Variance-ratio band checked at the largest `N` (Brownian limits only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_ratio_band: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| LabError::config(format!("config is not valid JSON: {e}")))?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => return Err(LabError::config(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}"))),
            None => return Err(LabError::config("missing required field 'schema_version'")),
        }
        let cfg: ExperimentConfig =
            serde_json::from_value(value).map_err(|e| LabError::config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() || self.id.contains([',', '\n', '"']) {
            return Err(LabError::config("id must be non-empty and free of commas, quotes and newlines"));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[1] <= w[0]) || self.n_grid[0] < 2 {
            return Err(LabError::config("n_grid must be strictly increasing with entries ≥ 2"));
        }
        if self.replicates < MIN_REPLICATES {
            return Err(LabError::config(format!("KS verdicts need at least {MIN_REPLICATES} replicates")));
        }
        if self.t_grid.len() != 2 || !(self.t_grid[0] > 0.0 && self.t_grid[0] < self.t_grid[1] && self.t_grid[1] == 1.0) {
            return Err(LabError::config("t_grid must be [t, 1] with 0 < t < 1"));
        }
        if self.surrogate_replicates.is_some_and(|s| s > self.replicates || s < 2) {
            return Err(LabError::config("surrogate_replicates must lie in [2, replicates]"));
        }
        if !(self.ks_threshold > 0.0 && self.ks_threshold < 1.0) {
            return Err(LabError::config("ks_threshold must lie in (0, 1)"));
        }
        if self.truncation_tol.is_nan() || self.truncation_tol <= 0.0 {
            return Err(LabError::config("truncation_tol must be positive"));
        }
        if let Some([lo, hi]) = self.var_ratio_band {
            if !(lo > 0.0 && lo < hi) {
                return Err(LabError::config("var_ratio_band must satisfy 0 < lo < hi"));
            }
        }
        if self.process.truncation == Some(0) {
            return Err(LabError::config("truncation horizon must be at least 1"));
        }
        Ok(())
    }

    pub fn surrogate_count(&self) -> usize {
        self.surrogate_replicates.unwrap_or(DEFAULT_SURROGATE_REPLICATES.min(self.replicates))
    }

    /// Settings for `θ²`, seeded from the experiment seed unless given explicitly.
    pub fn theta_config(&self) -> ThetaConfig {
        self.theta.clone().unwrap_or(ThetaConfig { seed: self.seed, ..ThetaConfig::default() })
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> [u8; 32] {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).into()
    }

    pub fn hash_hex(&self) -> String {
        hex(&self.hash())
    }

    /// Hash identifying the paths of one grid point, for the path cache.
    pub fn path_hash(&self, n: usize) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.process).expect("process serializes"));
        h.update(self.seed.to_le_bytes());
        h.update((n as u64).to_le_bytes());
        h.update((self.replicates as u64).to_le_bytes());
        h.finalize().into()
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub const SAMPLE: &str = r#"{
        "schema_version": 1,
        "id": "demo",
        "process": {
            "beta": 1.0,
            "innovations": {"alpha": 1.5, "sigma1": 0.5, "sigma2": 0.5, "centering": "mean_zero"}
        },
        "kernel": {"kind": "odd_bump"},
        "n_grid": [256, 512],
        "replicates": 100,
        "seed": 7
    }"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_json(SAMPLE).unwrap();
        assert_eq!(c.t_grid, vec![0.5, 1.0]);
        assert_eq!(c.surrogate_count(), 100);
        assert_eq!(c.theta_config().seed, 7);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_versions() {
        let extra = SAMPLE.replace("\"seed\": 7", "\"seed\": 7, \"colour\": 1");
        assert!(matches!(ExperimentConfig::from_json(&extra), Err(LabError::Config(_))));
        let old = SAMPLE.replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(ExperimentConfig::from_json(&old).is_err());
        let none = SAMPLE.replace("\"schema_version\": 1,", "");
        assert!(ExperimentConfig::from_json(&none).is_err());
        let grid = SAMPLE.replace("[256, 512]", "[512, 256]");
        assert!(ExperimentConfig::from_json(&grid).is_err());
        let few = SAMPLE.replace("\"replicates\": 100", "\"replicates\": 10");
        assert!(ExperimentConfig::from_json(&few).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::from_json(SAMPLE).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 8;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash_hex().len(), 64);
    }
}
