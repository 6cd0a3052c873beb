use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Version of the CSV layouts written by the harness.
pub const SCHEMA_VERSION: u32 = 1;

/// Invalid or unreadable configuration. Always maps to exit status 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Budgets 2.5k to 80k, truth depth 20.
    Desk,
    /// Budgets 10^5 to 1.25 x 10^6, truth depth 22.
    PaperScale,
}

impl std::str::FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper-scale" => Ok(Preset::PaperScale),
            other => Err(ConfigError(format!("unknown preset `{other}` (expected desk or paper-scale)"))),
        }
    }
}

/// Parameters of a regret experiment. Field names double as the JSON keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "T_grid")]
    pub t_grid: Vec<u64>,
    pub sigma2: f64,
    pub path_seeds: u64,
    pub noise_seeds_per_path: u64,
    pub truth_depth: u32,
    pub delta_override: Option<f64>,
    pub parallelism: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(Preset::Desk)
    }
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let (t_grid, truth_depth) = match preset {
            Preset::Desk => (vec![2_500, 5_000, 10_000, 20_000, 40_000, 80_000], 20),
            Preset::PaperScale => (vec![100_000, 250_000, 500_000, 750_000, 1_000_000, 1_250_000], 22),
        };
        Self {
            t_grid,
            sigma2: 0.5,
            path_seeds: 20,
            noise_seeds_per_path: 10,
            truth_depth,
            delta_override: None,
            parallelism: 1,
            output_dir: PathBuf::from("out"),
        }
    }

    /// Preset values overlaid with the keys present in a JSON file.
    pub fn load(path: &Path, preset: Preset) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, preset)
    }

    pub fn from_json(text: &str, preset: Preset) -> Result<Self, ConfigError> {
        let base = serde_json::to_value(Self::preset(preset)).expect("config serializes");
        let overlay: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid JSON: {e}")))?;
        let serde_json::Value::Object(fields) = overlay else {
            return Err(ConfigError("config must be a JSON object".into()));
        };
        let mut merged = base;
        for (k, v) in fields {
            merged[k] = v;
        }
        serde_json::from_value(merged).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError(m));
        if self.t_grid.is_empty() {
            return bad("T_grid is empty".into());
        }
        if self.t_grid[0] == 0 || self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("T_grid must be positive and strictly increasing, got {:?}", self.t_grid));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return bad(format!("sigma2 must be finite and >= 0, got {}", self.sigma2));
        }
        if self.path_seeds == 0 || self.noise_seeds_per_path == 0 || self.parallelism == 0 {
            return bad("path_seeds, noise_seeds_per_path and parallelism must be >= 1".into());
        }
        if !(1..=bmopt::MAX_GRID_DEPTH).contains(&self.truth_depth) {
            return bad(format!("truth_depth must lie in 1..={}", bmopt::MAX_GRID_DEPTH));
        }
        if let Some(d) = self.delta_override {
            if !(d > 0.0 && d < 1.0) {
                return bad(format!("delta_override must lie in (0, 1), got {d}"));
            }
        }
        Ok(())
    }

    /// SHA-256 over every setting that can change the numbers: the config
    /// without `output_dir` and `parallelism`, plus the base seed.
    pub fn hash(&self, base_seed: u64) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        let map = value.as_object_mut().expect("object");
        map.remove("output_dir");
        map.remove("parallelism");
        map.insert("base_seed".into(), base_seed.into());
        // serde_json maps are sorted by key, so the encoding is canonical.
        let bytes = serde_json::to_vec(&value).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
