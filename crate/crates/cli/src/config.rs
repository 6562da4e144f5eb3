//! `--config` file: JSON object whose fields back any flag left unset.

use std::path::Path;

use serde::Deserialize;
use stoprule::check::CheckConfig;
use stoprule::{EngineConfig, SimConfig};

use crate::report::{CliError, Format};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub format: Option<Format>,
    pub grid_points: Option<usize>,
    pub tail_epsilon: Option<f64>,
    pub threshold_tolerance: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub parallel_chunks: Option<usize>,
    pub check_instances: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn engine(&self, grid: Option<usize>) -> EngineConfig {
        let d = EngineConfig::default();
        EngineConfig {
            grid_points: grid.or(self.grid_points).unwrap_or(d.grid_points),
            tail_epsilon: self.tail_epsilon.unwrap_or(d.tail_epsilon),
            threshold_tolerance: self.threshold_tolerance.unwrap_or(d.threshold_tolerance),
        }
    }

    pub fn simulation(&self, trials: Option<u64>, seed: Option<u64>) -> SimConfig {
        let d = SimConfig::default();
        SimConfig {
            trials: trials.or(self.trials).unwrap_or(d.trials),
            seed: seed.or(self.seed).unwrap_or(d.seed),
            parallel_chunks: self.parallel_chunks.unwrap_or(d.parallel_chunks),
        }
    }

    pub fn check(&self, seed: Option<u64>, instances: Option<usize>, grid: Option<usize>) -> CheckConfig {
        let d = CheckConfig::default();
        CheckConfig {
            seed: seed.or(self.seed).unwrap_or(d.seed),
            instances: instances.or(self.check_instances).unwrap_or(d.instances),
            engine: self.engine(grid),
            ..d
        }
    }
}
