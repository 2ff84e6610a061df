//! Experiment settings from a JSON file and from flags; flags win.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{HarnessError, Result};
use crate::experiments::{DesignName, ExperimentConfig};

/// Every setting optional, named like the command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Overrides {
    pub design: Option<DesignName>,
    pub n0: Option<usize>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    #[serde(rename = "M")]
    pub replicates: Option<usize>,
    pub reps: Option<usize>,
    pub truth_draws: Option<usize>,
    pub seed: Option<u64>,
    pub level: Option<f64>,
    pub z_grid: Option<Vec<f64>>,
    pub workers: Option<usize>,
    pub population_size: Option<usize>,
    pub clusters: Option<usize>,
    pub min_cluster_size: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Fill every unset field of `self` from `lower`.
    pub fn over(self, lower: Overrides) -> Overrides {
        Overrides {
            design: self.design.or(lower.design),
            n0: self.n0.or(lower.n0),
            n1: self.n1.or(lower.n1),
            n2: self.n2.or(lower.n2),
            replicates: self.replicates.or(lower.replicates),
            reps: self.reps.or(lower.reps),
            truth_draws: self.truth_draws.or(lower.truth_draws),
            seed: self.seed.or(lower.seed),
            level: self.level.or(lower.level),
            z_grid: self.z_grid.or(lower.z_grid),
            workers: self.workers.or(lower.workers),
            population_size: self.population_size.or(lower.population_size),
            clusters: self.clusters.or(lower.clusters),
            min_cluster_size: self.min_cluster_size.or(lower.min_cluster_size),
            out: self.out.or(lower.out),
        }
    }

    pub fn apply(&self, base: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            design: self.design.unwrap_or(base.design),
            population_size: self.population_size.unwrap_or(base.population_size),
            clusters: self.clusters.unwrap_or(base.clusters),
            min_cluster_size: self.min_cluster_size.unwrap_or(base.min_cluster_size),
            n0: self.n0.unwrap_or(base.n0),
            n1: self.n1.unwrap_or(base.n1),
            n2: self.n2.unwrap_or(base.n2),
            replicates: self.replicates.unwrap_or(base.replicates),
            reps: self.reps.unwrap_or(base.reps),
            truth_draws: self.truth_draws.unwrap_or(base.truth_draws),
            level: self.level.unwrap_or(base.level),
            seed: self.seed.unwrap_or(base.seed),
            z_grid: self.z_grid.clone().unwrap_or(base.z_grid),
            workers: self.workers.unwrap_or(base.workers),
        }
    }
}

/// `"-0.5,-0.25,0"` -> `[-0.5, -0.25, 0.0]`.
pub fn parse_z_grid(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|_| format!("`{t}` is not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("`{t}` is not finite"))
            }
        })
        .collect()
}
