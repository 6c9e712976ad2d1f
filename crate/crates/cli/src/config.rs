//! Experiment configuration: a flat TOML manifest with CLI overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TargetFamily {
    Ising,
    Bvs,
    Bsl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum KernelChoice {
    /// Single-site flip (Ising spins or selection indicators).
    Flip,
    /// Single-edge add/delete/reverse moves over DAGs.
    Structure,
}

#[derive(Debug, thiserror::Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

/// All knobs of one experiment run. Every key has a default, so a config
/// file only needs to list what it changes; CLI flags override file values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetFamily,
    /// Proposal kernel; `None` picks the target's reference kernel.
    pub kernel: Option<KernelChoice>,
    /// Chain length N (N−1 Metropolis–Hastings steps).
    pub iterations: usize,
    pub chains: usize,
    /// KL checkpoint stride; iteration 1 and N are always included.
    pub stride: usize,
    /// Master seed; per-chain streams are split from it.
    pub seed: u64,
    /// Worker threads for parallel chains; 0 means all cores.
    pub workers: usize,
    pub out_dir: PathBuf,

    pub ising_sites: usize,
    pub ising_beta: f64,
    pub ising_mu: f64,
    pub ising_coupling: f64,
    pub ising_field: f64,

    pub bvs_predictors: usize,
    pub bvs_rows: usize,
    pub bvs_rho: f64,
    /// g-prior scale; `None` uses the unit-information default g = rows.
    pub bvs_g: Option<f64>,
    pub bvs_a: f64,
    pub bvs_b: f64,

    pub bsl_nodes: usize,
    pub bsl_degree: usize,
    pub bsl_rows: usize,

    /// Seed for the synthetic dataset (BVS/BSL), independent of `seed`.
    pub data_seed: u64,
    /// Load this CSV instead of generating data.
    pub data_path: Option<PathBuf>,
    /// Response column name when loading BVS data.
    pub response: Option<String>,
    /// Standardize loaded predictor columns.
    pub standardize: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            target: TargetFamily::Ising,
            kernel: None,
            iterations: 10_000,
            chains: 20,
            stride: 100,
            seed: 0,
            workers: 0,
            out_dir: PathBuf::from("out"),
            ising_sites: 15,
            ising_beta: 0.5,
            ising_mu: 1.0,
            ising_coupling: 1.0,
            ising_field: 0.1,
            bvs_predictors: 10,
            bvs_rows: 200,
            bvs_rho: 0.5,
            bvs_g: None,
            bvs_a: 3.0,
            bvs_b: 1.0,
            bsl_nodes: 5,
            bsl_degree: 2,
            bsl_rows: 200,
            data_seed: 0,
            data_path: None,
            response: None,
            standardize: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(e.to_string()))
    }

    /// The kernel actually used: explicit choice, or the target's
    /// reference kernel.
    pub fn resolved_kernel(&self) -> KernelChoice {
        self.kernel.unwrap_or(match self.target {
            TargetFamily::Ising | TargetFamily::Bvs => KernelChoice::Flip,
            TargetFamily::Bsl => KernelChoice::Structure,
        })
    }

    pub fn resolved_g(&self) -> f64 {
        self.bvs_g.unwrap_or(self.bvs_rows as f64)
    }

    /// Fills in derived defaults so the serialized manifest is
    /// self-contained.
    pub fn resolved(&self) -> Self {
        let mut resolved = self.clone();
        resolved.kernel = Some(self.resolved_kernel());
        if resolved.target == TargetFamily::Bvs {
            resolved.bvs_g = Some(self.resolved_g());
        }
        resolved
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.iterations == 0 {
            return Err(ConfigError("iterations must be at least 1".into()));
        }
        if self.chains == 0 {
            return Err(ConfigError("chains must be at least 1".into()));
        }
        if self.stride == 0 {
            return Err(ConfigError("stride must be at least 1".into()));
        }
        match (self.target, self.resolved_kernel()) {
            (TargetFamily::Bsl, KernelChoice::Flip) => {
                return Err(ConfigError("the flip kernel does not apply to DAG targets".into()))
            }
            (TargetFamily::Ising | TargetFamily::Bvs, KernelChoice::Structure) => {
                return Err(ConfigError(
                    "the structure kernel only applies to the bsl target".into(),
                ))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn manifest(&self) -> String {
        toml::to_string(&self.resolved()).expect("config serializes")
    }
}

/// Checkpoint iterations: 1, every multiple of the stride, and N.
pub fn checkpoint_schedule(iterations: usize, stride: usize) -> Vec<usize> {
    let mut points = vec![1];
    let mut t = stride;
    while t < iterations {
        if t > 1 {
            points.push(t);
        }
        t += stride;
    }
    if iterations > 1 {
        points.push(iterations);
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let config = ExperimentConfig::default();
        let text = config.manifest();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.manifest(), text);
    }

    #[test]
    fn file_values_override_defaults() {
        let parsed: ExperimentConfig =
            toml::from_str("target = \"bvs\"\nchains = 3\nseed = 9\n").unwrap();
        assert_eq!(parsed.target, TargetFamily::Bvs);
        assert_eq!(parsed.chains, 3);
        assert_eq!(parsed.seed, 9);
        assert_eq!(parsed.iterations, 10_000);
        assert_eq!(parsed.resolved_kernel(), KernelChoice::Flip);
        assert_eq!(parsed.resolved_g(), 200.0);
    }

    #[test]
    fn kernel_target_mismatch_is_rejected() {
        let mut config = ExperimentConfig::default();
        config.target = TargetFamily::Bsl;
        config.kernel = Some(KernelChoice::Flip);
        assert!(config.validate().is_err());
        config.kernel = None;
        assert!(config.validate().is_ok());
        assert_eq!(config.resolved_kernel(), KernelChoice::Structure);
    }

    #[test]
    fn checkpoint_schedule_includes_first_and_last() {
        assert_eq!(checkpoint_schedule(1, 100), vec![1]);
        assert_eq!(checkpoint_schedule(10, 3), vec![1, 3, 6, 9, 10]);
        assert_eq!(checkpoint_schedule(300, 100), vec![1, 100, 200, 300]);
        assert_eq!(checkpoint_schedule(5, 100), vec![1, 5]);
    }
}
