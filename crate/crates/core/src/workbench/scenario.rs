//! Scenario files.

use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::demand::{split_demand_noisy, split_demand_uniform, ClassDemand, DemandFile, NoiseConfig, TotalDemand};
use crate::equilibrium::SolverConfig;
use crate::error::{Error, Result};
use crate::network::{Clock, Network, NetworkDef};
use crate::pricing::TollConfig;

fn default_ratios() -> Vec<f64> {
    vec![0.0]
}

/// An experiment: network and demand files plus every run parameter.
///
/// File references are relative to the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub network: PathBuf,
    pub demand: PathBuf,
    pub clock: Clock,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toll: Option<TollConfig>,
    #[serde(default = "default_ratios")]
    pub so_ratios: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Upper bound of the SO-share noise amplitude. Plain split when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_beta_max: Option<f64>,
}

impl Scenario {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks everything that does not need the referenced files.
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Config("scenario id is empty".into()));
        }
        self.clock.validate()?;
        self.solver.validate()?;
        if self.so_ratios.is_empty() {
            return Err(Error::Config("so_ratios is empty".into()));
        }
        for &r in &self.so_ratios {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::range("so_ratio", r, 0.0, 1.0));
            }
        }
        if let Some(b) = self.noise_beta_max {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::range("noise_beta_max", b, 0.0, 1.0));
            }
        }
        if let Some(t) = &self.toll {
            t.validate(self.clock.interval_s, self.clock.intervals)?;
        }
        Ok(())
    }

    /// Class demand at `so_ratio`, noisy when configured.
    pub fn split(&self, total: &TotalDemand, so_ratio: f64) -> Result<ClassDemand> {
        match self.noise_beta_max {
            Some(beta_max) => split_demand_noisy(
                total,
                so_ratio,
                &NoiseConfig {
                    seed: self.seed,
                    beta_max,
                },
            ),
            None => split_demand_uniform(total, so_ratio),
        }
    }
}

/// A scenario with its files read, validated and resolved.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub network_def: NetworkDef,
    pub network: Network,
    pub demand_file: DemandFile,
    pub demand: TotalDemand,
}

impl LoadedScenario {
    /// Reads `path` and the files it references. Errors name the stage
    /// (`scenario`, `network` or `demand`) that failed.
    pub fn load(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path, e).in_stage("scenario"))?;
        let scenario = Scenario::from_json_str(&text).map_err(|e| e.in_stage("scenario"))?;
        let base = path.parent().unwrap_or(FsPath::new(""));
        let resolve = |p: &FsPath| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };

        let net_path = resolve(&scenario.network);
        let net_text = std::fs::read_to_string(&net_path)
            .map_err(|e| Error::io(&net_path, e).in_stage("network"))?;
        let network_def = NetworkDef::from_json_str(&net_text).map_err(|e| e.in_stage("network"))?;

        let dem_path = resolve(&scenario.demand);
        let demand_file = DemandFile::from_file(&dem_path).map_err(|e| e.in_stage("demand"))?;
        Self::from_parts(scenario, network_def, demand_file)
    }

    pub fn from_parts(scenario: Scenario, network_def: NetworkDef, demand_file: DemandFile) -> Result<Self> {
        scenario.validate().map_err(|e| e.in_stage("scenario"))?;
        let network = Network::from_def(&network_def).map_err(|e| e.in_stage("network"))?;
        let demand = demand_file
            .resolve(&network, scenario.clock.intervals)
            .map_err(|e| e.in_stage("demand"))?;
        Ok(LoadedScenario {
            scenario,
            network_def,
            network,
            demand_file,
            demand,
        })
    }

    /// SHA-256 over the canonical JSON of the scenario, network and demand.
    pub fn digest(&self) -> Result<String> {
        let mut h = Sha256::new();
        for part in [
            serde_json::to_string(&self.scenario)?,
            serde_json::to_string(&self.network_def)?,
            serde_json::to_string(&self.demand_file)?,
        ] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        Ok(hex::encode(h.finalize()))
    }
}

/// Schema, network and demand checks without running anything.
pub fn validate_scenario_file(path: &FsPath) -> Result<LoadedScenario> {
    LoadedScenario::load(path)
}
