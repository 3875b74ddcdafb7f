//! Scenarios, the bundled test network, and run orchestration.

mod nguyen;
mod run;
mod scenario;
mod states;

use std::path::{Path as FsPath, PathBuf};

pub use nguyen::{build_nguyen, NguyenConfig, NGUYEN_ODS, NGUYEN_ZONE};
pub use run::{
    digest_map, execute_scenario, nfd_from_run_dir, nfd_links, ratio_dir, run_scenario, FileDigest,
    PricingSetup, RatioRun, RunManifest, RunOptions, ScenarioRun,
};
pub use scenario::{validate_scenario_file, LoadedScenario, Scenario};
pub use states::{read_link_states, write_link_states};

use crate::equilibrium::SolverConfig;
use crate::error::{Error, Result};
use crate::pricing::TollConfig;

/// Zone density setpoint of the tolled Nguyen variant, veh/km.
///
/// The three-interval pulse makes zone flow and density peak in the same
/// interval, so the untolled NFD never shows a falling branch and the
/// estimate would sit at the density peak. The setpoint is frozen below it.
pub const NGUYEN_TOLLED_K_CR: f64 = 12.0;

/// The SO-ratio sweep of the bundled scenario.
pub const NGUYEN_SWEEP: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

/// Untolled sweep scenario over the default Nguyen network.
pub fn nguyen_scenario() -> Scenario {
    let (_, _, clock) = build_nguyen(&NguyenConfig::default());
    Scenario {
        id: "nguyen".into(),
        network: "network.json".into(),
        demand: "demand.json".into(),
        clock,
        solver: SolverConfig::default(),
        toll: None,
        so_ratios: NGUYEN_SWEEP.to_vec(),
        seed: 0,
        noise_beta_max: None,
    }
}

/// The same network and demand, all UE, with pricing over the zone.
pub fn nguyen_tolled_scenario() -> Scenario {
    Scenario {
        id: "nguyen_tolled".into(),
        toll: Some(TollConfig {
            k_cr: Some(NGUYEN_TOLLED_K_CR),
            ..TollConfig::default()
        }),
        so_ratios: vec![0.0],
        ..nguyen_scenario()
    }
}

/// The bundled scenario in memory.
pub fn load_nguyen(scenario: Scenario) -> Result<LoadedScenario> {
    let (def, demand, _) = build_nguyen(&NguyenConfig::default());
    LoadedScenario::from_parts(scenario, def, demand)
}

/// Writes `network.json`, `demand.json`, `scenario.json` and
/// `scenario_tolled.json` into `dir`.
pub fn write_nguyen_bundle(dir: &FsPath) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (def, demand, _) = build_nguyen(&NguyenConfig::default());
    let files = [
        ("network.json", def.to_json_string()?),
        ("demand.json", demand.to_json_string()?),
        ("scenario.json", nguyen_scenario().to_json_string()?),
        ("scenario_tolled.json", nguyen_tolled_scenario().to_json_string()?),
    ];
    let mut out = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundle_loads_back() {
        let dir = tempfile::tempdir().unwrap();
        write_nguyen_bundle(dir.path()).unwrap();
        let a = LoadedScenario::load(&dir.path().join("scenario.json")).unwrap();
        assert_eq!(a.network.links().len(), 19);
        assert_eq!(a.scenario.so_ratios.len(), 6);
        let b = LoadedScenario::load(&dir.path().join("scenario_tolled.json")).unwrap();
        assert_eq!(b.scenario.toll.unwrap().k_cr, Some(NGUYEN_TOLLED_K_CR));
        assert_eq!(a.digest().unwrap(), load_nguyen(nguyen_scenario()).unwrap().digest().unwrap());
    }
}
