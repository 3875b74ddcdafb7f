//! Scenario execution and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    benefit_cost_ratio, class_zone_summary, hysteresis_area, window_mean_density, write_metrics,
    ScenarioMetrics,
};
use crate::equilibrium::{solve_mixed_equilibrium, write_iteration_log, EquilibriumOutcome};
use crate::error::{Error, Result};
use crate::flow::write_trajectories;
use crate::network::{LinkIdx, Network};
use crate::pricing::{
    estimate_critical_density, nfd_point, nfd_series, price_network, write_nfd, write_omega,
    write_toll_schedule, BilevelOutcome, CriticalDensity, NfdPoint, TollSchedule,
};
use crate::workbench::scenario::LoadedScenario;
use crate::workbench::states::{read_link_states, write_link_states};

/// Switches that do not change the numbers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Run the pricing loop when the scenario has a toll section.
    pub pricing: bool,
    /// Dump per-vehicle trajectories next to each run.
    pub trajectories: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario_id: String,
    pub scenario_sha256: String,
    pub tool_version: String,
    pub seed: u64,
    pub files: Vec<FileDigest>,
}

impl RunManifest {
    pub fn digest_of(&self, path: &str) -> Option<&str> {
        self.files.iter().find(|f| f.path == path).map(|f| f.sha256.as_str())
    }
}

/// Setpoint and window used by the pricing runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingSetup {
    pub k_cr: f64,
    /// `false` when `k_cr` came from the scenario file.
    pub estimated: bool,
    pub low_confidence: bool,
    pub window: Vec<usize>,
}

/// Untolled and (optionally) tolled result at one SO ratio.
pub struct RatioRun {
    pub so_ratio: f64,
    pub untolled: EquilibriumOutcome,
    pub tolled: Option<BilevelOutcome<EquilibriumOutcome>>,
}

/// Everything a run produced, before it is written out.
pub struct ScenarioRun {
    pub runs: Vec<RatioRun>,
    pub pricing: Option<PricingSetup>,
    pub metrics: Vec<ScenarioMetrics>,
}

/// Links the NFD is taken over: the pricing zone, or the whole network
/// when there is none.
pub fn nfd_links(network: &Network) -> Vec<LinkIdx> {
    let z = network.zone_links();
    if z.is_empty() {
        network.link_indices().collect()
    } else {
        z
    }
}

/// Directory name of one ratio, e.g. `so_0.40`.
pub fn ratio_dir(so_ratio: f64) -> String {
    format!("so_{so_ratio:.2}")
}

/// Solves everything the scenario asks for without touching the disk.
pub fn execute_scenario(sc: &LoadedScenario, options: &RunOptions) -> Result<ScenarioRun> {
    let s = &sc.scenario;
    let net = &sc.network;
    let zone = nfd_links(net);
    let pricing = options.pricing && s.toll.is_some();

    let untolled: Vec<EquilibriumOutcome> = s
        .so_ratios
        .par_iter()
        .map(|&r| {
            let d = s.split(&sc.demand, r).map_err(|e| e.in_stage("demand"))?;
            solve_mixed_equilibrium(net, &d, &s.clock, &s.solver, None).map_err(|e| e.in_stage("equilibrium"))
        })
        .collect::<Result<_>>()?;

    let setup = if pricing {
        let toll = s.toll.as_ref().expect("checked above");
        let base_series = match s.so_ratios.iter().position(|&r| r == 0.0) {
            Some(i) => nfd_series(&untolled[i].loading, net, &zone),
            None => {
                let d = s.split(&sc.demand, 0.0).map_err(|e| e.in_stage("demand"))?;
                let eq = solve_mixed_equilibrium(net, &d, &s.clock, &s.solver, None)
                    .map_err(|e| e.in_stage("equilibrium"))?;
                nfd_series(&eq.loading, net, &zone)
            }
        }
        .map_err(|e| e.in_stage("nfd"))?;
        let (k_cr, estimated, low_confidence) = match toll.k_cr {
            Some(k) => (k, false, false),
            None => {
                let c = estimate_critical_density(&base_series).map_err(|e| e.in_stage("nfd"))?;
                if c.low_confidence {
                    log::warn!("critical density {:.2} veh/km sits at the density peak", c.k_cr);
                }
                (c.k_cr, true, c.low_confidence)
            }
        };
        let window = match &toll.window {
            Some(w) => w.clone(),
            None => (0..s.clock.intervals).filter(|&t| base_series[t].k > k_cr).collect(),
        };
        if window.is_empty() {
            return Err(Error::Config(format!(
                "no interval has zone density above K_cr = {k_cr:.3} veh/km; set toll.window or toll.k_cr"
            ))
            .in_stage("pricing"));
        }
        Some(PricingSetup {
            k_cr,
            estimated,
            low_confidence,
            window,
        })
    } else {
        None
    };

    let tolled: Vec<Option<BilevelOutcome<EquilibriumOutcome>>> = match &setup {
        None => s.so_ratios.iter().map(|_| None).collect(),
        Some(p) => {
            let toll = s.toll.as_ref().expect("checked above");
            s.so_ratios
                .par_iter()
                .map(|&r| {
                    let d = s.split(&sc.demand, r).map_err(|e| e.in_stage("demand"))?;
                    price_network(net, &d, &s.clock, &s.solver, toll, p.k_cr, &p.window)
                        .map(Some)
                        .map_err(|e| e.in_stage("pricing"))
                })
                .collect::<Result<_>>()?
        }
    };

    let runs: Vec<RatioRun> = s
        .so_ratios
        .iter()
        .zip(untolled)
        .zip(tolled)
        .map(|((&so_ratio, untolled), tolled)| RatioRun {
            so_ratio,
            untolled,
            tolled,
        })
        .collect();

    let window: Vec<usize> = setup.as_ref().map(|p| p.window.clone()).unwrap_or_default();
    let vot = s.toll.as_ref().map_or(crate::pricing::TollConfig::default().vot, |t| t.vot);
    let mut metrics = Vec::new();
    for run in &runs {
        let w = (!window.is_empty()).then_some(window.as_slice());
        let base_summary = class_zone_summary(net, &run.untolled.loading, None, w);
        metrics.push(metrics_row(sc, run.so_ratio, &run.untolled, None, &window, &zone, None)?);
        if let Some(t) = &run.tolled {
            let tolled_summary = class_zone_summary(net, &t.outcome.loading, Some(&t.schedule), w);
            let bc = benefit_cost_ratio(&base_summary, &tolled_summary, vot);
            metrics.push(metrics_row(sc, run.so_ratio, &t.outcome, Some(&t.schedule), &window, &zone, bc)?);
        }
    }

    Ok(ScenarioRun {
        runs,
        pricing: setup,
        metrics,
    })
}

fn metrics_row(
    sc: &LoadedScenario,
    so_ratio: f64,
    eq: &EquilibriumOutcome,
    schedule: Option<&TollSchedule>,
    window: &[usize],
    zone: &[LinkIdx],
    bc_ratio: Option<f64>,
) -> Result<ScenarioMetrics> {
    let net = &sc.network;
    let series = nfd_series(&eq.loading, net, zone).map_err(|e| e.in_stage("analysis"))?;
    let w = (!window.is_empty()).then_some(window);
    let z = class_zone_summary(net, &eq.loading, schedule, w);
    Ok(ScenarioMetrics {
        scenario_id: sc.scenario.id.clone(),
        so_ratio,
        tolled: schedule.is_some(),
        tstt_veh_h: crate::analysis::tstt(&eq.loading).map_err(|e| e.in_stage("analysis"))?,
        zone_k_mean: window_mean_density(&series, window),
        ue_zone_tt_min: z.ue_zone_tt_min,
        so_zone_tt_min: z.so_zone_tt_min,
        mean_toll_usd: z.mean_toll_usd,
        bc_ratio,
        hysteresis_area: hysteresis_area(&series).map_err(|e| e.in_stage("analysis"))?,
    })
}

/// Runs the scenario and writes every output under `out`:
///
/// ```text
/// out/metrics.csv
/// out/pricing.json                      (pricing runs only)
/// out/so_0.00/untolled/{iterations,link_states,nfd_zone,nfd_network}.csv, network.json
/// out/so_0.00/tolled/...                plus toll_schedule.csv, omega.csv, controller.csv
/// out/manifest.json
/// ```
pub fn run_scenario(sc: &LoadedScenario, out: &FsPath, options: &RunOptions) -> Result<RunManifest> {
    let run = execute_scenario(sc, options)?;
    write_run(sc, &run, out, options).map_err(|e| e.in_stage("output"))
}

fn create(path: &FsPath) -> Result<fs::File> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

struct Outputs<'a> {
    root: &'a FsPath,
    written: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn file<F>(&mut self, rel: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut fs::File) -> Result<()>,
    {
        let path = self.root.join(rel);
        let mut f = create(&path)?;
        body(&mut f)?;
        self.written.push(PathBuf::from(rel));
        Ok(())
    }
}

fn write_equilibrium(
    o: &mut Outputs<'_>,
    dir: &str,
    sc: &LoadedScenario,
    eq: &EquilibriumOutcome,
    trajectories: bool,
) -> Result<()> {
    let net = &sc.network;
    o.file(&format!("{dir}/iterations.csv"), |f| write_iteration_log(&eq.log, f))?;
    o.file(&format!("{dir}/link_states.csv"), |f| write_link_states(net, &eq.loading, f))?;
    let all: Vec<LinkIdx> = net.link_indices().collect();
    o.file(&format!("{dir}/nfd_network.csv"), |f| {
        write_nfd(&nfd_series(&eq.loading, net, &all)?, f)
    })?;
    let zone = net.zone_links();
    if !zone.is_empty() {
        o.file(&format!("{dir}/nfd_zone.csv"), |f| write_nfd(&nfd_series(&eq.loading, net, &zone)?, f))?;
    }
    let def = sc.network_def.to_json_string()?;
    o.file(&format!("{dir}/network.json"), |f| {
        use std::io::Write;
        f.write_all(def.as_bytes()).map_err(|e| Error::io("network.json", e))
    })?;
    if trajectories {
        let ids: Vec<usize> = (0..eq.loading.paths().len()).collect();
        o.file(&format!("{dir}/trajectories.csv"), |f| write_trajectories(&eq.loading, &ids, f))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ControllerRow {
    iteration: usize,
    objective: f64,
    window_k_mean: f64,
    alpha_max_per_km: f64,
}

fn write_run(sc: &LoadedScenario, run: &ScenarioRun, out: &FsPath, options: &RunOptions) -> Result<RunManifest> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut o = Outputs {
        root: out,
        written: Vec::new(),
    };
    o.file("metrics.csv", |f| write_metrics(&run.metrics, f))?;
    if let Some(p) = &run.pricing {
        let text = serde_json::to_string_pretty(p)?;
        o.file("pricing.json", |f| {
            use std::io::Write;
            f.write_all(text.as_bytes()).map_err(|e| Error::io("pricing.json", e))
        })?;
    }
    for r in &run.runs {
        let dir = ratio_dir(r.so_ratio);
        write_equilibrium(&mut o, &format!("{dir}/untolled"), sc, &r.untolled, options.trajectories)?;
        if let Some(t) = &r.tolled {
            let tdir = format!("{dir}/tolled");
            write_equilibrium(&mut o, &tdir, sc, &t.outcome, options.trajectories)?;
            o.file(&format!("{tdir}/toll_schedule.csv"), |f| write_toll_schedule(&t.schedule.alpha, f))?;
            o.file(&format!("{tdir}/omega.csv"), |f| write_omega(&sc.network, &t.schedule.omega, f))?;
            let window = &run.pricing.as_ref().expect("tolled runs have a setup").window;
            o.file(&format!("{tdir}/controller.csv"), |f| {
                let mut w = csv::Writer::from_writer(f);
                for rec in &t.log {
                    let k = window.iter().map(|&i| rec.zone_density[i]).sum::<f64>() / window.len() as f64;
                    w.serialize(ControllerRow {
                        iteration: rec.iteration,
                        objective: rec.objective,
                        window_k_mean: k,
                        alpha_max_per_km: rec.alpha.iter().copied().fold(0.0, f64::max),
                    })?;
                }
                w.flush().map_err(|e| Error::io("controller.csv", e))
            })?;
        }
    }

    let mut files = Vec::new();
    for rel in &o.written {
        let bytes = fs::read(out.join(rel)).map_err(|e| Error::io(out.join(rel), e))?;
        files.push(FileDigest {
            path: rel.to_string_lossy().replace('\\', "/"),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = RunManifest {
        scenario_id: sc.scenario.id.clone(),
        scenario_sha256: sc.digest()?,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: sc.scenario.seed,
        files,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    let path = out.join("manifest.json");
    fs::write(&path, text).map_err(|e| Error::io(path, e))?;
    Ok(manifest)
}

/// NFD and setpoint estimate from a run directory holding `network.json`
/// and `link_states.csv`.
pub fn nfd_from_run_dir(dir: &FsPath, zone: bool) -> Result<(Vec<NfdPoint>, CriticalDensity)> {
    let net = Network::from_file(&dir.join("network.json")).map_err(|e| e.in_stage("network"))?;
    let states_path = dir.join("link_states.csv");
    let f = fs::File::open(&states_path).map_err(|e| Error::io(&states_path, e).in_stage("nfd"))?;
    let states = read_link_states(&net, f).map_err(|e| e.in_stage("nfd"))?;
    let links: Vec<LinkIdx> = if zone {
        net.zone_links()
    } else {
        net.link_indices().collect()
    };
    let series = states
        .iter()
        .map(|s| nfd_point(s, &links, &net))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("nfd"))?;
    let c = estimate_critical_density(&series).map_err(|e| e.in_stage("nfd"))?;
    Ok((series, c))
}

/// Digest table of a manifest, for comparisons.
pub fn digest_map(m: &RunManifest) -> BTreeMap<&str, &str> {
    m.files.iter().map(|f| (f.path.as_str(), f.sha256.as_str())).collect()
}
