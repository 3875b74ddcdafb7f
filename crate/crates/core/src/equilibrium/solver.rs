//! The mixed UE/SO equilibrium loop.

use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::{ClassDemand, VehicleClass};
use crate::equilibrium::gap::{relative_gap_so, relative_gap_ue, GapTerm};
use crate::equilibrium::step::{step_size, update_proportions, StepSchedule};
use crate::error::{Error, Result};
use crate::flow::{load_network, ClassReactionTimes, LoadingResult, PathFlow};
use crate::network::{Clock, Network, Path};
use crate::pricing::{tolled_skims, TollContext};
use crate::routing::{
    distance_shortest_path, evaluate_path, td_shortest_path, CostKind, CostSkims, PathSet,
};

fn default_max_iterations() -> usize {
    100
}
fn default_tolerance() -> f64 {
    0.01
}
fn default_ue_cap() -> usize {
    3
}
fn default_so_cap() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Gap tolerance ε₁.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub step: StepSchedule,
    #[serde(default = "default_ue_cap")]
    pub ue_path_cap: usize,
    #[serde(default = "default_so_cap")]
    pub so_path_cap: usize,
    #[serde(default)]
    pub reaction: ClassReactionTimes,
    /// Keep iterating to `max_iterations` after convergence.
    #[serde(default)]
    pub run_all_iterations: bool,
    /// Record wall-clock time per iteration (otherwise logged as 0).
    #[serde(default)]
    pub timings: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: default_max_iterations(),
            tolerance: default_tolerance(),
            step: StepSchedule::default(),
            ue_path_cap: default_ue_cap(),
            so_path_cap: default_so_cap(),
            reaction: ClassReactionTimes::default(),
            run_all_iterations: false,
            timings: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::range("tolerance", self.tolerance, f64::MIN_POSITIVE, f64::INFINITY));
        }
        if self.ue_path_cap == 0 || self.so_path_cap == 0 {
            return Err(Error::Config("path set caps must be at least 1".into()));
        }
        self.step.validate()?;
        self.reaction.validate()
    }

    fn cap(&self, class: VehicleClass) -> usize {
        match class {
            VehicleClass::Ue => self.ue_path_cap,
            VehicleClass::So => self.so_path_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub r1gap: f64,
    pub r2gap: f64,
    pub rgap: f64,
    pub tstt_veh_h: f64,
    pub wall_time_s: f64,
    /// Proportions loaded in this iteration, one vector per path-set key.
    #[serde(skip)]
    pub proportions: Vec<Vec<f64>>,
}

/// Identifies one path set: OD index (into the demand), class, departure
/// interval, and the class demand it carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSetKey {
    pub od: usize,
    pub class: VehicleClass,
    pub interval: usize,
    pub demand: f64,
}

#[derive(Debug, Clone)]
pub struct EquilibriumOutcome {
    pub keys: Vec<PathSetKey>,
    pub path_sets: Vec<PathSet>,
    /// Loading of the final proportions.
    pub loading: LoadingResult,
    /// Skims of that loading (tolled when a schedule was given).
    pub skims: CostSkims,
    pub log: Vec<IterationRecord>,
    /// First iteration at which the convergence test passed.
    pub converged_at: Option<usize>,
}

impl EquilibriumOutcome {
    pub fn converged(&self) -> bool {
        self.converged_at.is_some()
    }

    pub fn final_gap(&self) -> f64 {
        self.log.last().map_or(0.0, |r| r.rgap)
    }
}

struct Evaluation {
    aon: Path,
    costs: Vec<f64>,
    min_cost: f64,
}

/// Runs the equilibrium loop: start on distance-shortest paths, then
/// repeatedly load, skim, find the best path per class, measure gaps and
/// average the best path into the proportions.
///
/// Convergence needs `Rgap ≤ ε₁` on two consecutive iterations (immediate
/// for zero demand). The log covers every iteration run.
pub fn solve_mixed_equilibrium(
    network: &Network,
    demand: &ClassDemand,
    clock: &Clock,
    config: &SolverConfig,
    tolls: Option<TollContext<'_>>,
) -> Result<EquilibriumOutcome> {
    config.validate()?;
    clock.validate()?;
    if demand.intervals != clock.intervals {
        return Err(Error::Structural(format!(
            "demand has {} intervals, clock has {}",
            demand.intervals, clock.intervals
        )));
    }
    if let Some(t) = tolls {
        if t.schedule.alpha.len() != clock.intervals || t.schedule.omega.len() != network.links().len()
        {
            return Err(Error::Structural("toll schedule shape does not match the run".into()));
        }
    }

    let mut keys = Vec::new();
    let mut sets = Vec::new();
    for (i, od) in demand.ods.iter().enumerate() {
        if VehicleClass::ALL.iter().all(|&c| od.class(c).iter().all(|&q| q <= 0.0)) {
            continue;
        }
        let initial = distance_shortest_path(network, od.od.origin, od.od.destination)?;
        for class in VehicleClass::ALL {
            for (tau, &q) in od.class(class).iter().enumerate() {
                if q > 0.0 {
                    keys.push(PathSetKey {
                        od: i,
                        class,
                        interval: tau,
                        demand: q,
                    });
                    sets.push(PathSet::singleton(config.cap(class), initial.clone())?);
                }
            }
        }
    }

    let mut table: Vec<Path> = Vec::new();
    let mut index: HashMap<Path, usize> = HashMap::new();
    let mut log = Vec::new();
    let mut hits = 0;
    let mut converged_at = None;

    for it in 1..=config.max_iterations {
        let start = Instant::now();
        let mut flows = Vec::new();
        for (k, set) in keys.iter().zip(&sets) {
            for (p, &share) in set.paths().iter().zip(set.proportions()) {
                let idx = *index.entry(p.clone()).or_insert_with(|| {
                    table.push(p.clone());
                    table.len() - 1
                });
                flows.push(PathFlow {
                    path: idx,
                    interval: k.interval,
                    class: k.class,
                    flow: share * k.demand,
                });
            }
        }
        let loading = load_network(network, &table, &flows, clock, &config.reaction)?;
        let mut skims = CostSkims::untolled(&loading);
        if let Some(t) = tolls {
            skims = tolled_skims(&skims, network, t.schedule, t.vot);
        }

        let evals = keys
            .par_iter()
            .zip(&sets)
            .map(|(k, set)| {
                let kind = CostKind::from(k.class);
                let od = &demand.ods[k.od].od;
                let aon = td_shortest_path(network, &skims, od.origin, od.destination, k.interval, kind)?;
                let costs: Vec<f64> = set
                    .paths()
                    .iter()
                    .map(|p| evaluate_path(&skims, p, k.interval, kind).0)
                    .collect();
                let min_cost = costs.iter().copied().fold(aon.cost, f64::min);
                Ok(Evaluation {
                    aon: aon.path,
                    costs,
                    min_cost,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let shares: Vec<Vec<f64>> = keys
            .iter()
            .zip(&sets)
            .map(|(k, s)| s.proportions().iter().map(|p| p * k.demand).collect())
            .collect();
        let terms = |class| -> Vec<GapTerm<'_>> {
            keys.iter()
                .zip(&evals)
                .zip(&shares)
                .filter(|((k, _), _)| k.class == class)
                .map(|((k, e), f)| GapTerm {
                    flows: f,
                    costs: &e.costs,
                    min_cost: e.min_cost,
                    demand: k.demand,
                })
                .collect()
        };
        let r1 = relative_gap_ue(&terms(VehicleClass::Ue))?;
        let r2 = relative_gap_so(&terms(VehicleClass::So))?;
        let rgap = (r1 + r2) / 2.0;
        if !rgap.is_finite() {
            return Err(Error::NonFiniteGap { iteration: it });
        }

        log.push(IterationRecord {
            iteration: it,
            r1gap: r1,
            r2gap: r2,
            rgap,
            tstt_veh_h: loading.tstt_veh_h(),
            wall_time_s: 0.0,
            proportions: sets.iter().map(|s| s.proportions().to_vec()).collect(),
        });

        hits = if rgap <= config.tolerance { hits + 1 } else { 0 };
        if converged_at.is_none() && (keys.is_empty() || hits >= 2) {
            converged_at = Some(it);
        }
        let done = it == config.max_iterations
            || (converged_at.is_some() && !config.run_all_iterations);

        if !done {
            let theta = step_size(it, &config.step)?;
            for (set, e) in sets.iter_mut().zip(evals) {
                let j = set.insert(e.aon);
                let mut y = vec![0.0; set.len()];
                y[j] = 1.0;
                let mut p = update_proportions(set.proportions(), &y, theta)?;
                let sum: f64 = p.iter().sum();
                p.iter_mut().for_each(|x| *x /= sum);
                set.set_proportions(p)?;
            }
        }
        if config.timings {
            log.last_mut().unwrap().wall_time_s = start.elapsed().as_secs_f64();
        }
        if done {
            return Ok(EquilibriumOutcome {
                keys,
                path_sets: sets,
                loading,
                skims,
                log,
                converged_at,
            });
        }
    }
    unreachable!("loop returns on its last iteration")
}

#[derive(Serialize)]
struct LogRow {
    iter: usize,
    r1gap: f64,
    r2gap: f64,
    rgap: f64,
    tstt_veh_h: f64,
    wall_time_s: f64,
}

/// Writes `iter,r1gap,r2gap,rgap,tstt_veh_h,wall_time_s`.
pub fn write_iteration_log<W: Write>(log: &[IterationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in log {
        w.serialize(LogRow {
            iter: r.iteration,
            r1gap: r.r1gap,
            r2gap: r.r2gap,
            rgap: r.rgap,
            tstt_veh_h: r.tstt_veh_h,
            wall_time_s: r.wall_time_s,
        })?;
    }
    w.flush().map_err(|e| Error::io("<iteration log>", e))?;
    Ok(())
}
