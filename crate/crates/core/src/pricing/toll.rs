//! Distance tolls weighted by link congestion, and their conversion to time.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::demand::VehicleClass;
use crate::error::{Error, Result};
use crate::flow::LoadingResult;
use crate::network::{LinkIdx, Network, Path};
use crate::routing::{evaluate_path, CostKind, CostSkims};

fn default_vot() -> f64 {
    15.0
}
fn default_alpha_max() -> f64 {
    5.0
}
fn default_p_p() -> f64 {
    0.05
}
fn default_p_i() -> f64 {
    0.025
}
fn default_omega_max() -> f64 {
    1.0
}
fn default_max_outer() -> usize {
    30
}
fn default_min_improvement() -> f64 {
    0.01
}
fn default_patience() -> usize {
    3
}

/// Toll controller and pricing parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TollConfig {
    /// Value of time, $/h.
    #[serde(default = "default_vot")]
    pub vot: f64,
    /// Upper bound of the toll rate, $/km.
    #[serde(default = "default_alpha_max")]
    pub alpha_max: f64,
    /// Proportional gain, $/km per veh/km.
    #[serde(default = "default_p_p")]
    pub p_p: f64,
    /// Integral gain, $/km per veh/km.
    #[serde(default = "default_p_i")]
    pub p_i: f64,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
    /// Tolling interval, s. Must equal the assignment interval when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval_s: Option<f64>,
    /// Intervals that are tolled. `None` lets the caller derive the window
    /// from the untolled run (intervals where zone density exceeds K_cr).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Vec<usize>>,
    /// Setpoint override, veh/km. Estimated from the untolled run when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_cr: Option<f64>,
    #[serde(default = "default_max_outer")]
    pub max_outer_iterations: usize,
    /// Relative objective improvement that resets the stall counter.
    #[serde(default = "default_min_improvement")]
    pub min_improvement: f64,
    /// Stalled outer iterations before stopping.
    #[serde(default = "default_patience")]
    pub patience: usize,
}

impl Default for TollConfig {
    fn default() -> Self {
        TollConfig {
            vot: default_vot(),
            alpha_max: default_alpha_max(),
            p_p: default_p_p(),
            p_i: default_p_i(),
            omega_max: default_omega_max(),
            interval_s: None,
            window: None,
            k_cr: None,
            max_outer_iterations: default_max_outer(),
            min_improvement: default_min_improvement(),
            patience: default_patience(),
        }
    }
}

impl TollConfig {
    pub fn validate(&self, assignment_interval_s: f64, intervals: usize) -> Result<()> {
        let positive = |what: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::range(what, v, f64::MIN_POSITIVE, f64::INFINITY))
            }
        };
        positive("vot", self.vot)?;
        positive("alpha_max", self.alpha_max)?;
        for (what, v) in [("p_p", self.p_p), ("p_i", self.p_i), ("omega_max", self.omega_max)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::range(what, v, 0.0, f64::INFINITY));
            }
        }
        if let Some(i) = self.interval_s {
            if (i - assignment_interval_s).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "tolling interval {i} s differs from the assignment interval {assignment_interval_s} s"
                )));
            }
        }
        if let Some(w) = &self.window {
            if let Some(&bad) = w.iter().find(|&&t| t >= intervals) {
                return Err(Error::Config(format!("window interval {bad} outside the horizon")));
            }
        }
        if let Some(k) = self.k_cr {
            positive("k_cr", k)?;
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::Config("max_outer_iterations must be at least 1".into()));
        }
        if !(self.min_improvement.is_finite() && self.min_improvement >= 0.0) {
            return Err(Error::range("min_improvement", self.min_improvement, 0.0, 1.0));
        }
        Ok(())
    }
}

/// Toll rate per interval and congestion weight per (link, interval).
#[derive(Debug, Clone, PartialEq)]
pub struct TollSchedule {
    /// $/km, indexed by interval.
    pub alpha: Vec<f64>,
    /// Indexed `[link][interval]`.
    pub omega: Vec<Vec<f64>>,
}

impl TollSchedule {
    pub fn zero(links: usize, intervals: usize) -> Self {
        TollSchedule {
            alpha: vec![0.0; intervals],
            omega: vec![vec![0.0; intervals]; links],
        }
    }

    /// Flat distance toll: the same rate in every interval, no weighting.
    pub fn flat(links: usize, intervals: usize, alpha: f64) -> Self {
        TollSchedule {
            alpha: vec![alpha; intervals],
            omega: vec![vec![0.0; intervals]; links],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.iter().all(|&a| a == 0.0)
    }

    /// Charge for traversing `link` when reaching it in `interval`, $.
    pub fn link_toll(&self, network: &Network, link: LinkIdx, interval: usize) -> f64 {
        let l = network.link(link);
        if !l.in_pricing_zone {
            return 0.0;
        }
        self.alpha[interval] * (1.0 + self.omega[link.0][interval]) * l.length_km()
    }

    pub fn validate(&self, links: usize, intervals: usize, config: &TollConfig) -> Result<()> {
        if self.alpha.len() != intervals
            || self.omega.len() != links
            || self.omega.iter().any(|r| r.len() != intervals)
        {
            return Err(Error::Structural("toll schedule shape does not match the run".into()));
        }
        for &a in &self.alpha {
            if !(0.0..=config.alpha_max).contains(&a) {
                return Err(Error::range("alpha", a, 0.0, config.alpha_max));
            }
        }
        for &w in self.omega.iter().flatten() {
            if !(0.0..=config.omega_max).contains(&w) {
                return Err(Error::range("omega", w, 0.0, config.omega_max));
            }
        }
        Ok(())
    }
}

/// `ω = clamp((tt − t̄)/t̄, 0, ω_max)`.
pub fn congestion_weight(travel_time: f64, free_flow_time: f64, omega_max: f64) -> Result<f64> {
    if !(free_flow_time.is_finite() && free_flow_time > 0.0) {
        return Err(Error::range(
            "free-flow time",
            free_flow_time,
            f64::MIN_POSITIVE,
            f64::INFINITY,
        ));
    }
    Ok(((travel_time - free_flow_time) / free_flow_time).clamp(0.0, omega_max))
}

/// Congestion weights of every (link, interval) measured on `loading`.
pub fn omega_from_loading(loading: &LoadingResult, omega_max: f64) -> Result<Vec<Vec<f64>>> {
    (0..loading.link_count())
        .map(|a| {
            loading
                .link_states(LinkIdx(a))
                .iter()
                .map(|s| congestion_weight(s.travel_time, s.free_flow_time, omega_max))
                .collect()
        })
        .collect()
}

/// Toll of `path` at rate `alpha` ($/km) with per-link weights `omega`
/// (indexed by link): `α · Σ_zone (1 + ω_a) · l_a`.
pub fn path_toll(alpha: f64, path: &Path, omega: &[f64], network: &Network) -> f64 {
    path.links()
        .iter()
        .map(|&a| network.link(a))
        .zip(path.links())
        .filter(|(l, _)| l.in_pricing_zone)
        .map(|(l, a)| (1.0 + omega[a.0]) * l.length)
        .sum::<f64>()
        / 1000.0
        * alpha
}

/// Dollars to seconds at value of time `vot` ($/h).
pub fn toll_seconds(dollars: f64, vot: f64) -> f64 {
    dollars / vot * 3600.0
}

/// Class path cost for a departure in `interval`, seconds.
///
/// UE: travel time (with origin wait) plus the tolls charged at each zone
/// link's arrival interval, converted with `vot`. SO: marginal time, no toll.
/// Only the untolled parts of `skims` are read.
pub fn generalized_cost(
    network: &Network,
    path: &Path,
    interval: usize,
    class: VehicleClass,
    skims: &CostSkims,
    schedule: &TollSchedule,
    vot: f64,
) -> f64 {
    match class {
        VehicleClass::So => evaluate_path(skims, path, interval, CostKind::So).0,
        VehicleClass::Ue => {
            let clock = &skims.clock;
            let mut t = clock.interval_mid(interval);
            let mut cost = 0.0;
            for (i, &a) in path.links().iter().enumerate() {
                if i == 0 {
                    let w = skims.entry_wait[a.0][clock.interval_at(t)];
                    t += w;
                    cost += w;
                }
                let tau = clock.interval_at(t);
                let tt = skims.travel_time[a.0][tau];
                cost += tt + toll_seconds(schedule.link_toll(network, a, tau), vot);
                t += tt;
            }
            cost
        }
    }
}

/// Skims whose UE cost includes the schedule's tolls.
pub fn tolled_skims(
    base: &CostSkims,
    network: &Network,
    schedule: &TollSchedule,
    vot: f64,
) -> CostSkims {
    let mut s = base.clone();
    for (a, row) in s.ue_cost.iter_mut().enumerate() {
        for (tau, c) in row.iter_mut().enumerate() {
            *c = base.travel_time[a][tau]
                + toll_seconds(schedule.link_toll(network, LinkIdx(a), tau), vot);
        }
    }
    s
}

/// A schedule and the value of time needed to price it.
#[derive(Debug, Clone, Copy)]
pub struct TollContext<'a> {
    pub schedule: &'a TollSchedule,
    pub vot: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct AlphaRow {
    interval_index: usize,
    alpha_per_km: f64,
}

/// Writes `interval_index,alpha_per_km`.
pub fn write_toll_schedule<W: Write>(alpha: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, &a) in alpha.iter().enumerate() {
        w.serialize(AlphaRow {
            interval_index: i,
            alpha_per_km: a,
        })?;
    }
    w.flush().map_err(|e| Error::io("<toll schedule>", e))?;
    Ok(())
}

/// Reads `interval_index,alpha_per_km`. Every interval from 0 to the largest
/// index must appear exactly once; rates must be finite and non-negative.
pub fn read_toll_schedule<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut rows: Vec<AlphaRow> = Vec::new();
    for r in csv::Reader::from_reader(input).deserialize() {
        rows.push(r?);
    }
    let n = rows.iter().map(|r| r.interval_index.saturating_add(1)).max().unwrap_or(0);
    if rows.len() != n {
        return Err(Error::Config(format!(
            "toll schedule has {} rows for intervals 0..{n}",
            rows.len()
        )));
    }
    let mut alpha = vec![f64::NAN; n];
    for r in rows {
        if !(r.alpha_per_km.is_finite() && r.alpha_per_km >= 0.0) {
            return Err(Error::range("alpha_per_km", r.alpha_per_km, 0.0, f64::INFINITY));
        }
        if !alpha[r.interval_index].is_nan() {
            return Err(Error::Config(format!(
                "interval {} listed twice",
                r.interval_index
            )));
        }
        alpha[r.interval_index] = r.alpha_per_km;
    }
    Ok(alpha)
}

#[derive(Debug, Serialize)]
struct OmegaRow<'a> {
    link_id: &'a str,
    interval_index: usize,
    omega: f64,
}

/// Writes `link_id,interval_index,omega`.
pub fn write_omega<W: Write>(network: &Network, omega: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (a, row) in omega.iter().enumerate() {
        for (tau, &o) in row.iter().enumerate() {
            w.serialize(OmegaRow {
                link_id: &network.link(LinkIdx(a)).id,
                interval_index: tau,
                omega: o,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io("<omega>", e))?;
    Ok(())
}
