//! Per-(link, interval) cost tables read by the path searches.

use crate::demand::VehicleClass;
use crate::error::{Error, Result};
use crate::flow::LoadingResult;
use crate::network::{Clock, LinkIdx, Network};

/// Which cost a search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostKind {
    /// Generalized cost of the UE class: travel time plus tolls in seconds.
    Ue,
    /// Marginal travel time of the SO class.
    So,
    /// Plain experienced travel time.
    TravelTime,
}

impl From<VehicleClass> for CostKind {
    fn from(c: VehicleClass) -> Self {
        match c {
            VehicleClass::Ue => CostKind::Ue,
            VehicleClass::So => CostKind::So,
        }
    }
}

/// Cost tables indexed `[link][interval]`, all in seconds.
///
/// The `*_entry` tables hold the delay of joining a link from its tail node
/// (origin queue); searches add them on the first link only.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSkims {
    pub clock: Clock,
    pub travel_time: Vec<Vec<f64>>,
    pub ue_cost: Vec<Vec<f64>>,
    pub so_cost: Vec<Vec<f64>>,
    /// Mean origin wait.
    pub entry_wait: Vec<Vec<f64>>,
    /// Origin wait plus the origin queue's clearance externality.
    pub entry_marginal: Vec<Vec<f64>>,
}

impl CostSkims {
    /// Free-flow skims: every cost is `l / V`, no origin delay.
    pub fn free_flow(network: &Network, clock: &Clock) -> Self {
        let tt: Vec<Vec<f64>> = network
            .links()
            .iter()
            .map(|l| vec![l.free_flow_time(); clock.intervals])
            .collect();
        let zero = vec![vec![0.0; clock.intervals]; tt.len()];
        CostSkims {
            clock: *clock,
            ue_cost: tt.clone(),
            so_cost: tt.clone(),
            travel_time: tt,
            entry_wait: zero.clone(),
            entry_marginal: zero,
        }
    }

    /// Skims of a loading without tolls: UE cost equals travel time, SO cost
    /// is the link marginal time.
    pub fn untolled(loading: &LoadingResult) -> Self {
        let clock = *loading.clock();
        let n_links = loading.link_count();
        let intervals = clock.intervals;
        let dt = clock.step_s;

        let mut travel_time = Vec::with_capacity(n_links);
        let mut so_cost = Vec::with_capacity(n_links);
        for a in 0..n_links {
            let states = loading.link_states(LinkIdx(a));
            travel_time.push(states.iter().map(|s| s.travel_time).collect::<Vec<_>>());
            so_cost.push(states.iter().map(|s| s.marginal_time).collect::<Vec<_>>());
        }

        let mut n = vec![vec![0u32; intervals]; n_links];
        let mut wait = vec![vec![0.0; intervals]; n_links];
        let mut marg = vec![vec![0.0; intervals]; n_links];
        for v in loading.vehicles() {
            let first = loading.paths()[v.path].links()[0];
            let c = loading.curves(first);
            let entry = v.link_entry_steps[0];
            let w = f64::from(entry - v.departure_step) * dt;
            let tau = v.departure_interval;
            n[first.0][tau] += 1;
            wait[first.0][tau] += w;
            marg[first.0][tau] += w + f64::from(c.origin_clearance_steps(entry)) * dt;
        }
        for a in 0..n_links {
            for tau in 0..intervals {
                if n[a][tau] > 0 {
                    let k = f64::from(n[a][tau]);
                    wait[a][tau] /= k;
                    marg[a][tau] /= k;
                } else {
                    let (w, e) = loading.probe_origin(LinkIdx(a), clock.interval_mid(tau));
                    wait[a][tau] = w;
                    marg[a][tau] = w + e;
                }
            }
        }

        CostSkims {
            clock,
            ue_cost: travel_time.clone(),
            travel_time,
            so_cost,
            entry_wait: wait,
            entry_marginal: marg,
        }
    }

    pub fn links(&self) -> usize {
        self.travel_time.len()
    }

    /// Checks shapes and that every entry is finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        let n = self.travel_time.len();
        for (name, t) in [
            ("travel_time", &self.travel_time),
            ("ue_cost", &self.ue_cost),
            ("so_cost", &self.so_cost),
            ("entry_wait", &self.entry_wait),
            ("entry_marginal", &self.entry_marginal),
        ] {
            if t.len() != n || t.iter().any(|row| row.len() != self.clock.intervals) {
                return Err(Error::Structural(format!("{name} skim has the wrong shape")));
            }
            if t.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Structural(format!("{name} skim has a negative or non-finite entry")));
            }
        }
        Ok(())
    }

    /// Cost of `link` entered at `interval` under `kind`.
    pub fn cost(&self, kind: CostKind, link: LinkIdx, interval: usize) -> f64 {
        match kind {
            CostKind::Ue => self.ue_cost[link.0][interval],
            CostKind::So => self.so_cost[link.0][interval],
            CostKind::TravelTime => self.travel_time[link.0][interval],
        }
    }

    /// `(cost, time)` of joining `link` from its tail node at `interval`.
    pub fn entry(&self, kind: CostKind, link: LinkIdx, interval: usize) -> (f64, f64) {
        let w = self.entry_wait[link.0][interval];
        match kind {
            CostKind::So => (self.entry_marginal[link.0][interval], w),
            _ => (w, w),
        }
    }
}
