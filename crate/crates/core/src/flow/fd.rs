//! Triangular link fundamental diagram `q(k) = min(V·k, (1 − L·k)/R)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-lane triangular FD. Densities in veh/m, flows in veh/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdParams {
    /// Free-flow speed, m/s.
    pub speed: f64,
    /// Effective vehicle length, m.
    pub vehicle_length: f64,
    /// Reaction time including the link factor, s.
    pub reaction_time: f64,
}

impl FdParams {
    pub fn new(speed: f64, vehicle_length: f64, reaction_time: f64) -> Result<Self> {
        for (what, v) in [
            ("speed", speed),
            ("vehicle_length", vehicle_length),
            ("reaction_time", reaction_time),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::range(what, v, f64::MIN_POSITIVE, f64::INFINITY));
            }
        }
        Ok(FdParams {
            speed,
            vehicle_length,
            reaction_time,
        })
    }

    pub fn jam_density(&self) -> f64 {
        1.0 / self.vehicle_length
    }

    pub fn critical_density(&self) -> f64 {
        1.0 / (self.speed * self.reaction_time + self.vehicle_length)
    }

    pub fn capacity(&self) -> f64 {
        self.speed / (self.speed * self.reaction_time + self.vehicle_length)
    }

    /// Backward wave speed of the congested branch, m/s.
    pub fn wave_speed(&self) -> f64 {
        self.vehicle_length / self.reaction_time
    }
}

/// Flow at density `k` (veh/m/lane), in veh/s/lane.
pub fn fd_flow(k: f64, p: &FdParams) -> Result<f64> {
    let kj = p.jam_density();
    if !(0.0..=kj).contains(&k) {
        return Err(Error::range("density", k, 0.0, kj));
    }
    let free = p.speed * k;
    let congested = (1.0 - p.vehicle_length * k) / p.reaction_time;
    Ok(free.min(congested).max(0.0))
}

/// `(k_crit, q_max)` at the intersection of the two branches.
pub fn fd_capacity(p: &FdParams) -> (f64, f64) {
    (p.critical_density(), p.capacity())
}

/// Reaction times of the two vehicle types, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassReactionTimes {
    pub hv: f64,
    pub cav: f64,
}

impl Default for ClassReactionTimes {
    fn default() -> Self {
        ClassReactionTimes { hv: 1.5, cav: 1.0 }
    }
}

impl ClassReactionTimes {
    pub fn validate(&self) -> Result<()> {
        if !(self.cav.is_finite() && self.cav > 0.0) {
            return Err(Error::range("cav reaction time", self.cav, 0.0, self.hv));
        }
        if !(self.hv.is_finite() && self.hv >= self.cav) {
            return Err(Error::range("hv reaction time", self.hv, self.cav, f64::INFINITY));
        }
        Ok(())
    }
}

/// Reaction time of a stream with CAV share `f`: `f·R_cav + (1 − f)·R_hv`.
pub fn blended_reaction_time(cav_fraction: f64, times: &ClassReactionTimes) -> Result<f64> {
    if !(0.0..=1.0).contains(&cav_fraction) {
        return Err(Error::range("cav_fraction", cav_fraction, 0.0, 1.0));
    }
    Ok(cav_fraction * times.cav + (1.0 - cav_fraction) * times.hv)
}
