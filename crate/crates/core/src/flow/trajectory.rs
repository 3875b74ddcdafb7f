//! Per-vehicle trajectory dump.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::flow::LoadingResult;

#[derive(Debug, Serialize)]
struct TrajectoryRow<'a> {
    vehicle_id: usize,
    class: &'a str,
    departure_interval: usize,
    path_id: usize,
    entry_time_s: f64,
    exit_time_s: f64,
}

/// Writes `vehicle_id,class,departure_interval,path_id,entry_time_s,exit_time_s`.
/// `path_ids` maps the loader's path index to a stable identifier.
pub fn write_trajectories<W: Write>(
    result: &LoadingResult,
    path_ids: &[usize],
    out: W,
) -> Result<()> {
    let dt = result.clock().step_s;
    let mut w = csv::Writer::from_writer(out);
    for (i, v) in result.vehicles().iter().enumerate() {
        w.serialize(TrajectoryRow {
            vehicle_id: i,
            class: v.class.as_str(),
            departure_interval: v.departure_interval,
            path_id: path_ids.get(v.path).copied().unwrap_or(v.path),
            entry_time_s: f64::from(v.departure_step) * dt,
            exit_time_s: f64::from(v.exit_step) * dt,
        })?;
    }
    w.flush().map_err(|e| crate::Error::io("<trajectories>", e))?;
    Ok(())
}
