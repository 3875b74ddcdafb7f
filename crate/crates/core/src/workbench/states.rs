//! Link-state CSV, the hand-off between a run and later NFD analysis.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{LinkState, LoadingResult};
use crate::network::Network;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    link_id: String,
    interval_index: usize,
    density_veh_km: f64,
    flow_veh_h: f64,
    travel_time_s: f64,
    marginal_time_s: f64,
    free_flow_time_s: f64,
    entering: u32,
    entering_so: u32,
    reaction_time_s: f64,
}

/// One row per (link, interval), links in network order.
pub fn write_link_states<W: Write>(network: &Network, loading: &LoadingResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for a in network.link_indices() {
        for (tau, s) in loading.link_states(a).iter().enumerate() {
            w.serialize(Row {
                link_id: network.link(a).id.clone(),
                interval_index: tau,
                density_veh_km: s.density,
                flow_veh_h: s.flow,
                travel_time_s: s.travel_time,
                marginal_time_s: s.marginal_time,
                free_flow_time_s: s.free_flow_time,
                entering: s.entering,
                entering_so: s.entering_so,
                reaction_time_s: s.reaction_time,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io("<link states>", e))?;
    Ok(())
}

/// Reads a link-state table back as `[interval][link]`. Every (link,
/// interval) of the network must appear exactly once.
pub fn read_link_states<R: Read>(network: &Network, input: R) -> Result<Vec<Vec<LinkState>>> {
    let mut rdr = csv::Reader::from_reader(input);
    let links = network.links().len();
    let mut cells: Vec<Vec<Option<LinkState>>> = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let r = row?;
        let a = network.link_by_id(&r.link_id)?;
        for (what, v) in [
            ("density_veh_km", r.density_veh_km),
            ("flow_veh_h", r.flow_veh_h),
            ("travel_time_s", r.travel_time_s),
            ("marginal_time_s", r.marginal_time_s),
            ("free_flow_time_s", r.free_flow_time_s),
            ("reaction_time_s", r.reaction_time_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::range(what, v, 0.0, f64::INFINITY));
            }
        }
        if r.entering_so > r.entering {
            return Err(Error::Structural(format!(
                "link {} interval {}: entering_so exceeds entering",
                r.link_id, r.interval_index
            )));
        }
        if r.interval_index >= 1_000_000 {
            return Err(Error::Structural(format!("interval index {} too large", r.interval_index)));
        }
        if cells.len() <= r.interval_index {
            cells.resize_with(r.interval_index + 1, || vec![None; links]);
        }
        let slot = &mut cells[r.interval_index][a.0];
        if slot.is_some() {
            return Err(Error::Structural(format!(
                "duplicate state for link {} interval {}",
                r.link_id, r.interval_index
            )));
        }
        *slot = Some(LinkState {
            density: r.density_veh_km,
            flow: r.flow_veh_h,
            travel_time: r.travel_time_s,
            marginal_time: r.marginal_time_s,
            free_flow_time: r.free_flow_time_s,
            entering: r.entering,
            entering_so: r.entering_so,
            reaction_time: r.reaction_time_s,
        });
    }
    if cells.is_empty() {
        return Err(Error::Structural("link-state table is empty".into()));
    }
    cells
        .into_iter()
        .enumerate()
        .map(|(tau, row)| {
            row.into_iter()
                .enumerate()
                .map(|(a, s)| {
                    s.ok_or_else(|| {
                        Error::Structural(format!(
                            "missing state for link {} interval {tau}",
                            network.links()[a].id
                        ))
                    })
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{load_network, PathFlow};
    use crate::network::{tests::chain, Clock, Path};

    #[test]
    fn round_trip() {
        let net = chain();
        let clock = Clock::new(1.0, 60.0, 6).unwrap();
        let p = Path::from_ids(&net, &["ab", "bc", "cd"]).unwrap();
        let flows = vec![PathFlow {
            path: 0,
            class: crate::demand::VehicleClass::Ue,
            interval: 0,
            flow: 12.0,
        }];
        let res = load_network(&net, &[p], &flows, &clock, &Default::default()).unwrap();
        let mut buf = Vec::new();
        write_link_states(&net, &res, &mut buf).unwrap();
        let back = read_link_states(&net, buf.as_slice()).unwrap();
        assert_eq!(back.len(), 6);
        for (tau, row) in back.iter().enumerate() {
            assert_eq!(row, &res.interval_states(tau));
        }
    }

    #[test]
    fn missing_cell_rejected() {
        let net = chain();
        let csv = "link_id,interval_index,density_veh_km,flow_veh_h,travel_time_s,marginal_time_s,free_flow_time_s,entering,entering_so,reaction_time_s\n\
                   ab,0,0,0,40,40,40,0,0,1.5\n";
        assert!(read_link_states(&net, csv.as_bytes()).is_err());
    }

    #[test]
    fn unknown_link_rejected() {
        let net = chain();
        let csv = "link_id,interval_index,density_veh_km,flow_veh_h,travel_time_s,marginal_time_s,free_flow_time_s,entering,entering_so,reaction_time_s\n\
                   zz,0,0,0,40,40,40,0,0,1.5\n";
        assert!(read_link_states(&net, csv.as_bytes()).is_err());
    }
}
