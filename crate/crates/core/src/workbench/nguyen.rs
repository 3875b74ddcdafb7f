//! The 13-node, 19-link Nguyen–Dupuis test network.

use crate::demand::{DemandFile, DemandRecord};
use crate::network::{Clock, LinkDef, NetworkDef, NodeDef};

/// `(from, to, free-flow minutes)` of the classic network.
const LINKS: [(u32, u32, f64); 19] = [
    (1, 5, 7.0),
    (1, 12, 9.0),
    (4, 5, 9.0),
    (4, 9, 12.0),
    (5, 6, 3.0),
    (5, 9, 9.0),
    (6, 7, 5.0),
    (6, 10, 13.0),
    (7, 8, 5.0),
    (7, 11, 9.0),
    (8, 2, 9.0),
    (9, 10, 10.0),
    (9, 13, 9.0),
    (10, 11, 6.0),
    (11, 2, 9.0),
    (11, 3, 8.0),
    (12, 6, 7.0),
    (12, 8, 14.0),
    (13, 3, 11.0),
];

/// Central links forming the default pricing zone.
pub const NGUYEN_ZONE: [&str; 6] = ["5-6", "6-7", "6-10", "7-11", "9-10", "10-11"];

pub const NGUYEN_ODS: [(&str, &str); 4] = [("1", "2"), ("1", "3"), ("4", "2"), ("4", "3")];

/// Tunable defaults of the bundled scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct NguyenConfig {
    /// m/s on every link.
    pub speed: f64,
    /// Meters per classic free-flow minute.
    pub meters_per_unit: f64,
    pub lanes: u32,
    /// Lanes of the central (zone) links.
    pub zone_lanes: u32,
    /// Vehicles per OD in each of the loaded intervals.
    pub pulse: Vec<f64>,
    /// Per-OD multiplier, in `NGUYEN_ODS` order.
    pub od_weights: [f64; 4],
    pub step_s: f64,
    pub interval_s: f64,
    pub intervals: usize,
}

impl Default for NguyenConfig {
    fn default() -> Self {
        NguyenConfig {
            speed: 15.0,
            meters_per_unit: 300.0,
            lanes: 1,
            zone_lanes: 1,
            pulse: vec![100.0, 200.0, 100.0],
            od_weights: [1.0, 1.0, 1.0, 1.0],
            step_s: 1.0,
            interval_s: 300.0,
            intervals: 12,
        }
    }
}

/// Network, demand and clock of the bundled scenario.
pub fn build_nguyen(config: &NguyenConfig) -> (NetworkDef, DemandFile, Clock) {
    let nodes = (1..=13)
        .map(|i| NodeDef {
            id: i.to_string(),
            is_centroid: i <= 4,
        })
        .collect();
    let links = LINKS
        .iter()
        .map(|&(f, t, minutes)| {
            let id = format!("{f}-{t}");
            let zone = NGUYEN_ZONE.contains(&id.as_str());
            LinkDef {
                id,
                from_node: f.to_string(),
                to_node: t.to_string(),
                length: minutes * config.meters_per_unit,
                lanes: if zone { config.zone_lanes } else { config.lanes },
                speed_limit: config.speed,
                effective_vehicle_length: 7.0,
                reaction_time_factor: 1.0,
                in_pricing_zone: false,
            }
        })
        .collect();
    let network = NetworkDef {
        nodes,
        links,
        pricing_zone: NGUYEN_ZONE.iter().map(|s| s.to_string()).collect(),
    };
    let mut records = Vec::new();
    for (k, (o, d)) in NGUYEN_ODS.iter().enumerate() {
        for (tau, &q) in config.pulse.iter().enumerate() {
            records.push(DemandRecord {
                origin: o.to_string(),
                destination: d.to_string(),
                interval_index: tau,
                total: q * config.od_weights[k],
                so_ratio: None,
            });
        }
    }
    let clock = Clock {
        step_s: config.step_s,
        interval_s: config.interval_s,
        intervals: config.intervals,
    };
    (network, DemandFile { records }, clock)
}
