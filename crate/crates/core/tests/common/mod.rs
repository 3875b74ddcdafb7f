//! Small hand-checkable networks shared by the integration tests.
#![allow(dead_code)]

use mixdta::demand::{ClassDemand, OdClassDemand, OdPair};
use mixdta::network::{LinkDef, Network, NetworkDef, NodeDef};

pub struct L<'a> {
    pub id: &'a str,
    pub from: &'a str,
    pub to: &'a str,
    pub length: f64,
    pub lanes: u32,
    pub rf: f64,
}

pub fn link<'a>(id: &'a str, from: &'a str, to: &'a str, length: f64, lanes: u32, rf: f64) -> L<'a> {
    L {
        id,
        from,
        to,
        length,
        lanes,
        rf,
    }
}

/// Builds a network at `speed` m/s. `centroids` are the OD nodes.
pub fn network(nodes: &[&str], centroids: &[&str], links: &[L], speed: f64, zone: &[&str]) -> Network {
    let def = NetworkDef {
        nodes: nodes
            .iter()
            .map(|n| NodeDef {
                id: n.to_string(),
                is_centroid: centroids.contains(n),
            })
            .collect(),
        links: links
            .iter()
            .map(|l| LinkDef {
                id: l.id.into(),
                from_node: l.from.into(),
                to_node: l.to.into(),
                length: l.length,
                lanes: l.lanes,
                speed_limit: speed,
                effective_vehicle_length: 7.0,
                reaction_time_factor: l.rf,
                in_pricing_zone: false,
            })
            .collect(),
        pricing_zone: zone.iter().map(|s| s.to_string()).collect(),
    };
    Network::from_def(&def).unwrap()
}

/// O -> U -> D: a wide 900 m feeder (60 s at 15 m/s) and a one-lane
/// bottleneck (100 s at 1500 m) whose reaction time is doubled, so its capacity is
/// 15 / (15·3 + 7) = 0.2885 veh/s.
pub fn bottleneck() -> Network {
    network(
        &["O", "U", "D"],
        &["O", "D"],
        &[link("feed", "O", "U", 900.0, 3, 1.0), link("neck", "U", "D", 1500.0, 1, 2.0)],
        15.0,
        &[],
    )
}

pub const BOTTLENECK_CAPACITY: f64 = 15.0 / (15.0 * 3.0 + 7.0);

/// Two parallel routes O -> D. `short` is 600 m on one lane and narrowed
/// (reaction factor 2); `long` is 1500 m on two lanes.
pub fn two_route() -> Network {
    network(
        &["O", "A", "B", "D"],
        &["O", "D"],
        &[
            link("oa", "O", "A", 150.0, 3, 1.0),
            link("short", "A", "D", 600.0, 1, 2.0),
            link("ob", "O", "B", 150.0, 3, 1.0),
            link("long", "B", "D", 1500.0, 2, 1.0),
        ],
        15.0,
        &["short"],
    )
}

/// Classic Braess layout: O -> A -> D and O -> B -> D with a short
/// connector A -> B. Links oa and bd are narrow, ob and ad are long.
pub fn braess() -> Network {
    network(
        &["O", "A", "B", "D"],
        &["O", "D"],
        &[
            link("oa", "O", "A", 300.0, 1, 1.5),
            link("ob", "O", "B", 1200.0, 3, 1.0),
            link("ab", "A", "B", 60.0, 1, 1.0),
            link("ad", "A", "D", 1200.0, 3, 1.0),
            link("bd", "B", "D", 300.0, 1, 1.5),
        ],
        15.0,
        &[],
    )
}

/// One OD pair with the given UE and SO vehicles per interval.
pub fn od_demand(net: &Network, o: &str, d: &str, ue: Vec<f64>, so: Vec<f64>) -> ClassDemand {
    assert_eq!(ue.len(), so.len());
    ClassDemand {
        intervals: ue.len(),
        ods: vec![OdClassDemand {
            od: OdPair {
                origin: net.node_by_id(o).unwrap(),
                destination: net.node_by_id(d).unwrap(),
            },
            origin_id: o.into(),
            destination_id: d.into(),
            ue,
            so,
        }],
    }
}
