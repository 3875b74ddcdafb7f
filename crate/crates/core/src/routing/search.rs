//! Time-dependent least-cost path search.
//!
//! Multi-label correcting search over `(cost, arrival time)` labels. A label
//! is dropped only when another label at the same node is no worse in both,
//! so the search is exact whenever link costs are non-decreasing in arrival
//! time. Costs are read at the interval in which the vehicle reaches each
//! link. Waiting at nodes is not allowed.

use std::collections::VecDeque;

use crate::demand::OdPair;
use crate::error::{Error, Result};
use crate::network::{LinkIdx, Network, NodeIdx, Path};
use crate::routing::skims::{CostKind, CostSkims};

/// A search result: path, its cost and the arrival time at the destination.
#[derive(Debug, Clone, PartialEq)]
pub struct FoundPath {
    pub path: Path,
    pub cost: f64,
    pub arrival: f64,
}

#[derive(Debug, Clone, Copy)]
struct Label {
    node: NodeIdx,
    cost: f64,
    time: f64,
    link: Option<LinkIdx>,
    prev: Option<usize>,
    alive: bool,
}

fn tol(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}

fn sequence(labels: &[Label], mut id: usize) -> Vec<LinkIdx> {
    let mut seq = Vec::new();
    while let Some(a) = labels[id].link {
        seq.push(a);
        id = labels[id].prev.unwrap();
    }
    seq.reverse();
    seq
}

fn visits(labels: &[Label], mut id: usize, node: NodeIdx) -> bool {
    loop {
        if labels[id].node == node {
            return true;
        }
        match labels[id].prev {
            Some(p) => id = p,
            None => return false,
        }
    }
}

/// `a` better than `b`: lower cost, or tied cost and lexicographically
/// smaller link sequence.
fn better(labels: &[Label], a: usize, b: usize) -> bool {
    let (ca, cb) = (labels[a].cost, labels[b].cost);
    if (ca - cb).abs() <= tol(cb) {
        sequence(labels, a) < sequence(labels, b)
    } else {
        ca < cb
    }
}

/// Generic search. `step(first, link, t)` returns the `(cost, time)`
/// increments of traversing `link` when reaching it at time `t`.
fn search(
    network: &Network,
    origin: NodeIdx,
    destination: NodeIdx,
    t0: f64,
    step: impl Fn(bool, LinkIdx, f64) -> (f64, f64),
) -> Result<FoundPath> {
    let unreachable = || Error::Unreachable {
        origin: network.node(origin).id.clone(),
        destination: network.node(destination).id.clone(),
    };
    if origin == destination {
        return Err(unreachable());
    }
    let mut labels = vec![Label {
        node: origin,
        cost: 0.0,
        time: t0,
        link: None,
        prev: None,
        alive: true,
    }];
    let mut at_node: Vec<Vec<usize>> = vec![Vec::new(); network.nodes().len()];
    at_node[origin.0].push(0);
    let mut queue = VecDeque::from([0usize]);

    while let Some(id) = queue.pop_front() {
        let l = labels[id];
        if !l.alive || l.node == destination {
            continue;
        }
        for &a in network.outgoing(l.node) {
            let v = network.link(a).to;
            if visits(&labels, id, v) {
                continue;
            }
            let (dc, dt) = step(l.prev.is_none(), a, l.time);
            let new = labels.len();
            labels.push(Label {
                node: v,
                cost: l.cost + dc,
                time: l.time + dt,
                link: Some(a),
                prev: Some(id),
                alive: true,
            });

            let mut keep = true;
            for &e in &at_node[v.0] {
                let (le, ln) = (&labels[e], &labels[new]);
                if !le.alive {
                    continue;
                }
                let cost_le = le.cost <= ln.cost + tol(ln.cost);
                let time_le = le.time <= ln.time + tol(ln.time);
                if cost_le && time_le {
                    let tie = (le.cost - ln.cost).abs() <= tol(ln.cost)
                        && (le.time - ln.time).abs() <= tol(ln.time);
                    if !(tie && sequence(&labels, new) < sequence(&labels, e)) {
                        keep = false;
                        break;
                    }
                }
            }
            if !keep {
                labels.pop();
                continue;
            }
            let (nc, nt) = (labels[new].cost, labels[new].time);
            for &e in &at_node[v.0] {
                let le = &mut labels[e];
                if le.alive && nc <= le.cost + tol(le.cost) && nt <= le.time + tol(le.time) {
                    le.alive = false;
                }
            }
            at_node[v.0].retain(|&e| labels[e].alive);
            at_node[v.0].push(new);
            queue.push_back(new);
        }
    }

    let best = at_node[destination.0]
        .iter()
        .copied()
        .filter(|&e| labels[e].alive)
        .reduce(|a, b| if better(&labels, b, a) { b } else { a })
        .ok_or_else(unreachable)?;
    let path = Path::new(network, sequence(&labels, best))?;
    Ok(FoundPath {
        path,
        cost: labels[best].cost,
        arrival: labels[best].time,
    })
}

fn departure_time(skims: &CostSkims, interval: usize) -> f64 {
    skims.clock.interval_mid(interval)
}

fn td_step(skims: &CostSkims, kind: CostKind) -> impl Fn(bool, LinkIdx, f64) -> (f64, f64) + '_ {
    move |first, a, t| {
        let clock = &skims.clock;
        let (mut c, mut t1) = (0.0, t);
        if first {
            let (ec, et) = skims.entry(kind, a, clock.interval_at(t));
            c += ec;
            t1 += et;
        }
        let tau = clock.interval_at(t1);
        c += skims.cost(kind, a, tau);
        t1 += skims.travel_time[a.0][tau];
        (c, t1 - t)
    }
}

/// Least-cost path of `kind` for a departure at the midpoint of `interval`.
pub fn td_shortest_path(
    network: &Network,
    skims: &CostSkims,
    origin: NodeIdx,
    destination: NodeIdx,
    interval: usize,
    kind: CostKind,
) -> Result<FoundPath> {
    check_interval(skims, interval)?;
    let t0 = departure_time(skims, interval);
    search(network, origin, destination, t0, td_step(skims, kind))
}

/// Least marginal travel time path (SO class).
pub fn td_least_marginal_path(
    network: &Network,
    skims: &CostSkims,
    origin: NodeIdx,
    destination: NodeIdx,
    interval: usize,
) -> Result<FoundPath> {
    td_shortest_path(network, skims, origin, destination, interval, CostKind::So)
}

/// Shortest path by length; ties go to the lexicographically smallest link
/// sequence.
pub fn distance_shortest_path(
    network: &Network,
    origin: NodeIdx,
    destination: NodeIdx,
) -> Result<Path> {
    search(network, origin, destination, 0.0, |_, a, _| {
        (network.link(a).length, 0.0)
    })
    .map(|f| f.path)
}

/// `(cost, arrival time)` of `path` for a departure at the midpoint of
/// `interval`, walking the skims exactly as the search does.
pub fn evaluate_path(skims: &CostSkims, path: &Path, interval: usize, kind: CostKind) -> (f64, f64) {
    let step = td_step(skims, kind);
    let mut t = departure_time(skims, interval);
    let mut cost = 0.0;
    for (i, &a) in path.links().iter().enumerate() {
        let (dc, dt) = step(i == 0, a, t);
        cost += dc;
        t += dt;
    }
    (cost, t)
}

fn check_interval(skims: &CostSkims, interval: usize) -> Result<()> {
    if interval >= skims.clock.intervals {
        return Err(Error::Structural(format!(
            "departure interval {interval} outside the {}-interval horizon",
            skims.clock.intervals
        )));
    }
    Ok(())
}

/// Least UE and SO path costs per OD and departure interval, `[od][τ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkimSummary {
    /// Least UE generalized cost.
    pub pi: Vec<Vec<f64>>,
    /// Least marginal travel time.
    pub delta: Vec<Vec<f64>>,
}

pub fn skim_summary(network: &Network, skims: &CostSkims, ods: &[OdPair]) -> Result<SkimSummary> {
    let intervals = skims.clock.intervals;
    let mut pi = Vec::with_capacity(ods.len());
    let mut delta = Vec::with_capacity(ods.len());
    for od in ods {
        let row = |kind| {
            (0..intervals)
                .map(|tau| {
                    td_shortest_path(network, skims, od.origin, od.destination, tau, kind)
                        .map(|f| f.cost)
                })
                .collect::<Result<Vec<_>>>()
        };
        pi.push(row(CostKind::Ue)?);
        delta.push(row(CostKind::So)?);
    }
    Ok(SkimSummary { pi, delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Clock, LinkDef, NetworkDef, NodeDef};
    use proptest::prelude::*;

    /// o -> m -> d (route A: links 0, 1) and o -> n -> d (route B: links 2, 3),
    /// plus m -> n (link 4).
    fn diamond() -> Network {
        let node = |id: &str| NodeDef {
            id: id.into(),
            is_centroid: id == "o" || id == "d",
        };
        let link = |id: &str, f: &str, t: &str| LinkDef {
            id: id.into(),
            from_node: f.into(),
            to_node: t.into(),
            length: 1000.0,
            lanes: 1,
            speed_limit: 10.0,
            effective_vehicle_length: 7.0,
            reaction_time_factor: 1.0,
            in_pricing_zone: false,
        };
        Network::from_def(&NetworkDef {
            nodes: ["o", "m", "n", "d"].iter().map(|s| node(s)).collect(),
            links: vec![
                link("om", "o", "m"),
                link("md", "m", "d"),
                link("on", "o", "n"),
                link("nd", "n", "d"),
                link("mn", "m", "n"),
            ],
            pricing_zone: vec![],
        })
        .unwrap()
    }

    fn constant(net: &Network, costs: &[f64], intervals: usize) -> CostSkims {
        let clock = Clock::new(1.0, 600.0, intervals).unwrap();
        let mut s = CostSkims::free_flow(net, &clock);
        for (a, &c) in costs.iter().enumerate() {
            for t in [&mut s.travel_time, &mut s.ue_cost, &mut s.so_cost] {
                t[a] = vec![c; intervals];
            }
        }
        s
    }

    fn od(net: &Network) -> (NodeIdx, NodeIdx) {
        (net.node_by_id("o").unwrap(), net.node_by_id("d").unwrap())
    }

    #[test]
    fn parallel_routes_pick_the_cheaper() {
        let net = diamond();
        let s = constant(&net, &[100.0, 200.0, 200.0, 220.0, 1000.0], 2);
        let (o, d) = od(&net);
        let f = td_shortest_path(&net, &s, o, d, 0, CostKind::Ue).unwrap();
        assert_eq!(f.path.links(), &[LinkIdx(0), LinkIdx(1)]);
        assert_eq!(f.cost, 300.0);
    }

    #[test]
    fn cost_flip_between_intervals() {
        let net = diamond();
        let mut s = constant(&net, &[100.0, 100.0, 150.0, 150.0, 1000.0], 3);
        // route A becomes expensive for vehicles reaching its links in interval 1+
        for tau in 1..3 {
            s.ue_cost[0][tau] = 400.0;
            s.ue_cost[1][tau] = 400.0;
        }
        let (o, d) = od(&net);
        let a = td_shortest_path(&net, &s, o, d, 0, CostKind::Ue).unwrap();
        let b = td_shortest_path(&net, &s, o, d, 1, CostKind::Ue).unwrap();
        assert_eq!(a.path.links(), &[LinkIdx(0), LinkIdx(1)]);
        assert_eq!(b.path.links(), &[LinkIdx(2), LinkIdx(3)]);
        assert_eq!(b.cost, 300.0);
    }

    #[test]
    fn arrival_interval_is_used_for_downstream_links() {
        let net = diamond();
        let mut s = constant(&net, &[500.0, 100.0, 300.0, 320.0, 1000.0], 2);
        // depart at 300 s; route A reaches link 1 at 800 s (interval 1)
        s.ue_cost[1][1] = 1000.0;
        let (o, d) = od(&net);
        let f = td_shortest_path(&net, &s, o, d, 0, CostKind::Ue).unwrap();
        assert_eq!(f.path.links(), &[LinkIdx(2), LinkIdx(3)]);
        let a = Path::new(&net, vec![LinkIdx(0), LinkIdx(1)]).unwrap();
        assert_eq!(evaluate_path(&s, &a, 0, CostKind::Ue).0, 1500.0);
    }

    #[test]
    fn ties_go_to_the_smallest_link_sequence() {
        let net = diamond();
        let s = constant(&net, &[100.0, 100.0, 100.0, 100.0, 0.0], 1);
        let (o, d) = od(&net);
        let f = td_shortest_path(&net, &s, o, d, 0, CostKind::Ue).unwrap();
        assert_eq!(f.path.links(), &[LinkIdx(0), LinkIdx(1)]);
        let g = distance_shortest_path(&net, o, d).unwrap();
        assert_eq!(g.links(), &[LinkIdx(0), LinkIdx(1)]);
    }

    #[test]
    fn origin_entry_delay_counts_once() {
        let net = diamond();
        let mut s = constant(&net, &[100.0, 100.0, 120.0, 100.0, 1000.0], 1);
        s.entry_wait[0][0] = 30.0;
        s.entry_marginal[0][0] = 30.0;
        s.entry_marginal[2][0] = 0.0;
        let (o, d) = od(&net);
        let f = td_shortest_path(&net, &s, o, d, 0, CostKind::Ue).unwrap();
        assert_eq!(f.path.links(), &[LinkIdx(2), LinkIdx(3)]);
        let a = Path::new(&net, vec![LinkIdx(0), LinkIdx(1)]).unwrap();
        assert_eq!(evaluate_path(&s, &a, 0, CostKind::So).0, 230.0);
    }

    #[test]
    fn unreachable_names_the_pair() {
        let net = diamond();
        let s = constant(&net, &[1.0; 5], 1);
        let (o, d) = od(&net);
        let err = td_shortest_path(&net, &s, d, o, 0, CostKind::Ue).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("'d'") && msg.contains("'o'"), "{msg}");
        assert!(td_shortest_path(&net, &s, o, d, 5, CostKind::Ue).is_err());
    }

    #[test]
    fn so_search_ignores_ue_tolls() {
        let net = diamond();
        let mut s = constant(&net, &[100.0, 100.0, 150.0, 150.0, 1000.0], 1);
        let (o, d) = od(&net);
        let before = td_least_marginal_path(&net, &s, o, d, 0).unwrap();
        s.ue_cost[0][0] += 5000.0;
        let after = td_least_marginal_path(&net, &s, o, d, 0).unwrap();
        assert_eq!(before, after);
    }

    fn all_routes(net: &Network, o: NodeIdx, d: NodeIdx) -> Vec<Path> {
        fn rec(net: &Network, at: NodeIdx, d: NodeIdx, seq: &mut Vec<LinkIdx>, seen: &mut Vec<NodeIdx>, out: &mut Vec<Path>) {
            if at == d {
                out.push(Path::new(net, seq.clone()).unwrap());
                return;
            }
            for &a in net.outgoing(at) {
                let v = net.link(a).to;
                if seen.contains(&v) {
                    continue;
                }
                seq.push(a);
                seen.push(v);
                rec(net, v, d, seq, seen, out);
                seq.pop();
                seen.pop();
            }
        }
        let mut out = Vec::new();
        rec(net, o, d, &mut Vec::new(), &mut vec![o], &mut out);
        out
    }

    proptest! {
        #[test]
        fn constant_skims_match_enumeration(costs in proptest::collection::vec(1.0f64..500.0, 5)) {
            let net = diamond();
            let s = constant(&net, &costs, 1);
            let (o, d) = od(&net);
            let f = td_shortest_path(&net, &s, o, d, 0, CostKind::Ue).unwrap();
            let best = all_routes(&net, o, d)
                .iter()
                .map(|p| p.links().iter().map(|a| costs[a.0]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            prop_assert!((f.cost - best).abs() < 1e-9);
            let (c, _) = evaluate_path(&s, &f.path, 0, CostKind::Ue);
            prop_assert_eq!(c, f.cost);
        }

        #[test]
        fn time_dependent_search_is_no_worse_than_any_route(
            a in proptest::collection::vec(1.0f64..900.0, 5),
            rise in proptest::collection::vec(0.0f64..900.0, 5),
            tau in 0usize..2,
        ) {
            let net = diamond();
            let mut s = constant(&net, &a, 2);
            // costs never fall over time, so later arrival is never cheaper
            for (l, &r) in rise.iter().enumerate() {
                s.travel_time[l][1] = a[l] + r;
                s.ue_cost[l][1] = a[l] + r;
            }
            let (o, d) = od(&net);
            let f = td_shortest_path(&net, &s, o, d, tau, CostKind::Ue).unwrap();
            for p in all_routes(&net, o, d) {
                prop_assert!(f.cost <= evaluate_path(&s, &p, tau, CostKind::Ue).0 + 1e-9);
            }
        }
    }
}
