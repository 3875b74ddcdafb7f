//! Road network, pricing zone, paths and the simulation clock.

mod clock;
mod def;

use std::collections::HashMap;
use std::fmt;
use std::path::Path as FsPath;

pub use clock::Clock;
pub use def::{
    validate_network, LinkDef, NetworkDef, NodeDef, Violation, DEFAULT_EFFECTIVE_VEHICLE_LENGTH,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIdx(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkIdx(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub is_centroid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: String,
    pub from: NodeIdx,
    pub to: NodeIdx,
    /// meters
    pub length: f64,
    pub lanes: u32,
    /// meters per second
    pub speed_limit: f64,
    /// meters
    pub effective_vehicle_length: f64,
    pub reaction_time_factor: f64,
    pub in_pricing_zone: bool,
}

impl Link {
    /// Free-flow traversal time `l / V`, seconds.
    pub fn free_flow_time(&self) -> f64 {
        self.length / self.speed_limit
    }

    /// Vehicles the link holds at jam density, over all lanes.
    pub fn jam_storage(&self) -> f64 {
        self.length * f64::from(self.lanes) / self.effective_vehicle_length
    }

    pub fn length_km(&self) -> f64 {
        self.length / 1000.0
    }

    /// Lane-length weight `l·n` in lane-km.
    pub fn lane_km(&self) -> f64 {
        self.length_km() * f64::from(self.lanes)
    }
}

/// Validated, immutable network.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<Node>,
    links: Vec<Link>,
    outgoing: Vec<Vec<LinkIdx>>,
    incoming: Vec<Vec<LinkIdx>>,
    node_lookup: HashMap<String, NodeIdx>,
    link_lookup: HashMap<String, LinkIdx>,
}

impl Network {
    pub fn from_def(def: &NetworkDef) -> Result<Self> {
        let violations = validate_network(def);
        if !violations.is_empty() {
            return Err(Error::InvalidNetwork(violations));
        }
        let nodes: Vec<Node> = def
            .nodes
            .iter()
            .map(|n| Node {
                id: n.id.clone(),
                is_centroid: n.is_centroid,
            })
            .collect();
        let node_lookup: HashMap<String, NodeIdx> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), NodeIdx(i)))
            .collect();
        let mut outgoing = vec![Vec::new(); nodes.len()];
        let mut incoming = vec![Vec::new(); nodes.len()];
        let mut links = Vec::with_capacity(def.links.len());
        for (i, l) in def.links.iter().enumerate() {
            let from = node_lookup[&l.from_node];
            let to = node_lookup[&l.to_node];
            outgoing[from.0].push(LinkIdx(i));
            incoming[to.0].push(LinkIdx(i));
            links.push(Link {
                id: l.id.clone(),
                from,
                to,
                length: l.length,
                lanes: l.lanes,
                speed_limit: l.speed_limit,
                effective_vehicle_length: l.effective_vehicle_length,
                reaction_time_factor: l.reaction_time_factor,
                in_pricing_zone: def.is_zone_link(l),
            });
        }
        let link_lookup = links
            .iter()
            .enumerate()
            .map(|(i, l)| (l.id.clone(), LinkIdx(i)))
            .collect();
        Ok(Network {
            nodes,
            links,
            outgoing,
            incoming,
            node_lookup,
            link_lookup,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_def(&NetworkDef::from_json_str(s)?)
    }

    pub fn from_file(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    /// Round-trips back to the file representation.
    pub fn to_def(&self) -> NetworkDef {
        NetworkDef {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDef {
                    id: n.id.clone(),
                    is_centroid: n.is_centroid,
                })
                .collect(),
            links: self
                .links
                .iter()
                .map(|l| LinkDef {
                    id: l.id.clone(),
                    from_node: self.node(l.from).id.clone(),
                    to_node: self.node(l.to).id.clone(),
                    length: l.length,
                    lanes: l.lanes,
                    speed_limit: l.speed_limit,
                    effective_vehicle_length: l.effective_vehicle_length,
                    reaction_time_factor: l.reaction_time_factor,
                    in_pricing_zone: l.in_pricing_zone,
                })
                .collect(),
            pricing_zone: self
                .links
                .iter()
                .filter(|l| l.in_pricing_zone)
                .map(|l| l.id.clone())
                .collect(),
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, idx: NodeIdx) -> &Node {
        &self.nodes[idx.0]
    }

    pub fn link(&self, idx: LinkIdx) -> &Link {
        &self.links[idx.0]
    }

    pub fn link_indices(&self) -> impl Iterator<Item = LinkIdx> {
        (0..self.links.len()).map(LinkIdx)
    }

    pub fn outgoing(&self, node: NodeIdx) -> &[LinkIdx] {
        &self.outgoing[node.0]
    }

    pub fn incoming(&self, node: NodeIdx) -> &[LinkIdx] {
        &self.incoming[node.0]
    }

    pub fn node_by_id(&self, id: &str) -> Result<NodeIdx> {
        self.node_lookup
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownId {
                kind: "node",
                id: id.to_string(),
            })
    }

    pub fn link_by_id(&self, id: &str) -> Result<LinkIdx> {
        self.link_lookup
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownId {
                kind: "link",
                id: id.to_string(),
            })
    }

    /// Links of the pricing zone, in declaration order (possibly empty).
    pub fn zone_links(&self) -> Vec<LinkIdx> {
        self.link_indices()
            .filter(|&a| self.link(a).in_pricing_zone)
            .collect()
    }

    pub fn centroids(&self) -> impl Iterator<Item = NodeIdx> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_centroid)
            .map(|(i, _)| NodeIdx(i))
    }
}

/// A contiguous, acyclic link sequence between two nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    links: Vec<LinkIdx>,
    origin: NodeIdx,
    destination: NodeIdx,
}

impl Path {
    pub fn new(network: &Network, links: Vec<LinkIdx>) -> Result<Self> {
        check_contiguous(network, &links)?;
        let origin = network.link(links[0]).from;
        let destination = network.link(*links.last().unwrap()).to;
        Ok(Path {
            links,
            origin,
            destination,
        })
    }

    pub fn from_ids<S: AsRef<str>>(network: &Network, ids: &[S]) -> Result<Self> {
        let links = ids
            .iter()
            .map(|s| network.link_by_id(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(network, links)
    }

    pub fn links(&self) -> &[LinkIdx] {
        &self.links
    }

    pub fn origin(&self) -> NodeIdx {
        self.origin
    }

    pub fn destination(&self) -> NodeIdx {
        self.destination
    }

    pub fn contains(&self, link: LinkIdx) -> bool {
        self.links.contains(&link)
    }

    pub fn length(&self, network: &Network) -> f64 {
        self.links.iter().map(|&a| network.link(a).length).sum()
    }

    /// Meters driven on pricing-zone links.
    pub fn zone_distance(&self, network: &Network) -> f64 {
        zone_sum(network, &self.links)
    }

    pub fn display<'a>(&'a self, network: &'a Network) -> PathDisplay<'a> {
        PathDisplay {
            path: self,
            network,
        }
    }
}

pub struct PathDisplay<'a> {
    path: &'a Path,
    network: &'a Network,
}

impl fmt::Display for PathDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &a) in self.path.links.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            f.write_str(&self.network.link(a).id)?;
        }
        Ok(())
    }
}

fn check_contiguous(network: &Network, links: &[LinkIdx]) -> Result<()> {
    let Some(&first) = links.first() else {
        return Err(Error::InvalidPath("empty link sequence".into()));
    };
    if let Some(bad) = links.iter().find(|a| a.0 >= network.links.len()) {
        return Err(Error::InvalidPath(format!("link index {} out of range", bad.0)));
    }
    let mut seen = vec![network.link(first).from];
    for (i, pair) in links.windows(2).enumerate() {
        let (a, b) = (network.link(pair[0]), network.link(pair[1]));
        if a.to != b.from {
            return Err(Error::InvalidPath(format!(
                "discontinuity at position {}: link '{}' ends at '{}' but link '{}' starts at '{}'",
                i + 1,
                a.id,
                network.node(a.to).id,
                b.id,
                network.node(b.from).id
            )));
        }
    }
    for &a in links {
        let to = network.link(a).to;
        if seen.contains(&to) {
            return Err(Error::InvalidPath(format!(
                "cycle: node '{}' revisited",
                network.node(to).id
            )));
        }
        seen.push(to);
    }
    Ok(())
}

fn zone_sum(network: &Network, links: &[LinkIdx]) -> f64 {
    links
        .iter()
        .map(|&a| network.link(a))
        .filter(|l| l.in_pricing_zone)
        .map(|l| l.length)
        .sum()
}

/// Distance (meters) a link sequence travels inside the pricing zone.
///
/// Fails on the first discontinuity when `links` is not a valid path.
pub fn path_zone_distance(links: &[LinkIdx], network: &Network) -> Result<f64> {
    check_contiguous(network, links)?;
    Ok(zone_sum(network, links))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// a -> b -> c -> d with a bypass a -> d. Links ab (400 m) and bc (600 m)
    /// are tolled.
    pub(crate) fn chain() -> Network {
        let node = |id: &str, c: bool| NodeDef {
            id: id.into(),
            is_centroid: c,
        };
        let link = |id: &str, f: &str, t: &str, len: f64, zone: bool| LinkDef {
            id: id.into(),
            from_node: f.into(),
            to_node: t.into(),
            length: len,
            lanes: 1,
            speed_limit: 10.0,
            effective_vehicle_length: 7.0,
            reaction_time_factor: 1.0,
            in_pricing_zone: zone,
        };
        Network::from_def(&NetworkDef {
            nodes: vec![
                node("a", true),
                node("b", false),
                node("c", false),
                node("d", true),
            ],
            links: vec![
                link("ab", "a", "b", 400.0, true),
                link("bc", "b", "c", 600.0, true),
                link("cd", "c", "d", 1300.0, false),
                link("ad", "a", "d", 2300.0, false),
            ],
            pricing_zone: vec![],
        })
        .unwrap()
    }

    #[test]
    fn zone_distance_examples() {
        let n = chain();
        let bypass = Path::from_ids(&n, &["ad"]).unwrap();
        assert_eq!(bypass.zone_distance(&n), 0.0);
        let through = Path::from_ids(&n, &["ab", "bc", "cd"]).unwrap();
        assert_eq!(through.zone_distance(&n), 1000.0);
        assert_eq!(path_zone_distance(through.links(), &n).unwrap(), 1000.0);
    }

    #[test]
    fn fully_tolled_network_charges_whole_length() {
        let mut def = chain().to_def();
        for l in &mut def.links {
            l.in_pricing_zone = true;
        }
        let n = Network::from_def(&def).unwrap();
        let p = Path::from_ids(&n, &["ad"]).unwrap();
        assert_eq!(p.zone_distance(&n), 2300.0);
    }

    #[test]
    fn discontinuity_is_reported_at_its_position() {
        let n = chain();
        let ids = [n.link_by_id("ab").unwrap(), n.link_by_id("cd").unwrap()];
        let err = path_zone_distance(&ids, &n).unwrap_err().to_string();
        assert!(err.contains("position 1"), "{err}");
        assert!(err.contains("'ab'") && err.contains("'cd'"), "{err}");
    }

    #[test]
    fn def_round_trip() {
        let n = chain();
        let again = Network::from_def(&n.to_def()).unwrap();
        assert_eq!(again.links(), n.links());
    }
}
