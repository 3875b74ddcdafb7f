//! Serialized network definition and its validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Default effective vehicle length (vehicle plus minimum gap), meters.
pub const DEFAULT_EFFECTIVE_VEHICLE_LENGTH: f64 = 7.0;

fn default_vehicle_length() -> f64 {
    DEFAULT_EFFECTIVE_VEHICLE_LENGTH
}

fn default_reaction_factor() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDef {
    pub id: String,
    #[serde(default)]
    pub is_centroid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDef {
    pub id: String,
    pub from_node: String,
    pub to_node: String,
    /// meters
    pub length: f64,
    pub lanes: u32,
    /// meters per second
    pub speed_limit: f64,
    #[serde(default = "default_vehicle_length")]
    pub effective_vehicle_length: f64,
    #[serde(default = "default_reaction_factor")]
    pub reaction_time_factor: f64,
    #[serde(default)]
    pub in_pricing_zone: bool,
}

/// Network file contents. A link belongs to the pricing zone when it is
/// flagged `in_pricing_zone` or listed in `pricing_zone`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDef {
    pub nodes: Vec<NodeDef>,
    pub links: Vec<LinkDef>,
    #[serde(default)]
    pub pricing_zone: Vec<String>,
}

impl NetworkDef {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn is_zone_link(&self, link: &LinkDef) -> bool {
        link.in_pricing_zone || self.pricing_zone.iter().any(|z| z == &link.id)
    }
}

/// One broken invariant in a network definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// "node <id>", "link <id>" or "pricing_zone".
    pub subject: String,
    pub message: String,
}

impl Violation {
    fn link(id: &str, message: impl Into<String>) -> Self {
        Violation {
            subject: format!("link {id}"),
            message: message.into(),
        }
    }
    fn node(id: &str, message: impl Into<String>) -> Self {
        Violation {
            subject: format!("node {id}"),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Lists every invariant the definition breaks. Empty means the definition
/// builds into a [`super::Network`].
pub fn validate_network(def: &NetworkDef) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut node_ids = BTreeSet::new();
    for n in &def.nodes {
        if n.id.is_empty() {
            out.push(Violation::node(&n.id, "empty id"));
        }
        if !node_ids.insert(n.id.as_str()) {
            out.push(Violation::node(&n.id, "duplicate id"));
        }
    }

    let mut link_ids = BTreeSet::new();
    let mut degree: BTreeMap<&str, usize> = BTreeMap::new();
    for l in &def.links {
        if !link_ids.insert(l.id.as_str()) {
            out.push(Violation::link(&l.id, "duplicate id"));
        }
        for (end, node) in [("from_node", &l.from_node), ("to_node", &l.to_node)] {
            if node_ids.contains(node.as_str()) {
                *degree.entry(node.as_str()).or_default() += 1;
            } else {
                out.push(Violation::link(&l.id, format!("{end} '{node}' does not exist")));
            }
        }
        if l.from_node == l.to_node {
            out.push(Violation::link(&l.id, "self-loop"));
        }
        if !positive(l.length) {
            out.push(Violation::link(&l.id, format!("length {} must be > 0", l.length)));
        }
        if l.lanes == 0 {
            out.push(Violation::link(&l.id, "lanes must be >= 1"));
        }
        if !positive(l.speed_limit) {
            out.push(Violation::link(
                &l.id,
                format!("speed_limit {} must be > 0", l.speed_limit),
            ));
        }
        if !positive(l.effective_vehicle_length) {
            out.push(Violation::link(
                &l.id,
                format!(
                    "effective_vehicle_length {} must be > 0",
                    l.effective_vehicle_length
                ),
            ));
        }
        if !positive(l.reaction_time_factor) {
            out.push(Violation::link(
                &l.id,
                format!("reaction_time_factor {} must be > 0", l.reaction_time_factor),
            ));
        }
        if positive(l.length)
            && positive(l.effective_vehicle_length)
            && l.lanes > 0
            && l.length * f64::from(l.lanes) < l.effective_vehicle_length
        {
            out.push(Violation::link(&l.id, "cannot store a single vehicle"));
        }
    }

    for z in &def.pricing_zone {
        if !link_ids.contains(z.as_str()) {
            out.push(Violation {
                subject: "pricing_zone".into(),
                message: format!("link '{z}' does not exist"),
            });
        }
    }

    for n in def.nodes.iter().filter(|n| n.is_centroid) {
        if degree.get(n.id.as_str()).copied().unwrap_or(0) == 0 {
            out.push(Violation::node(&n.id, "centroid has no connected link"));
        }
    }

    out
}
