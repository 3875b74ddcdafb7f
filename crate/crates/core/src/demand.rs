//! Time-dependent OD demand and its split into UE and SO vehicle classes.

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::network::{Network, NodeIdx};

/// Routing behaviour of a vehicle. UE vehicles are human-driven and selfish;
/// SO vehicles are automated and centrally routed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleClass {
    Ue,
    So,
}

impl VehicleClass {
    pub const ALL: [VehicleClass; 2] = [VehicleClass::Ue, VehicleClass::So];

    pub fn as_str(self) -> &'static str {
        match self {
            VehicleClass::Ue => "ue",
            VehicleClass::So => "so",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OdPair {
    pub origin: NodeIdx,
    pub destination: NodeIdx,
}

/// Total demand of one OD pair per assignment interval.
#[derive(Debug, Clone, PartialEq)]
pub struct OdDemand {
    pub od: OdPair,
    pub origin_id: String,
    pub destination_id: String,
    /// Vehicles per interval (may be fractional).
    pub total: Vec<f64>,
    /// Per-interval SO ratio overriding the global one.
    pub so_ratio: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TotalDemand {
    pub intervals: usize,
    pub ods: Vec<OdDemand>,
}

impl TotalDemand {
    pub fn total_vehicles(&self) -> f64 {
        self.ods.iter().flat_map(|d| d.total.iter()).sum()
    }

    /// Multiplies every total by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for d in &mut out.ods {
            for q in &mut d.total {
                *q *= factor;
            }
        }
        out
    }
}

/// Demand of one OD pair split by class, per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct OdClassDemand {
    pub od: OdPair,
    pub origin_id: String,
    pub destination_id: String,
    pub ue: Vec<f64>,
    pub so: Vec<f64>,
}

impl OdClassDemand {
    pub fn class(&self, class: VehicleClass) -> &[f64] {
        match class {
            VehicleClass::Ue => &self.ue,
            VehicleClass::So => &self.so,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDemand {
    pub intervals: usize,
    pub ods: Vec<OdClassDemand>,
}

impl ClassDemand {
    pub fn class_total(&self, class: VehicleClass) -> f64 {
        self.ods.iter().flat_map(|d| d.class(class).iter()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.class_total(VehicleClass::Ue) + self.class_total(VehicleClass::So) == 0.0
    }
}

/// Noise on the SO share: per (OD, interval) draw `β ~ U(0, beta_max)` then
/// `ε ~ U(−β·q, β·q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub seed: u64,
    #[serde(default = "NoiseConfig::default_beta_max")]
    pub beta_max: f64,
}

impl NoiseConfig {
    fn default_beta_max() -> f64 {
        0.2
    }

    pub fn new(seed: u64) -> Self {
        NoiseConfig {
            seed,
            beta_max: Self::default_beta_max(),
        }
    }
}

fn check_ratio(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::range("so_ratio", r, 0.0, 1.0))
    }
}

fn split_with<F>(demand: &TotalDemand, so_ratio: f64, mut so_share: F) -> Result<ClassDemand>
where
    F: FnMut(&OdDemand, usize, f64, f64) -> f64,
{
    check_ratio(so_ratio)?;
    let mut ods = Vec::with_capacity(demand.ods.len());
    for d in &demand.ods {
        let mut ue = Vec::with_capacity(demand.intervals);
        let mut so = Vec::with_capacity(demand.intervals);
        for (tau, &q) in d.total.iter().enumerate() {
            let r = d.so_ratio[tau].unwrap_or(so_ratio);
            check_ratio(r)?;
            let q2 = so_share(d, tau, q, r);
            so.push(q2);
            ue.push(q - q2);
        }
        ods.push(OdClassDemand {
            od: d.od,
            origin_id: d.origin_id.clone(),
            destination_id: d.destination_id.clone(),
            ue,
            so,
        });
    }
    Ok(ClassDemand {
        intervals: demand.intervals,
        ods,
    })
}

/// Splits every (OD, interval) total as `q2 = r·q`, `q1 = q − q2`.
pub fn split_demand_uniform(demand: &TotalDemand, so_ratio: f64) -> Result<ClassDemand> {
    split_with(demand, so_ratio, |_, _, q, r| r * q)
}

/// Splits with a uniform random perturbation of the SO share, clamped so
/// that `0 ≤ q2 ≤ q`. Draws are keyed on (seed, origin id, destination id,
/// interval) and do not depend on OD order.
pub fn split_demand_noisy(
    demand: &TotalDemand,
    so_ratio: f64,
    noise: &NoiseConfig,
) -> Result<ClassDemand> {
    if !(0.0..=1.0).contains(&noise.beta_max) {
        return Err(Error::range("beta_max", noise.beta_max, 0.0, 1.0));
    }
    split_with(demand, so_ratio, |d, tau, q, r| {
        // Pure fleets stay pure.
        if r <= 0.0 || r >= 1.0 {
            return r * q;
        }
        let mut rng = pair_rng(noise.seed, &d.origin_id, &d.destination_id, tau);
        let beta = noise.beta_max * rng.gen::<f64>();
        let eps = beta * q * (2.0 * rng.gen::<f64>() - 1.0);
        (r * q + eps).clamp(0.0, q)
    })
}

fn pair_rng(seed: u64, origin: &str, destination: &str, interval: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((origin.len() as u64).to_le_bytes());
    h.update(origin.as_bytes());
    h.update((destination.len() as u64).to_le_bytes());
    h.update(destination.as_bytes());
    h.update((interval as u64).to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandRecord {
    pub origin: String,
    pub destination: String,
    pub interval_index: usize,
    pub total: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub so_ratio: Option<f64>,
}

/// Demand file: `{"records": [{origin, destination, interval_index, total, so_ratio?}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandFile {
    pub records: Vec<DemandRecord>,
}

impl DemandFile {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_file(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Resolves ids against `network` and lays records out on `intervals`
    /// intervals. OD pairs keep their first-appearance order.
    pub fn resolve(&self, network: &Network, intervals: usize) -> Result<TotalDemand> {
        let mut order: Vec<(String, String)> = Vec::new();
        let mut by_od: BTreeMap<(String, String), OdDemand> = BTreeMap::new();
        for r in &self.records {
            if r.origin == r.destination {
                return Err(Error::InvalidDemand(format!(
                    "origin equals destination '{}'",
                    r.origin
                )));
            }
            if !(r.total.is_finite() && r.total >= 0.0) {
                return Err(Error::InvalidDemand(format!(
                    "{} -> {} interval {}: total {} must be finite and >= 0",
                    r.origin, r.destination, r.interval_index, r.total
                )));
            }
            if r.interval_index >= intervals {
                return Err(Error::InvalidDemand(format!(
                    "{} -> {}: interval {} beyond horizon of {} intervals",
                    r.origin, r.destination, r.interval_index, intervals
                )));
            }
            if let Some(x) = r.so_ratio {
                check_ratio(x)?;
            }
            let key = (r.origin.clone(), r.destination.clone());
            if !by_od.contains_key(&key) {
                let od = OdPair {
                    origin: network.node_by_id(&r.origin)?,
                    destination: network.node_by_id(&r.destination)?,
                };
                order.push(key.clone());
                by_od.insert(
                    key.clone(),
                    OdDemand {
                        od,
                        origin_id: r.origin.clone(),
                        destination_id: r.destination.clone(),
                        total: vec![0.0; intervals],
                        so_ratio: vec![None; intervals],
                    },
                );
            }
            let d = by_od.get_mut(&key).unwrap();
            if d.total[r.interval_index] != 0.0 || d.so_ratio[r.interval_index].is_some() {
                return Err(Error::InvalidDemand(format!(
                    "duplicate record {} -> {} interval {}",
                    r.origin, r.destination, r.interval_index
                )));
            }
            d.total[r.interval_index] = r.total;
            d.so_ratio[r.interval_index] = r.so_ratio;
        }
        Ok(TotalDemand {
            intervals,
            ods: order
                .into_iter()
                .map(|k| by_od.remove(&k).unwrap())
                .collect(),
        })
    }
}
