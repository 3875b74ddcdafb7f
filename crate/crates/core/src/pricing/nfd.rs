//! Network fundamental diagram over a link set.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{LinkState, LoadingResult};
use crate::network::{LinkIdx, Network};

/// Lane-length weighted mean density (veh/km/lane) and flow (veh/h/lane).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NfdPoint {
    pub k: f64,
    pub q: f64,
}

/// `(K̄, Q̄)` of `links` given per-link states of one interval (indexed by link).
pub fn nfd_point(states: &[LinkState], links: &[LinkIdx], network: &Network) -> Result<NfdPoint> {
    if links.is_empty() {
        return Err(Error::EmptyLinkSet);
    }
    let (mut w, mut k, mut q) = (0.0, 0.0, 0.0);
    for &a in links {
        let lane_km = network.link(a).lane_km();
        let s = states
            .get(a.0)
            .ok_or_else(|| Error::Structural(format!("no state for link index {}", a.0)))?;
        w += lane_km;
        k += s.density * lane_km;
        q += s.flow * lane_km;
    }
    Ok(NfdPoint { k: k / w, q: q / w })
}

/// One NFD point per assignment interval.
pub fn nfd_series(loading: &LoadingResult, network: &Network, links: &[LinkIdx]) -> Result<Vec<NfdPoint>> {
    (0..loading.clock().intervals)
        .map(|tau| nfd_point(&loading.interval_states(tau), links, network))
        .collect()
}

/// Setpoint estimate from an untolled NFD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalDensity {
    pub k_cr: f64,
    pub q_max: f64,
    pub interval: usize,
    /// Flow kept rising up to the density peak, so the true maximum was
    /// probably never reached.
    pub low_confidence: bool,
}

/// `K̄` at the interval of maximum `Q̄` among the loading phase (up to and
/// including the first density peak). Ties go to the earlier interval.
pub fn estimate_critical_density(series: &[NfdPoint]) -> Result<CriticalDensity> {
    if series.is_empty() {
        return Err(Error::SeriesTooShort { needed: 1, got: 0 });
    }
    let mut peak = 0;
    for (i, p) in series.iter().enumerate() {
        if p.k > series[peak].k {
            peak = i;
        }
    }
    let mut best = 0;
    for i in 1..=peak {
        if series[i].q > series[best].q {
            best = i;
        }
    }
    let p = series[best];
    if p.k.is_nan() || p.k <= 0.0 {
        return Err(Error::Config(
            "untolled run carries no traffic through the link set; cannot estimate K_cr".into(),
        ));
    }
    Ok(CriticalDensity {
        k_cr: p.k,
        q_max: p.q,
        interval: best,
        low_confidence: best == peak,
    })
}

#[derive(Serialize)]
struct Row {
    interval_index: usize,
    k_veh_km: f64,
    q_veh_h: f64,
}

/// Writes `interval_index,k_veh_km,q_veh_h`.
pub fn write_nfd<W: Write>(series: &[NfdPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, p) in series.iter().enumerate() {
        w.serialize(Row {
            interval_index: i,
            k_veh_km: p.k,
            q_veh_h: p.q,
        })?;
    }
    w.flush().map_err(|e| Error::io("<nfd>", e))?;
    Ok(())
}
