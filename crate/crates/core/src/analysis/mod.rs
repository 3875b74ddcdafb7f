//! Scenario metrics: system travel time, NFD loop area, zone summaries.

use std::io::Write;

use serde::Serialize;

use crate::demand::VehicleClass;
use crate::error::{Error, Result};
use crate::flow::LoadingResult;
use crate::network::Network;
use crate::pricing::{toll_seconds, NfdPoint, TollSchedule};

/// Total system travel time, vehicle-hours: departure to exit, origin waits
/// included. Fails on an incomplete loading.
pub fn tstt(loading: &LoadingResult) -> Result<f64> {
    loading.ensure_complete()?;
    let dt = loading.clock().step_s;
    Ok(loading
        .vehicles()
        .iter()
        .map(|v| f64::from(v.exit_step - v.departure_step) * dt)
        .sum::<f64>()
        / 3600.0)
}

/// Absolute shoelace area of the closed `(K̄, Q̄)` trajectory.
pub fn hysteresis_area(series: &[NfdPoint]) -> Result<f64> {
    if series.len() < 3 {
        return Err(Error::SeriesTooShort {
            needed: 3,
            got: series.len(),
        });
    }
    let n = series.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (series[i], series[(i + 1) % n]);
            a.k * b.q - b.k * a.q
        })
        .sum();
    Ok(twice.abs() / 2.0)
}

/// Zone travel times and tolls of one run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ZoneSummary {
    /// Mean minutes spent on zone links per UE vehicle that used the zone.
    pub ue_zone_tt_min: Option<f64>,
    pub so_zone_tt_min: Option<f64>,
    /// Mean toll per UE vehicle that used the zone, $.
    pub mean_toll_usd: f64,
    pub ue_vehicles: usize,
    pub so_vehicles: usize,
}

/// Summarizes zone use. Only zone-link traversals that begin in one of
/// `window` intervals count (all intervals when `None`). A vehicle counts
/// when it has at least one such traversal.
pub fn class_zone_summary(
    network: &Network,
    loading: &LoadingResult,
    schedule: Option<&TollSchedule>,
    window: Option<&[usize]>,
) -> ZoneSummary {
    let clock = loading.clock();
    let dt = clock.step_s;
    let in_window = |tau: usize| window.is_none_or(|w| w.contains(&tau));
    let mut time = [0.0f64; 2];
    let mut count = [0usize; 2];
    let mut toll = 0.0;
    for v in loading.vehicles() {
        let mut t = 0.0;
        let mut paid = 0.0;
        let mut used = false;
        for (a, entry, exit) in loading.zone_spans(network, v) {
            let tau = clock.interval_of_step(entry as usize);
            if !in_window(tau) {
                continue;
            }
            used = true;
            t += f64::from(exit - entry) * dt;
            if let Some(s) = schedule {
                paid += s.link_toll(network, a, tau);
            }
        }
        if !used {
            continue;
        }
        let c = match v.class {
            VehicleClass::Ue => 0,
            VehicleClass::So => 1,
        };
        time[c] += t / 60.0;
        count[c] += 1;
        if v.class == VehicleClass::Ue {
            toll += paid;
        }
    }
    let mean = |c: usize| (count[c] > 0).then(|| time[c] / count[c] as f64);
    ZoneSummary {
        ue_zone_tt_min: mean(0),
        so_zone_tt_min: mean(1),
        mean_toll_usd: if count[0] > 0 { toll / count[0] as f64 } else { 0.0 },
        ue_vehicles: count[0],
        so_vehicles: count[1],
    }
}

/// Toll in minutes at value of time `vot` ($/h).
pub fn toll_minutes(dollars: f64, vot: f64) -> f64 {
    toll_seconds(dollars, vot) / 60.0
}

/// UE zone-time saving per minute-equivalent of toll. `None` without a toll
/// or without UE zone users in either run.
pub fn benefit_cost_ratio(untolled: &ZoneSummary, tolled: &ZoneSummary, vot: f64) -> Option<f64> {
    if tolled.mean_toll_usd <= 0.0 {
        return None;
    }
    let saving = untolled.ue_zone_tt_min? - tolled.ue_zone_tt_min?;
    Some(saving / toll_minutes(tolled.mean_toll_usd, vot))
}

/// One row of the metrics report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioMetrics {
    pub scenario_id: String,
    pub so_ratio: f64,
    pub tolled: bool,
    pub tstt_veh_h: f64,
    /// Mean zone density over the reporting window, veh/km.
    pub zone_k_mean: f64,
    pub ue_zone_tt_min: Option<f64>,
    pub so_zone_tt_min: Option<f64>,
    pub mean_toll_usd: f64,
    pub bc_ratio: Option<f64>,
    pub hysteresis_area: f64,
}

/// Mean of `series[τ].k` over `window` (all intervals when empty).
pub fn window_mean_density(series: &[NfdPoint], window: &[usize]) -> f64 {
    if window.is_empty() {
        return series.iter().map(|p| p.k).sum::<f64>() / series.len().max(1) as f64;
    }
    window.iter().map(|&t| series[t].k).sum::<f64>() / window.len() as f64
}

/// Writes the metrics report, one row per scenario.
pub fn write_metrics<W: Write>(rows: &[ScenarioMetrics], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<metrics>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[(f64, f64)]) -> Vec<NfdPoint> {
        v.iter().map(|&(k, q)| NfdPoint { k, q }).collect()
    }

    #[test]
    fn square_loop() {
        let s = pts(&[(10.0, 400.0), (20.0, 400.0), (20.0, 500.0), (10.0, 500.0)]);
        assert_eq!(hysteresis_area(&s).unwrap(), 1000.0);
        let mut r = s.clone();
        r.reverse();
        assert_eq!(hysteresis_area(&r).unwrap(), 1000.0);
    }

    #[test]
    fn retraced_curve_has_no_area() {
        let s = pts(&[(0.0, 0.0), (10.0, 300.0), (20.0, 450.0), (10.0, 300.0), (0.0, 0.0)]);
        assert_eq!(hysteresis_area(&s).unwrap(), 0.0);
        assert!(hysteresis_area(&s[..2]).is_err());
    }

    #[test]
    fn toll_minutes_examples() {
        assert!((toll_minutes(0.24, 15.0) - 0.96).abs() < 1e-12);
        let a = ZoneSummary {
            ue_zone_tt_min: Some(10.0),
            ..Default::default()
        };
        let b = ZoneSummary {
            ue_zone_tt_min: Some(8.0),
            mean_toll_usd: 0.5,
            ..Default::default()
        };
        assert!((benefit_cost_ratio(&a, &b, 15.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(benefit_cost_ratio(&a, &a, 15.0), None);
    }

    proptest! {
        #[test]
        fn area_translation_invariant_and_bilinear(
            v in proptest::collection::vec((0.0f64..50.0, 0.0f64..2000.0), 3..12),
            dx in -100.0f64..100.0, dy in -100.0f64..100.0,
            sx in 0.1f64..10.0, sy in 0.1f64..10.0,
        ) {
            let s = pts(&v);
            let a = hysteresis_area(&s).unwrap();
            let t: Vec<NfdPoint> = s.iter().map(|p| NfdPoint { k: p.k + dx, q: p.q + dy }).collect();
            let tol = 1e-7 * (1.0 + a) * 1e3;
            prop_assert!((hysteresis_area(&t).unwrap() - a).abs() < tol);
            let sc: Vec<NfdPoint> = s.iter().map(|p| NfdPoint { k: p.k * sx, q: p.q * sy }).collect();
            prop_assert!((hysteresis_area(&sc).unwrap() - a * sx * sy).abs() < tol * sx * sy);
        }
    }
}
