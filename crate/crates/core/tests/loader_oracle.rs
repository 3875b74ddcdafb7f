//! The loader against hand oracles: a point queue at a single bottleneck,
//! conservation and FIFO.

mod common;

use common::{bottleneck, BOTTLENECK_CAPACITY};
use mixdta::demand::VehicleClass;
use mixdta::flow::{load_trips, ClassReactionTimes, LoadingResult, Trip};
use mixdta::network::{Clock, Path};
use proptest::prelude::*;

/// Vehicles depart every `headway` steps; `n` of them.
fn run(n: u32, headway: u32) -> (LoadingResult, Vec<u32>) {
    let net = bottleneck();
    let clock = Clock::new(1.0, 300.0, 6).unwrap();
    let path = Path::from_ids(&net, &["feed", "neck"]).unwrap();
    let departures: Vec<u32> = (0..n).map(|i| i * headway).collect();
    let trips: Vec<Trip> = departures
        .iter()
        .map(|&d| Trip {
            class: VehicleClass::Ue,
            path: 0,
            departure_step: d,
        })
        .collect();
    let res = load_trips(&net, &[path], &trips, &clock, &ClassReactionTimes::default()).unwrap();
    (res, departures)
}

/// Continuous point queue at the bottleneck entrance: returns per-vehicle
/// trip times, seconds.
fn point_queue(departures: &[u32], feed_ff: f64, neck_ff: f64, mu: f64) -> Vec<f64> {
    let mut prev: Option<f64> = None;
    departures
        .iter()
        .map(|&d| {
            let arrive = f64::from(d) + feed_ff;
            let serve = match prev {
                Some(p) => arrive.max(p + 1.0 / mu),
                None => arrive,
            };
            prev = Some(serve);
            serve + neck_ff - f64::from(d)
        })
        .collect()
}

#[test]
fn delays_match_point_queue_within_one_step() {
    let (res, dep) = run(120, 2);
    let oracle = point_queue(&dep, 60.0, 100.0, BOTTLENECK_CAPACITY);
    let mut worst = 0.0f64;
    for (v, want) in res.vehicles().iter().zip(&oracle) {
        let got = f64::from(v.exit_step - v.departure_step);
        worst = worst.max((got - want).abs());
    }
    assert!(worst <= 1.0 + 1e-9, "worst per-vehicle deviation {worst} s");
    // The queue really formed: the last vehicle waited minutes.
    assert!(oracle[119] - 160.0 > 150.0);
}

#[test]
fn tstt_matches_queue_triangle() {
    let n = 120.0;
    let (res, _) = run(120, 2);
    let lambda = 0.5;
    let mu = BOTTLENECK_CAPACITY;
    // Free-flow time plus the area between the arrival and service curves.
    let delay = n * n / 2.0 * (1.0 / mu - 1.0 / lambda);
    let oracle_s = n * 160.0 + delay;
    let got_s = res.tstt_veh_h() * 3600.0;
    // One step per vehicle, plus the half-headway of the continuous area.
    assert!((got_s - oracle_s).abs() <= n * 1.0 + n / mu, "{got_s} vs {oracle_s}");
}

#[test]
fn uncongested_trips_run_at_free_flow() {
    let (res, _) = run(30, 5);
    for v in res.vehicles() {
        assert_eq!(v.exit_step - v.departure_step, 160);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conservation_and_fifo(n in 1u32..150, headway in 1u32..6) {
        let (res, _) = run(n, headway);
        prop_assert_eq!(res.entered(), n as usize);
        prop_assert_eq!(res.exited(), n as usize);
        // Single path, single origin: order of departure is order of exit.
        let exits: Vec<u32> = res.vehicles().iter().map(|v| v.exit_step).collect();
        prop_assert!(exits.windows(2).all(|w| w[0] <= w[1]));
        let sum: f64 = res.vehicles().iter().map(|v| f64::from(v.exit_step - v.departure_step)).sum();
        prop_assert!((sum / 3600.0 - res.tstt_veh_h()).abs() < 1e-9);
    }
}

