mod common;

use mixdta::equilibrium::{solve_mixed_equilibrium, SolverConfig};
use mixdta::network::Clock;

fn clock() -> Clock {
    Clock::new(1.0, 300.0, 8).unwrap()
}

fn cfg() -> SolverConfig {
    SolverConfig {
        max_iterations: 60,
        ..SolverConfig::default()
    }
}

#[test]
fn two_route_ue_spreads_over_both_routes() {
    let net = common::two_route();
    // Well beyond the short route's capacity of ~0.2 veh/s.
    let d = common::od_demand(&net, "O", "D", vec![150.0, 150.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], vec![0.0; 8]);
    let eq = solve_mixed_equilibrium(&net, &d, &clock(), &cfg(), None).unwrap();
    assert!(eq.final_gap() < 0.05, "gap {}", eq.final_gap());
    let long = net.link_by_id("long").unwrap();
    let on_long: u32 = eq.loading.link_states(long).iter().map(|s| s.entering).sum();
    assert!(on_long > 0, "congestion should push some drivers to the long route");
    assert_eq!(eq.loading.exited(), 300);
}

#[test]
fn light_demand_takes_the_short_route_only() {
    let net = common::two_route();
    let d = common::od_demand(&net, "O", "D", vec![10.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], vec![0.0; 8]);
    let eq = solve_mixed_equilibrium(&net, &d, &clock(), &cfg(), None).unwrap();
    let long = net.link_by_id("long").unwrap();
    assert!(eq.loading.link_states(long).iter().all(|s| s.entering == 0));
    assert_eq!(eq.converged_at, Some(2));
}

#[test]
fn braess_system_optimum_no_worse_than_user_equilibrium() {
    let net = common::braess();
    let q = vec![200.0, 200.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let ue = common::od_demand(&net, "O", "D", q.clone(), vec![0.0; 8]);
    let so = common::od_demand(&net, "O", "D", vec![0.0; 8], q);
    let a = solve_mixed_equilibrium(&net, &ue, &clock(), &cfg(), None).unwrap();
    let b = solve_mixed_equilibrium(&net, &so, &clock(), &cfg(), None).unwrap();
    let (tu, ts) = (a.loading.tstt_veh_h(), b.loading.tstt_veh_h());
    assert!(ts <= tu * 1.01, "SO {ts} vs UE {tu}");
}

#[test]
fn zero_demand_converges_immediately() {
    let net = common::braess();
    let d = common::od_demand(&net, "O", "D", vec![0.0; 8], vec![0.0; 8]);
    let eq = solve_mixed_equilibrium(&net, &d, &clock(), &cfg(), None).unwrap();
    assert_eq!(eq.converged_at, Some(1));
    assert_eq!(eq.loading.tstt_veh_h(), 0.0);
}

#[test]
fn log_is_deterministic() {
    let net = common::braess();
    let d = common::od_demand(&net, "O", "D", vec![120.0, 80.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], vec![40.0, 60.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let a = solve_mixed_equilibrium(&net, &d, &clock(), &cfg(), None).unwrap();
    let b = solve_mixed_equilibrium(&net, &d, &clock(), &cfg(), None).unwrap();
    assert_eq!(a.log, b.log);
}
