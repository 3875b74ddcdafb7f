//! PI toll controller and the outer pricing loop.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pricing::toll::{TollConfig, TollSchedule};

/// Controller memory for every tolling interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PiState {
    /// Setpoint, veh/km.
    pub k_cr: f64,
    /// Number of updates already applied; the next update is iteration
    /// `iteration + 1`.
    pub iteration: usize,
    pub alpha: Vec<f64>,
    pub k_prev: Vec<f64>,
}

impl PiState {
    pub fn new(k_cr: f64, intervals: usize) -> Result<Self> {
        if !(k_cr.is_finite() && k_cr > 0.0) {
            return Err(Error::range("k_cr", k_cr, f64::MIN_POSITIVE, f64::INFINITY));
        }
        Ok(PiState {
            k_cr,
            iteration: 0,
            alpha: vec![0.0; intervals],
            k_prev: vec![0.0; intervals],
        })
    }

    /// Applies one controller update to the intervals in `window` given the
    /// measured densities `k` (indexed by interval). Other intervals get 0.
    pub fn step(&mut self, k: &[f64], window: &[usize], config: &TollConfig) -> Vec<f64> {
        let i = self.iteration + 1;
        let mut next = vec![0.0; self.alpha.len()];
        for &tau in window {
            next[tau] = pi_update(i, self.alpha[tau], self.k_prev[tau], k[tau], self.k_cr, config);
        }
        for (tau, kp) in self.k_prev.iter_mut().enumerate() {
            *kp = k[tau];
        }
        self.alpha = next.clone();
        self.iteration = i;
        next
    }
}

/// One controller update for iteration `i ≥ 1`, clamped to `[0, ᾱ]`.
///
/// `i = 1`: `α = P_I (K̄ − K_cr)`. Later:
/// `α = α_prev + P_p (K̄ − K̄_prev) + P_I (K̄ − K_cr)`.
pub fn pi_update(
    i: usize,
    alpha_prev: f64,
    k_prev: f64,
    k: f64,
    k_cr: f64,
    config: &TollConfig,
) -> f64 {
    let raw = if i <= 1 {
        config.p_i * (k - k_cr)
    } else {
        alpha_prev + config.p_p * (k - k_prev) + config.p_i * (k - k_cr)
    };
    raw.clamp(0.0, config.alpha_max)
}

/// What the outer loop needs back from one lower-level solve.
#[derive(Debug, Clone)]
pub struct PlantResponse<O> {
    /// Zone density per interval, veh/km.
    pub zone_density: Vec<f64>,
    /// Congestion weights for the next schedule, `[link][interval]`.
    pub omega: Vec<Vec<f64>>,
    pub outcome: O,
}

/// The system being tolled: an equilibrium model, or a scripted stand-in.
pub trait TollPlant {
    type Outcome;
    fn respond(&mut self, schedule: &TollSchedule) -> Result<PlantResponse<Self::Outcome>>;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControllerRecord {
    pub iteration: usize,
    pub alpha: Vec<f64>,
    pub zone_density: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    Stalled,
    Saturated,
    IterationCap,
}

#[derive(Debug, Clone)]
pub struct BilevelOutcome<O> {
    /// Schedule with the lowest objective.
    pub schedule: TollSchedule,
    pub outcome: O,
    pub best_iteration: usize,
    pub objective: f64,
    pub log: Vec<ControllerRecord>,
    pub stop: StopReason,
}

/// `Σ_{τ ∈ window} |K̄_τ − K_cr|`.
pub fn tracking_objective(k: &[f64], k_cr: f64, window: &[usize]) -> f64 {
    window.iter().map(|&t| (k[t] - k_cr).abs()).sum()
}

/// Outer loop: solve the plant under the current schedule, measure zone
/// density, update the rates of the windowed intervals and the weights.
///
/// Starts untolled. Stops once the best objective has not improved by
/// `min_improvement` (relative) for `patience` iterations, when every
/// windowed rate sits at `ᾱ`, or at the iteration cap.
pub fn bilevel_solve<P: TollPlant>(
    plant: &mut P,
    config: &TollConfig,
    k_cr: f64,
    window: &[usize],
    links: usize,
    intervals: usize,
) -> Result<BilevelOutcome<P::Outcome>> {
    if let Some(&bad) = window.iter().find(|&&t| t >= intervals) {
        return Err(Error::Config(format!("window interval {bad} outside the horizon")));
    }
    let mut state = PiState::new(k_cr, intervals)?;
    let mut schedule = TollSchedule::zero(links, intervals);
    let mut log = Vec::new();
    let mut best: Option<(f64, usize, TollSchedule, P::Outcome)> = None;
    let mut stall = 0;

    for i in 1..=config.max_outer_iterations {
        let r = plant.respond(&schedule)?;
        if r.zone_density.len() != intervals {
            return Err(Error::Structural("plant returned the wrong number of intervals".into()));
        }
        let objective = tracking_objective(&r.zone_density, k_cr, window);
        if !objective.is_finite() {
            return Err(Error::Config(format!("non-finite tracking objective at outer iteration {i}")));
        }
        log.push(ControllerRecord {
            iteration: i,
            alpha: schedule.alpha.clone(),
            zone_density: r.zone_density.clone(),
            objective,
        });

        let best_obj = best.as_ref().map(|b| b.0);
        match best_obj {
            Some(b) if objective >= b * (1.0 - config.min_improvement) => stall += 1,
            _ => stall = 0,
        }
        if best_obj.is_none_or(|b| objective < b) {
            best = Some((objective, i, schedule.clone(), r.outcome));
        }

        let saturated =
            !window.is_empty() && window.iter().all(|&t| schedule.alpha[t] >= config.alpha_max);
        let stop = if stall >= config.patience {
            Some(StopReason::Stalled)
        } else if saturated {
            Some(StopReason::Saturated)
        } else if i == config.max_outer_iterations {
            Some(StopReason::IterationCap)
        } else {
            None
        };
        if let Some(stop) = stop {
            let (objective, best_iteration, schedule, outcome) = best.unwrap();
            return Ok(BilevelOutcome {
                schedule,
                outcome,
                best_iteration,
                objective,
                log,
                stop,
            });
        }

        schedule = TollSchedule {
            alpha: state.step(&r.zone_density, window, config),
            omega: r.omega,
        };
    }
    unreachable!("loop returns at the iteration cap")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gains(p_p: f64, p_i: f64) -> TollConfig {
        TollConfig {
            p_p,
            p_i,
            ..TollConfig::default()
        }
    }

    #[test]
    fn update_examples() {
        let c = gains(0.1, 0.05);
        assert!((pi_update(2, 0.2, 20.0, 18.0, 15.0, &c) - 0.15).abs() < 1e-15);
        assert_eq!(pi_update(1, 0.0, 0.0, 15.0, 15.0, &c), 0.0);
        assert_eq!(pi_update(5, 0.7, 15.0, 15.0, 15.0, &c), 0.7);
        assert_eq!(pi_update(1, 0.0, 0.0, 10.0, 15.0, &c), 0.0);
        assert_eq!(pi_update(3, 4.9, 10.0, 400.0, 15.0, &c), c.alpha_max);
    }

    #[test]
    fn window_only_is_tolled() {
        let c = TollConfig::default();
        let mut s = PiState::new(15.0, 4).unwrap();
        let a = s.step(&[30.0, 30.0, 30.0, 30.0], &[1, 2], &c);
        assert_eq!(a[0], 0.0);
        assert_eq!(a[3], 0.0);
        assert!((a[1] - 0.375).abs() < 1e-15);
        assert!(PiState::new(0.0, 4).is_err());
    }

    /// Zone density falls exponentially with the toll: 25 veh/km untolled,
    /// 5 veh/km floor, 10 veh/km per $/km sensitivity at 15 veh/km.
    struct ExpPlant;

    impl TollPlant for ExpPlant {
        type Outcome = ();
        fn respond(&mut self, s: &TollSchedule) -> Result<PlantResponse<()>> {
            Ok(PlantResponse {
                zone_density: s.alpha.iter().map(|a| 5.0 + 20.0 * (-a).exp()).collect(),
                omega: s.omega.clone(),
                outcome: (),
            })
        }
    }

    #[test]
    fn zero_demand_leaves_tolls_off() {
        struct Empty;
        impl TollPlant for Empty {
            type Outcome = ();
            fn respond(&mut self, s: &TollSchedule) -> Result<PlantResponse<()>> {
                Ok(PlantResponse {
                    zone_density: vec![0.0; s.alpha.len()],
                    omega: s.omega.clone(),
                    outcome: (),
                })
            }
        }
        let out = bilevel_solve(&mut Empty, &TollConfig::default(), 15.0, &[0, 1], 2, 2).unwrap();
        assert_eq!(out.schedule.alpha, vec![0.0, 0.0]);
        assert_eq!(out.objective, 30.0);
        assert!(out.log.iter().all(|r| r.alpha.iter().all(|&a| a == 0.0)));
        assert_eq!(out.stop, StopReason::Stalled);
    }

    #[test]
    fn saturation_stops_the_loop() {
        struct Stubborn;
        impl TollPlant for Stubborn {
            type Outcome = ();
            fn respond(&mut self, s: &TollSchedule) -> Result<PlantResponse<()>> {
                Ok(PlantResponse {
                    zone_density: vec![500.0; s.alpha.len()],
                    omega: s.omega.clone(),
                    outcome: (),
                })
            }
        }
        let c = TollConfig {
            patience: 100,
            ..TollConfig::default()
        };
        let out = bilevel_solve(&mut Stubborn, &c, 15.0, &[0], 1, 1).unwrap();
        assert_eq!(out.stop, StopReason::Saturated);
        assert!(out.log.len() < c.max_outer_iterations);
    }

    #[test]
    fn exponential_plant_reaches_setpoint() {
        let c = TollConfig {
            patience: 1000,
            ..TollConfig::default()
        };
        let out = bilevel_solve(&mut ExpPlant, &c, 15.0, &[0], 0, 1).unwrap();
        let last = out.log.last().unwrap();
        assert!((last.zone_density[0] - 15.0).abs() < 0.05 * 15.0, "{last:?}");
        assert!(out.log.len() <= 30);
    }

    proptest! {
        #[test]
        fn output_always_within_bounds(
            i in 1usize..50, a in 0.0f64..5.0, kp in 0.0f64..200.0,
            k in 0.0f64..200.0, kcr in 1.0f64..60.0,
            pp in 0.0f64..1.0, pi in 0.0f64..1.0,
        ) {
            let c = gains(pp, pi);
            let out = pi_update(i, a, kp, k, kcr, &c);
            prop_assert!((0.0..=c.alpha_max).contains(&out));
        }

        #[test]
        fn rising_density_above_setpoint_never_lowers_the_toll(
            i in 2usize..50, a in 0.0f64..5.0, kp in 15.0f64..100.0, dk in 0.0f64..50.0,
        ) {
            let c = TollConfig::default();
            prop_assert!(pi_update(i, a, kp, kp + dk, 15.0, &c) >= a);
        }
    }
}
