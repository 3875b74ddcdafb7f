//! The equilibrium model as the controller's plant.

use crate::demand::ClassDemand;
use crate::equilibrium::{solve_mixed_equilibrium, EquilibriumOutcome, SolverConfig};
use crate::error::{Error, Result};
use crate::network::{Clock, LinkIdx, Network};
use crate::pricing::controller::{bilevel_solve, BilevelOutcome, PlantResponse, TollPlant};
use crate::pricing::nfd::nfd_series;
use crate::pricing::toll::{omega_from_loading, TollConfig, TollContext, TollSchedule};

/// Solves the mixed equilibrium from scratch under each schedule and
/// measures the pricing zone.
pub struct EquilibriumPlant<'a> {
    pub network: &'a Network,
    pub demand: &'a ClassDemand,
    pub clock: &'a Clock,
    pub solver: &'a SolverConfig,
    pub vot: f64,
    pub omega_max: f64,
    pub zone: Vec<LinkIdx>,
}

impl<'a> EquilibriumPlant<'a> {
    pub fn new(
        network: &'a Network,
        demand: &'a ClassDemand,
        clock: &'a Clock,
        solver: &'a SolverConfig,
        toll: &TollConfig,
    ) -> Result<Self> {
        let zone = network.zone_links();
        if zone.is_empty() {
            return Err(Error::Config("pricing zone is empty".into()));
        }
        Ok(EquilibriumPlant {
            network,
            demand,
            clock,
            solver,
            vot: toll.vot,
            omega_max: toll.omega_max,
            zone,
        })
    }
}

impl TollPlant for EquilibriumPlant<'_> {
    type Outcome = EquilibriumOutcome;

    fn respond(&mut self, schedule: &TollSchedule) -> Result<PlantResponse<EquilibriumOutcome>> {
        let ctx = (!schedule.is_zero()).then_some(TollContext {
            schedule,
            vot: self.vot,
        });
        let eq = solve_mixed_equilibrium(self.network, self.demand, self.clock, self.solver, ctx)?;
        let zone_density = nfd_series(&eq.loading, self.network, &self.zone)?
            .iter()
            .map(|p| p.k)
            .collect();
        let omega = omega_from_loading(&eq.loading, self.omega_max)?;
        Ok(PlantResponse {
            zone_density,
            omega,
            outcome: eq,
        })
    }
}

/// Runs the pricing loop on the equilibrium model.
pub fn price_network(
    network: &Network,
    demand: &ClassDemand,
    clock: &Clock,
    solver: &SolverConfig,
    toll: &TollConfig,
    k_cr: f64,
    window: &[usize],
) -> Result<BilevelOutcome<EquilibriumOutcome>> {
    toll.validate(clock.interval_s, clock.intervals)?;
    let mut plant = EquilibriumPlant::new(network, demand, clock, solver, toll)?;
    bilevel_solve(&mut plant, toll, k_cr, window, network.links().len(), clock.intervals)
}
