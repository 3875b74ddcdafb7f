//! Congestion-weighted distance tolls, the NFD, and the PI feedback loop.

mod controller;
mod nfd;
mod plant;
mod toll;

pub use controller::{
    bilevel_solve, pi_update, tracking_objective, BilevelOutcome, ControllerRecord, PiState,
    PlantResponse, StopReason, TollPlant,
};
pub use nfd::{estimate_critical_density, nfd_point, nfd_series, write_nfd, CriticalDensity, NfdPoint};
pub use plant::{price_network, EquilibriumPlant};
pub use toll::{
    congestion_weight, generalized_cost, omega_from_loading, path_toll, read_toll_schedule,
    toll_seconds, tolled_skims, write_omega, write_toll_schedule, TollConfig, TollContext,
    TollSchedule,
};
