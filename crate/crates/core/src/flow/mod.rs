//! Link fundamental diagram and the mesoscopic network loader.

pub mod fd;
mod loader;
mod result;
mod trajectory;

pub use fd::{blended_reaction_time, fd_capacity, fd_flow, ClassReactionTimes, FdParams};
pub use loader::{discretize, load_network, load_trips, PathFlow, Trip};
pub use result::{LinkCurves, LinkProbe, LinkState, LoadingResult, VehicleRecord};
pub use trajectory::write_trajectories;

use crate::network::LinkIdx;

/// Local marginal time of `link` for a vehicle entering at `entry_time`
/// (traversal plus queue-clearance externality), seconds.
pub fn link_marginal_time(link: LinkIdx, entry_time: f64, result: &LoadingResult) -> f64 {
    result.link_marginal_time(link, entry_time)
}
