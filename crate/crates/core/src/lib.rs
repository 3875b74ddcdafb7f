//! Mixed user-equilibrium / system-optimum dynamic traffic assignment with
//! NFD-based feedback congestion pricing.
//!
//! The crate loads vehicles on a link transmission model with an adaptive
//! triangular fundamental diagram, equilibrates selfish (UE) and centrally
//! routed (SO) vehicle classes with successive averages, and tunes a
//! spatially differentiated distance toll with a PI controller tracking the
//! pricing zone's critical density.

pub mod analysis;
pub mod demand;
pub mod equilibrium;
mod error;
pub mod flow;
pub mod network;
pub mod pricing;
pub mod routing;
pub mod workbench;

pub use error::{Error, Result};
