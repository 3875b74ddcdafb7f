//! Mixed user-equilibrium / system-optimum assignment by successive averages.

mod gap;
mod solver;
mod step;

pub use gap::{relative_gap, relative_gap_so, relative_gap_ue, GapTerm};
pub use solver::{
    solve_mixed_equilibrium, write_iteration_log, EquilibriumOutcome, IterationRecord,
    PathSetKey, SolverConfig,
};
pub use step::{path_flows, step_size, update_proportions, StepSchedule};
