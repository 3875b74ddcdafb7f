//! Time-dependent least-cost routing and bounded path sets.

mod path_set;
mod search;
mod skims;

pub use path_set::{update_path_set, PathSet};
pub use search::{
    distance_shortest_path, evaluate_path, skim_summary, td_least_marginal_path,
    td_shortest_path, FoundPath, SkimSummary,
};
pub use skims::{CostKind, CostSkims};
