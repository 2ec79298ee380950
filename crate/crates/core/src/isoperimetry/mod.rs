//! Isolation `iota_q(V) = q|V| - |dV|`, isolated cores, and the split of a
//! host graph into q-islands and ocean.
//!
//! Hosts are finite graphs whose vertices may carry frontier edges into
//! unexplored territory; those edges count towards the boundary.

mod anchored;
mod bigisland;
mod host;
mod islands;
mod qparam;

pub use anchored::{min_anchored_ratio, ANCHORED_SEARCH_BUDGET};
pub use bigisland::{big_island_hit_prob, exceeds_cube_root, BigIslandEstimate};
pub use host::HostGraph;
pub use islands::{boundary, islands, islands_bruteforce, isolation, IslandDecomposition, Iso, BRUTEFORCE_MAX};
pub use qparam::QParam;

use crate::walks::WalkError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IsoError {
    #[error("vertex {0} is not in the host")]
    UnknownVertex(u32),
    #[error("malformed host: {0}")]
    MalformedHost(String),
    #[error("invalid q: {0}")]
    InvalidQ(String),
    #[error("host has {size} vertices, exhaustive search is capped at {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("host interior contains a cycle")]
    NotATree,
    #[error("host has no root")]
    MissingRoot,
    #[error("no connected root set of size {0}")]
    InvalidSize(usize),
    #[error("search visited more than {budget} connected sets")]
    SearchBudgetExceeded { budget: u64 },
    #[error(transparent)]
    Walk(#[from] WalkError),
}
