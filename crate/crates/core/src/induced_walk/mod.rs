//! The island-skipping walk: the simple random walk observed only at its
//! visits to the ocean, with edge weights
//! `w(x, y) = deg(x) P_x(first ocean vertex after time 0 is y)`.

mod graph;
mod operator;

pub use graph::{build_induced, build_induced_partial, InducedProvenance, InducedWalkGraph};
pub use operator::{
    compression_norm, induced_return_prob, induced_return_prob_killed, KilledReturn, NORM_TOL,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InducedError {
    #[error("island containing vertex {vertex} touches unexplored territory")]
    InfiniteIsland { vertex: u32 },
    #[error("singular hitting system for the island containing vertex {vertex}")]
    SingularSystem { vertex: u32 },
    #[error("decomposition does not match the host: {0}")]
    Mismatch(String),
    #[error("region is empty")]
    EmptyRegion,
    #[error("vertex {0} is not an ocean vertex")]
    NotOcean(u32),
    #[error("mass {exit_mass:e} leaves the region within {steps} steps")]
    InsufficientRegion { steps: u64, exit_mass: f64 },
    #[error("malformed weighted graph: {0}")]
    Malformed(String),
}
