//! Offspring distributions and Galton–Watson tree samplers.
//!
//! Trees conditioned on survival use the two-type construction: a survivor
//! (S) vertex has at least one S child, and every extinct (E) vertex spawns a
//! finite Galton–Watson tree with the dual law `mu(n) L^(n-1)`.

mod offspring;
mod sampling;
mod tree;

pub use offspring::{solve_extinction, OffspringKind, OffspringModel, MASS_TOL, PARSE_MASS_TOL};
pub use sampling::{
    progeny_tail, progeny_tail_slope, sample_extinct, sample_survivor, sample_tree,
    sample_unconditional, Conditioning, ProgenyTailEstimate,
};
pub use tree::{Budget, SampledTree, TreeLaw, TypeTag, VertexId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BranchingError {
    #[error("invalid offspring distribution: {0}")]
    InvalidDistribution(String),
    #[error("cannot parse offspring model: {0}")]
    Parse(String),
    #[error("offspring law with exactly one child is degenerate")]
    DegenerateModel,
    #[error("model is not supercritical (mean {mean})")]
    SubcriticalModel { mean: f64 },
    #[error("model has extinction probability 0")]
    NoExtinction,
    #[error("sample {sample}: finite tree exceeded size cap {cap}")]
    SizeCapExceeded { cap: usize, sample: u64 },
    #[error("malformed tree: {0}")]
    MalformedTree(String),
}
