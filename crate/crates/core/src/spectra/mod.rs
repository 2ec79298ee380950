//! Laplacians of finite graphs: dense spectra with root weights, eigenvalue
//! counting by inertia, spectral measures of random trees and the explicit
//! Lifshits-tail bounds for Poisson trees.
//!
//! Graphs are [`HostGraph`](crate::isoperimetry::HostGraph) interiors;
//! frontier edges are ignored, so a truncated tree is treated as the finite
//! ball it is.

mod dense;
mod inertia;
mod lifshits;
mod measure;

pub(crate) use measure::{cell_of, validate_grid, MeasureAccumulator};

pub use crate::walks::Variant;
pub use dense::{laplacian_eigs, Spectrum, DENSE_CAP};
pub use inertia::{count_eigs_in, count_eigs_strict, trace_inequality_check, TraceCheck, COLLISION_WINDOW, JITTER_RETRIES};
pub use lifshits::{lifshits_bounds, LifshitsBounds};
pub use measure::{
    laplace_transform_check, root_spectral_mass, survivor_radius_stability, RadiusStability, SpectralConditioning,
    SpectralMeasureEstimate,
};

use crate::branching::BranchingError;
use crate::walks::WalkError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectraError {
    #[error("graph has {size} vertices, dense eigensolves are capped at {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("factorization broke down at E = {energy} after {attempts} attempts")]
    FactorizationBreakdown { energy: f64, attempts: usize },
    #[error("E = {energy} is within 1e-9 of an eigenvalue")]
    EigenvalueCollision { energy: f64 },
    #[error("invalid energy grid: {0}")]
    InvalidGrid(String),
    #[error("lambda = {lambda} is not supercritical")]
    SubcriticalLambda { lambda: f64 },
    #[error("grid spacing {spacing} exceeds {max}")]
    GridTooCoarse { spacing: f64, max: f64 },
    #[error("grid ends at {reach}, needs at least {needed}")]
    GridTooShort { reach: f64, needed: f64 },
    #[error("graph is not connected")]
    Disconnected,
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Branching(#[from] BranchingError),
    #[error(transparent)]
    Walk(#[from] WalkError),
}
