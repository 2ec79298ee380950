//! Simulation and spectral tools for random walks on Galton–Watson trees and
//! sparse Erdős–Rényi graphs.
//!
//! The crate is organised bottom-up:
//!
//! * [`branching`]: offspring laws, extinction probabilities and tree samplers
//!   (unconditioned, conditioned on extinction, conditioned on survival).
//! * [`walks`]: exact return probabilities on sampled trees, annealed curves,
//!   continuous-time return probabilities and stretched-exponent fits.
//! * [`isoperimetry`]: isolation, isolated cores and the island/ocean split.
//! * [`induced_walk`]: the island-skipping weighted walk and its norm.
//! * [`spectra`]: Laplacian spectra, inertia counting, spectral measures and
//!   explicit Lifshits-tail bounds.
//! * [`ergraph`]: Erdős–Rényi sampling, components and densities of states.
//! * [`experiments`]: configuration-driven runs behind the `gwlab` binary.

pub mod branching;
pub mod ergraph;
pub mod experiments;
pub mod induced_walk;
pub mod isoperimetry;
pub mod numeric;
pub mod parallel;
pub mod seed;
pub mod spectra;
pub mod walks;
