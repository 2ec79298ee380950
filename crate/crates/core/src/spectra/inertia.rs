use nalgebra::DMatrix;
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::dense::{laplacian_matrix, DENSE_CAP};
use super::{SpectraError, Variant};
use crate::isoperimetry::HostGraph;
use crate::seed::mix;

/// Jittered retries for colliding components above [`DENSE_CAP`].
pub const JITTER_RETRIES: usize = 5;

/// Pivots and core eigenvalues below this (relative to the matrix scale) are
/// treated as an eigenvalue collision.
const CORE_FLOOR: f64 = 1e-12;

/// Number of eigenvalues in `]0, E[` with no retry.
///
/// By Sylvester's law the number of negative pivots of a symmetric
/// elimination of `Delta - E` (or of `Delta - E D`, congruent to the
/// normalized form shifted by `E`) counts eigenvalues below `E`; the kernel
/// has one dimension per connected component with an edge.
///
/// Vertices outside the 2-core are eliminated leaf first. Each has a single
/// uneliminated neighbour, so this is a Sturm count on the hanging trees
/// with no fill. The remaining core, with the diagonal corrections from its
/// trees, is counted by a dense symmetric eigensolve. A tree pivot or core
/// eigenvalue within `1e-12` (times the matrix scale) of zero is a collision.
pub fn count_eigs_strict(g: &HostGraph, e: f64, variant: Variant) -> Result<usize, SpectraError> {
    if !(e > 0.0 && e.is_finite()) {
        return Err(SpectraError::InvalidGrid(format!("energy {e} must be positive")));
    }
    let n = g.len();
    let deg: Vec<usize> = (0..n as u32).map(|v| g.neighbors(v).len()).collect();
    let kernel = g.components().iter().filter(|c| c.len() > 1).count();
    let collision = SpectraError::EigenvalueCollision { energy: e };
    let diag = |d: usize| match variant {
        Variant::Laplacian => d as f64 - e,
        Variant::Normalized => d as f64 * (1.0 - e),
    };
    let scale = 1.0 + e * (1 + deg.iter().copied().max().unwrap_or(0)) as f64;
    let mut pivot: Vec<f64> = deg.iter().map(|&d| diag(d)).collect();
    let mut remaining = deg.clone();
    let mut removed = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&v| deg[v] == 1).collect();
    let mut negative = 0usize;
    while let Some(v) = stack.pop() {
        if removed[v] || remaining[v] > 1 {
            continue;
        }
        removed[v] = true;
        let d = pivot[v];
        if d.abs() <= CORE_FLOOR * scale || !d.is_finite() {
            return Err(collision);
        }
        negative += usize::from(d < 0.0);
        for &w in g.neighbors(v as u32) {
            let w = w as usize;
            if !removed[w] {
                pivot[w] -= 1.0 / d;
                remaining[w] -= 1;
                if remaining[w] <= 1 {
                    stack.push(w);
                }
            }
        }
    }
    let core: Vec<usize> = (0..n).filter(|&v| !removed[v] && deg[v] > 0).collect();
    if !core.is_empty() {
        let mut local = vec![usize::MAX; n];
        for (i, &v) in core.iter().enumerate() {
            local[v] = i;
        }
        let m = core.len();
        let mut mat = DMatrix::<f64>::zeros(m, m);
        for (i, &v) in core.iter().enumerate() {
            mat[(i, i)] = pivot[v];
            for &w in g.neighbors(v as u32) {
                if let Some(&j) = local.get(w as usize).filter(|&&j| j != usize::MAX) {
                    mat[(i, j)] = -1.0;
                }
            }
        }
        for x in mat.symmetric_eigenvalues().iter() {
            if x.abs() <= CORE_FLOOR * scale || !x.is_finite() {
                return Err(collision);
            }
            negative += usize::from(*x < 0.0);
        }
    }
    Ok(negative - kernel)
}

/// Relative window above `E` counted when `E` sits on an eigenvalue.
pub const COLLISION_WINDOW: f64 = 1e-9;

/// Number of eigenvalues in `]0, E]`.
///
/// When `E` collides with an eigenvalue, every colliding component is
/// counted by a dense eigensolve of the unshifted operator, including
/// eigenvalues up to `E (1 + 1e-9)`. Components above [`DENSE_CAP`] instead
/// retry at `E (1 + u 1e-9)` with `u` uniform in `]0, 1]`, drawn
/// deterministically from `E`.
pub fn count_eigs_in(g: &HostGraph, e: f64, variant: Variant) -> Result<usize, SpectraError> {
    match count_eigs_strict(g, e, variant) {
        Err(SpectraError::EigenvalueCollision { .. }) => {}
        other => return other,
    }
    let top = e * (1.0 + COLLISION_WINDOW);
    let mut total = 0;
    for comp in g.components().iter().filter(|c| c.len() > 1) {
        let sub = g.subgraph(comp);
        total += match count_eigs_strict(&sub, e, variant) {
            Err(SpectraError::EigenvalueCollision { .. }) if sub.len() <= DENSE_CAP => {
                // one kernel vector per connected component
                let values = laplacian_matrix(&sub, variant).symmetric_eigenvalues();
                values.iter().filter(|&&x| x <= top).count() - 1
            }
            Err(SpectraError::EigenvalueCollision { .. }) => count_jittered(&sub, e, variant)?,
            other => other?,
        };
    }
    Ok(total)
}

fn count_jittered(g: &HostGraph, e: f64, variant: Variant) -> Result<usize, SpectraError> {
    let mut rng = SmallRng::seed_from_u64(mix(e.to_bits(), 0x1177));
    for _ in 0..JITTER_RETRIES {
        let u: f64 = 1.0 - rng.random::<f64>();
        match count_eigs_strict(g, e * (1.0 + u * COLLISION_WINDOW), variant) {
            Err(SpectraError::EigenvalueCollision { .. }) => {}
            other => return other,
        }
    }
    Err(SpectraError::FactorizationBreakdown { energy: e, attempts: JITTER_RETRIES })
}

/// Eigenvalue counts of `Delta` and of the normalized Laplacian in `]0, E[`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceCheck {
    pub count_laplacian: usize,
    pub count_normalized: usize,
    pub holds: bool,
}

/// Compares `tr 1_]0,E[(Delta)` with `tr 1_]0,E[(D^-1/2 Delta D^-1/2)` on a
/// connected graph. Fails with [`SpectraError::EigenvalueCollision`] instead
/// of jittering.
pub fn trace_inequality_check(g: &HostGraph, e: f64) -> Result<TraceCheck, SpectraError> {
    if g.components().len() > 1 {
        return Err(SpectraError::Disconnected);
    }
    let count_laplacian = count_eigs_strict(g, e, Variant::Laplacian)?;
    let count_normalized = count_eigs_strict(g, e, Variant::Normalized)?;
    Ok(TraceCheck {
        count_laplacian,
        count_normalized,
        holds: count_laplacian <= count_normalized,
    })
}
