use serde::{Deserialize, Serialize};

use super::{InducedError, InducedWalkGraph};
use crate::numeric::CompensatedSum;

/// Stopping tolerance on successive norm estimates.
pub const NORM_TOL: f64 = 1e-10;

/// Norm of the compression of `P_q` to `region` in the `w`-weighted inner product.
///
/// Works with the symmetric form `S = W^(1/2) P W^(-1/2)`, entries
/// `w(x, y) / sqrt(w(x) w(y))`, started from the root indicator (the first
/// region vertex when the root is outside). The ratios `|S^(k+1) v| / |S^k v|`
/// increase to the norm, so every returned value is a lower bound for it.
/// Runs at least 100 and at most `max(iterations, 100)` steps.
pub fn compression_norm(g: &InducedWalkGraph, region: &[u32], iterations: usize) -> Result<f64, InducedError> {
    if region.is_empty() {
        return Err(InducedError::EmptyRegion);
    }
    let mut local = vec![u32::MAX; g.ocean().len()];
    let mut members = Vec::with_capacity(region.len());
    for &x in region {
        let i = g.ocean_index(x)?;
        if local[i] == u32::MAX {
            local[i] = members.len() as u32;
            members.push(i);
        }
    }
    let vw = g.vertex_weights();
    let rows: Vec<Vec<(u32, f64)>> = members
        .iter()
        .map(|&i| {
            g.rows()[i]
                .iter()
                .filter(|e| local[e.0 as usize] != u32::MAX)
                .map(|&(j, w)| (local[j as usize], w / (vw[i] * vw[j as usize]).sqrt()))
                .collect()
        })
        .collect();
    let start = g
        .root()
        .and_then(|r| g.ocean_index(r).ok())
        .map(|i| local[i])
        .filter(|&l| l != u32::MAX)
        .unwrap_or(0) as usize;
    let m = members.len();
    let mut v = vec![0.0; m];
    v[start] = 1.0;
    let mut next = vec![0.0; m];
    let mut estimate = 0.0f64;
    for k in 0..iterations.max(100) {
        for (out, row) in next.iter_mut().zip(&rows) {
            *out = row.iter().map(|&(j, s)| s * v[j as usize]).sum();
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let previous = estimate;
        estimate = norm;
        for (a, b) in v.iter_mut().zip(&next) {
            *a = b / norm;
        }
        if k >= 1 && (estimate - previous).abs() < NORM_TOL {
            break;
        }
    }
    Ok(estimate)
}

/// Return probability of the induced walk killed on leaving the region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KilledReturn {
    pub value: f64,
    /// Mass lost during the first `t/2` steps. Zero means `value` is the
    /// return probability of the untruncated walk.
    pub early_exit_mass: f64,
}

impl KilledReturn {
    pub fn is_exact(&self) -> bool {
        self.early_exit_mass == 0.0
    }
}

/// `P_o(W_t = o)` for the induced walk killed when it takes an exterior edge.
///
/// A loop of length `t` that leaves the region must do so within its first
/// `t/2` steps, so no exit mass by then makes the value exact.
pub fn induced_return_prob_killed(g: &InducedWalkGraph, t: u64) -> Result<KilledReturn, InducedError> {
    let root = g.root().ok_or(InducedError::NotOcean(u32::MAX))?;
    let o = g.ocean_index(root)?;
    if t == 0 {
        return Ok(KilledReturn { value: 1.0, early_exit_mass: 0.0 });
    }
    let vw = g.vertex_weights();
    let ext = g.exterior_weights();
    let n = vw.len();
    let inv: Vec<f64> = vw.iter().map(|&w| if w > 0.0 { 1.0 / w } else { 0.0 }).collect();
    let mut p = vec![0.0; n];
    let mut next = vec![0.0; n];
    p[o] = 1.0;
    let mut early = CompensatedSum::new();
    let mut active = vec![o];
    let mut in_active = vec![false; n];
    in_active[o] = true;
    for step in 1..=t {
        // rows are symmetric, so pushing along rows of x equals pulling into y
        let mut grown = Vec::new();
        for &x in &active {
            let px = p[x];
            if px == 0.0 {
                continue;
            }
            let scaled = px * inv[x];
            if vw[x] == 0.0 {
                next[x] += px;
            }
            for &(y, w) in &g.rows()[x] {
                next[y as usize] += scaled * w;
                if !in_active[y as usize] {
                    in_active[y as usize] = true;
                    grown.push(y as usize);
                }
            }
            if step <= t / 2 && ext[x] > 0.0 {
                early.add(scaled * ext[x]);
            }
        }
        active.extend(grown);
        for &x in &active {
            p[x] = next[x];
            next[x] = 0.0;
        }
    }
    Ok(KilledReturn {
        value: p[o].min(1.0),
        early_exit_mass: early.value(),
    })
}

/// `P_o(W_t = o)`; fails when mass leaves the region early enough to matter.
pub fn induced_return_prob(g: &InducedWalkGraph, t: u64) -> Result<f64, InducedError> {
    let r = induced_return_prob_killed(g, t)?;
    if r.is_exact() {
        Ok(r.value)
    } else {
        Err(InducedError::InsufficientRegion { steps: t / 2, exit_mass: r.early_exit_mass })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::SampledTree;
    use crate::induced_walk::build_induced;
    use crate::isoperimetry::{islands, HostGraph, IslandDecomposition, QParam};
    use crate::walks::return_prob_exact;

    fn srw(tree: &SampledTree) -> (HostGraph, InducedWalkGraph) {
        let host = HostGraph::from_tree(tree);
        let dec = islands(&host, QParam::rational(1, 5).unwrap()).unwrap();
        let g = build_induced(&host, &dec).unwrap();
        (host, g)
    }

    #[test]
    fn single_vertex_compression() {
        let host = HostGraph::new(2, &[(0, 1)], &[(0, 3)], Some(0)).unwrap();
        let dec = IslandDecomposition {
            q: QParam::rational(1, 1).unwrap(),
            islands: vec![vec![1]],
            ocean: vec![0],
            iotas: vec![0.0],
            moat_certified: true,
        };
        let g = build_induced(&host, &dec).unwrap();
        let norm = compression_norm(&g, &[0], 100).unwrap();
        assert!((norm - g.weight(0, 0) / g.vertex_weight(0)).abs() < 1e-15);
        assert_eq!(norm, 0.25);
    }

    /// Largest eigenvalue of the radial reduction of the killed walk on a
    /// binary-tree ball: levels `0..=r`, off-diagonal `1/sqrt(3)` from the
    /// root and `sqrt(2)/3` elsewhere.
    fn radial_oracle(r: usize) -> f64 {
        let mut m = nalgebra::DMatrix::<f64>::zeros(r + 1, r + 1);
        for k in 0..r {
            let s = if k == 0 { 3f64.sqrt().recip() } else { 2f64.sqrt() / 3.0 };
            m[(k, k + 1)] = s;
            m[(k + 1, k)] = s;
        }
        m.symmetric_eigenvalues().iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    #[test]
    fn binary_ball_matches_radial_reduction() {
        for r in [3u32, 6, 9] {
            let (host, g) = srw(&SampledTree::regular(2, r + 2));
            let region = host.ball(0, r);
            let norm = compression_norm(&g, &region, 10_000).unwrap();
            let want = radial_oracle(r as usize);
            assert!((norm - want).abs() < 1e-8, "{r}: {norm} vs {want}");
            assert!(norm <= 2.0 * 2f64.sqrt() / 3.0 + 1e-3);
        }
        assert!((radial_oracle(400) - 2.0 * 2f64.sqrt() / 3.0).abs() < 1e-3);
    }

    #[test]
    fn empty_region_and_non_ocean() {
        let (_, g) = srw(&SampledTree::path(3));
        assert_eq!(compression_norm(&g, &[], 100), Err(InducedError::EmptyRegion));
        assert_eq!(compression_norm(&g, &[9], 100), Err(InducedError::NotOcean(9)));
    }

    #[test]
    fn no_islands_matches_simple_walk() {
        let tree = SampledTree::regular(2, 7);
        let (_, g) = srw(&tree);
        for t in [0u64, 1, 2, 4, 8] {
            let want = return_prob_exact(&tree, t).unwrap();
            let got = induced_return_prob(&g, t).unwrap();
            assert!((got - want).abs() < 1e-14, "{t}: {got} {want}");
        }
    }

    #[test]
    fn early_exit_is_reported() {
        let (_, g) = srw(&SampledTree::regular(2, 3));
        assert!(induced_return_prob(&g, 4).is_ok());
        assert!(matches!(
            induced_return_prob(&g, 6),
            Err(InducedError::InsufficientRegion { .. })
        ));
        let killed = induced_return_prob_killed(&g, 6).unwrap();
        assert!(killed.value > 0.0 && !killed.is_exact());
    }
}
