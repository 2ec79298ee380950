use serde::{Deserialize, Serialize};

use super::{islands, HostGraph, IsoError, QParam};
use crate::branching::{Conditioning, OffspringModel};
use crate::numeric::MeanAccumulator;
use crate::parallel::try_map_chunks;
use crate::seed::SampleSeed;
use crate::walks::{tree_for_ball, AnnealedOptions, BallWalk, RadiusPolicy};

/// Monte-Carlo estimate of the probability of reaching a large island before time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigIslandEstimate {
    pub t: u64,
    pub probability: f64,
    pub stderr: f64,
    pub n_samples: u64,
    /// Samples with at least one island larger than `t^(1/3)`.
    pub samples_with_big_islands: u64,
    /// Large islands touching the truncation frontier, over all samples.
    pub uncertified_islands: u64,
    pub radius: u32,
}

/// `|V| > t^(1/3)`, decided exactly.
pub fn exceeds_cube_root(size: usize, t: u64) -> bool {
    (size as u128).pow(3) > u128::from(t)
}

/// Average over survivor trees of `P_o(tau < t)` where `tau` is the hitting
/// time of the union of q-islands with more than `t^(1/3)` vertices.
///
/// With [`RadiusPolicy::Exact`] each tree is generated to radius `t`, which
/// contains every vertex the walk can reach before time `t`. A truncated
/// radius kills the walk on leaving the ball and gives a lower bound.
pub fn big_island_hit_prob(
    model: &OffspringModel,
    t: u64,
    q: QParam,
    n_samples: u64,
    seed: u64,
    options: AnnealedOptions,
) -> Result<BigIslandEstimate, IsoError> {
    let radius = match options.radius {
        RadiusPolicy::Exact => u32::try_from(t).unwrap_or(u32::MAX),
        RadiusPolicy::Truncated(r) => r,
    };
    let parts = try_map_chunks(n_samples, |range| {
        let mut acc = MeanAccumulator::new();
        let mut with_big = 0u64;
        let mut uncertified = 0u64;
        for i in range {
            let tree = tree_for_ball(model, SampleSeed::new(seed, i), radius, options.vertex_cap, Conditioning::Survivor)?;
            let host = HostGraph::from_tree_ball(&tree, radius);
            let dec = islands(&host, q)?;
            let mut target = vec![false; host.len()];
            let mut any = false;
            for island in dec.islands.iter().filter(|c| exceeds_cube_root(c.len(), t)) {
                any = true;
                if island.iter().any(|&v| host.frontier_edges(v) > 0) {
                    uncertified += 1;
                }
                for &v in island {
                    target[v as usize] = true;
                }
            }
            let p = if any {
                with_big += 1;
                BallWalk::new(&tree, radius)?.hit_before(&target, t as usize)
            } else {
                0.0
            };
            acc.push(p);
        }
        Ok::<_, IsoError>((acc, with_big, uncertified))
    })?;
    let mut acc = MeanAccumulator::new();
    let (mut with_big, mut uncertified) = (0, 0);
    for (a, w, u) in &parts {
        acc.merge(a);
        with_big += w;
        uncertified += u;
    }
    Ok(BigIslandEstimate {
        t,
        probability: if n_samples == 0 { f64::NAN } else { acc.mean() },
        stderr: acc.stderr(),
        n_samples,
        samples_with_big_islands: with_big,
        uncertified_islands: uncertified,
        radius,
    })
}
