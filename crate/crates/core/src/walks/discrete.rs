use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BallWalk, ReturnCurve, TimeAxis, WalkError};
use crate::branching::{
    sample_extinct, sample_survivor, sample_unconditional, Budget, Conditioning, OffspringModel,
    SampledTree, VertexId,
};
use crate::numeric::MeanAccumulator;
use crate::parallel::try_map_chunks;
use crate::seed::SampleSeed;

/// Exact `P_o(X_t = o)` for the simple random walk on `tree`.
///
/// Needs every vertex within distance `t/2` of the root expanded; a loop of
/// length `t` never goes further.
pub fn return_prob_exact(tree: &SampledTree, t: u64) -> Result<f64, WalkError> {
    if t % 2 == 1 {
        return Ok(0.0);
    }
    let half = t / 2;
    let radius = u32::try_from(half).unwrap_or(u32::MAX);
    let ball = BallWalk::new(tree, radius)?;
    Ok(ball.even_returns(half as usize)[half as usize])
}

/// Return probabilities at `times` of the walk killed outside depth `radius`.
///
/// Values at `t <= 2 * radius` coincide with the untruncated walk; later ones
/// are lower bounds for it.
pub fn killed_return_curve(tree: &SampledTree, radius: u32, times: &[u64]) -> Result<Vec<f64>, WalkError> {
    let ball = BallWalk::new(tree, radius)?;
    let half_max = times.iter().map(|t| t / 2).max().unwrap_or(0) as usize;
    let even = ball.even_returns(half_max);
    Ok(times
        .iter()
        .map(|&t| if t % 2 == 1 { 0.0 } else { even[(t / 2) as usize] })
        .collect())
}

/// Sum over all length-`t` root loops of their probability, by explicit
/// enumeration. Exponential in `t`; test oracle only.
pub fn return_prob_enumerate(tree: &SampledTree, t: u32) -> Result<f64, WalkError> {
    fn go(tree: &SampledTree, v: VertexId, left: u32, acc_p: f64, total: &mut f64) -> Result<(), WalkError> {
        if left == 0 {
            if v == 0 {
                *total += acc_p;
            }
            return Ok(());
        }
        let deg = tree.degree(v).ok_or(WalkError::InsufficientRadius {
            needed: tree.depth(v),
            available: tree.complete_depth().saturating_sub(1),
        })?;
        if deg == 0 {
            return go(tree, v, left - 1, acc_p, total);
        }
        let p = acc_p / deg as f64;
        if let Some(u) = tree.parent(v) {
            go(tree, u, left - 1, p, total)?;
        }
        for c in tree.children(v) {
            go(tree, c, left - 1, p, total)?;
        }
        Ok(())
    }
    let mut total = 0.0;
    go(tree, 0, t, 1.0, &mut total)?;
    Ok(total)
}

/// Trajectory of a walk started at the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkPath {
    pub positions: Vec<VertexId>,
}

/// Runs `t` steps of the simple random walk from the root.
pub fn sample_path<R: Rng>(tree: &SampledTree, t: usize, rng: &mut R) -> Result<WalkPath, WalkError> {
    let mut positions = Vec::with_capacity(t + 1);
    let mut v: VertexId = 0;
    positions.push(v);
    for _ in 0..t {
        let deg = tree.degree(v).ok_or(WalkError::InsufficientRadius {
            needed: tree.depth(v),
            available: tree.complete_depth().saturating_sub(1),
        })?;
        if deg > 0 {
            let k = rng.random_range(0..deg);
            v = match tree.parent(v) {
                Some(p) if k == 0 => p,
                Some(_) => tree.children(v).start + k - 1,
                None => tree.children(v).start + k,
            };
        }
        positions.push(v);
    }
    Ok(WalkPath { positions })
}

/// How far each tree is generated for the annealed estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiusPolicy {
    /// Radius `max(times)/2`: every value is exact.
    Exact,
    /// Fixed radius with the walk killed beyond it; values at `t > 2R` are lower bounds.
    Truncated(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnealedOptions {
    pub radius: RadiusPolicy,
    /// Maximum number of generated vertices per tree.
    pub vertex_cap: usize,
}

impl Default for AnnealedOptions {
    fn default() -> Self {
        Self {
            radius: RadiusPolicy::Exact,
            vertex_cap: 5_000_000,
        }
    }
}

/// Draws the tree for sample `seed`, expanded through depth `radius`.
pub fn tree_for_ball(
    model: &OffspringModel,
    seed: SampleSeed,
    radius: u32,
    vertex_cap: usize,
    conditioning: Conditioning,
) -> Result<SampledTree, WalkError> {
    let budget = Budget {
        max_vertices: vertex_cap,
        max_depth: radius.saturating_add(1),
    };
    let tree = match conditioning {
        Conditioning::Unconditional => sample_unconditional(model, seed, budget),
        Conditioning::Survivor => sample_survivor(model, seed, budget)?,
        Conditioning::Extinct => sample_extinct(model, seed, vertex_cap).map_err(|e| match e {
            crate::branching::BranchingError::SizeCapExceeded { cap, sample } => {
                WalkError::BudgetExceeded { cap, sample }
            }
            other => other.into(),
        })?,
    };
    if tree.complete_depth() <= radius.min(tree.max_generated_depth()) {
        return Err(WalkError::BudgetExceeded {
            cap: vertex_cap,
            sample: seed.index,
        });
    }
    Ok(tree)
}

/// Monte-Carlo average over `n_trees` trees of the per-tree return probability.
pub fn annealed_return(
    model: &OffspringModel,
    times: &[u64],
    n_trees: u64,
    seed: u64,
    conditioning: Conditioning,
    options: AnnealedOptions,
) -> Result<ReturnCurve, WalkError> {
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(WalkError::InvalidTimes("times must be sorted".into()));
    }
    if conditioning == Conditioning::Survivor && !model.is_supercritical() {
        return Err(crate::branching::BranchingError::SubcriticalModel { mean: model.mean() }.into());
    }
    let t_max = times.last().copied().unwrap_or(0);
    let radius = match options.radius {
        RadiusPolicy::Exact => u32::try_from(t_max / 2).unwrap_or(u32::MAX),
        RadiusPolicy::Truncated(r) => r,
    };
    let parts = try_map_chunks(n_trees, |range| {
        let mut accs = vec![MeanAccumulator::new(); times.len()];
        for i in range {
            let tree = tree_for_ball(model, SampleSeed::new(seed, i), radius, options.vertex_cap, conditioning)?;
            let values = killed_return_curve(&tree, radius, times)?;
            for (acc, v) in accs.iter_mut().zip(values) {
                acc.push(v);
            }
        }
        Ok::<_, WalkError>(accs)
    })?;
    let mut accs = vec![MeanAccumulator::new(); times.len()];
    for part in &parts {
        for (a, p) in accs.iter_mut().zip(part) {
            a.merge(p);
        }
    }
    let truncated = matches!(options.radius, RadiusPolicy::Truncated(r) if 2 * u64::from(r) < t_max);
    Ok(ReturnCurve {
        axis: TimeAxis::Discrete,
        times: times.iter().map(|&t| t as f64).collect(),
        estimates: accs.iter().map(|a| a.mean()).collect(),
        stderrs: accs.iter().map(|a| a.stderr()).collect(),
        n_trees,
        model_tag: format!("{model}/{}", conditioning_name(conditioning)),
        truncation_radius: truncated.then_some(radius),
    })
}

pub(crate) fn conditioning_name(c: Conditioning) -> &'static str {
    match c {
        Conditioning::Unconditional => "unconditional",
        Conditioning::Survivor => "survivor",
        Conditioning::Extinct => "extinct",
    }
}
