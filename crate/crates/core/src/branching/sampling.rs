use serde::{Deserialize, Serialize};

use super::{BranchingError, Budget, OffspringModel, SampledTree, TreeLaw, TypeTag};
use crate::numeric::{least_squares, MeanAccumulator};
use crate::parallel::try_map_chunks;
use crate::seed::SampleSeed;

/// Which tree law to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conditioning {
    Unconditional,
    Survivor,
    Extinct,
}

/// Unconditioned tree grown breadth-first within `budget`; tags are untyped.
pub fn sample_unconditional(model: &OffspringModel, seed: SampleSeed, budget: Budget) -> SampledTree {
    let mut tree = SampledTree::root(seed.root_key(), TypeTag::Untyped);
    tree.grow(&TreeLaw::new(model), budget);
    tree
}

fn require_extinction(model: &OffspringModel) -> Result<(), BranchingError> {
    if !model.is_supercritical() {
        return Err(BranchingError::SubcriticalModel { mean: model.mean() });
    }
    if model.extinction() == 0.0 {
        return Err(BranchingError::NoExtinction);
    }
    Ok(())
}

/// Finite tree with the law of the process conditioned on extinction.
pub fn sample_extinct(
    model: &OffspringModel,
    seed: SampleSeed,
    size_cap: usize,
) -> Result<SampledTree, BranchingError> {
    require_extinction(model)?;
    let law = TreeLaw::new(model);
    sample_extinct_with(&law, seed, size_cap)
}

fn sample_extinct_with(
    law: &TreeLaw,
    seed: SampleSeed,
    size_cap: usize,
) -> Result<SampledTree, BranchingError> {
    let mut tree = SampledTree::root(seed.root_key(), TypeTag::E);
    tree.grow(law, Budget::vertices(size_cap));
    if !tree.is_finite_complete() {
        return Err(BranchingError::SizeCapExceeded {
            cap: size_cap,
            sample: seed.index,
        });
    }
    Ok(tree)
}

/// Tree conditioned on survival, grown breadth-first within `budget`.
pub fn sample_survivor(
    model: &OffspringModel,
    seed: SampleSeed,
    budget: Budget,
) -> Result<SampledTree, BranchingError> {
    if !model.is_supercritical() {
        return Err(BranchingError::SubcriticalModel { mean: model.mean() });
    }
    let mut tree = SampledTree::root(seed.root_key(), TypeTag::S);
    tree.grow(&TreeLaw::new(model), budget);
    Ok(tree)
}

/// Dispatches on `conditioning`. Extinct trees ignore `budget.max_depth` and
/// use `budget.max_vertices` as the size cap.
pub fn sample_tree(
    model: &OffspringModel,
    seed: SampleSeed,
    budget: Budget,
    conditioning: Conditioning,
) -> Result<SampledTree, BranchingError> {
    match conditioning {
        Conditioning::Unconditional => Ok(sample_unconditional(model, seed, budget)),
        Conditioning::Survivor => sample_survivor(model, seed, budget),
        Conditioning::Extinct => sample_extinct(model, seed, budget.max_vertices),
    }
}

/// Monte-Carlo estimate of `P(|T| >= M | T finite)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgenyTailEstimate {
    pub threshold: usize,
    pub probability: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

/// Estimates `P(|T| >= threshold | T finite)` from `n_samples` extinct trees.
///
/// Trees are only grown until they reach the threshold, so large thresholds
/// cost no more than `threshold` vertices per sample.
pub fn progeny_tail(
    model: &OffspringModel,
    threshold: usize,
    n_samples: u64,
    seed: u64,
) -> Result<ProgenyTailEstimate, BranchingError> {
    require_extinction(model)?;
    let law = TreeLaw::new(model);
    let parts = try_map_chunks(n_samples, |range| {
        let mut acc = MeanAccumulator::new();
        for i in range {
            let mut tree = SampledTree::root(SampleSeed::new(seed, i).root_key(), TypeTag::E);
            tree.grow(&law, Budget::vertices(threshold.saturating_sub(1).max(1)));
            let reached = !tree.is_finite_complete() || tree.len() >= threshold;
            acc.push(if reached { 1.0 } else { 0.0 });
        }
        Ok::<_, BranchingError>(acc)
    })?;
    let mut acc = MeanAccumulator::new();
    for p in &parts {
        acc.merge(p);
    }
    Ok(ProgenyTailEstimate {
        threshold,
        probability: if n_samples == 0 { f64::NAN } else { acc.mean() },
        stderr: acc.stderr(),
        n_samples,
    })
}

/// Least-squares slope of `ln P(|T| >= M | finite)` against `M`.
pub fn progeny_tail_slope(estimates: &[ProgenyTailEstimate]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = estimates
        .iter()
        .filter(|e| e.probability > 0.0)
        .map(|e| (e.threshold as f64, e.probability.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(least_squares(&xs, &ys).slope)
}
