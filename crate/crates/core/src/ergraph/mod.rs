//! Erdős–Rényi graphs `G(N, lambda/N)`: sampling, components, empirical
//! Laplacian spectra and the atom-at-zero comparison with the limiting tree.

use petgraph::unionfind::UnionFind;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::branching::{sample_extinct, BranchingError, OffspringModel};
use crate::isoperimetry::HostGraph;
use crate::numeric::MeanAccumulator;
use crate::parallel::try_map_chunks;
use crate::seed::SampleSeed;
use crate::spectra::{count_eigs_in, laplacian_eigs, SpectraError, SpectralMeasureEstimate, Variant};

const GRAPH_STREAM: u64 = 0xE7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ErError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("malformed edge list: {0}")]
    Malformed(String),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Branching(#[from] BranchingError),
}

/// A sample of `G(N, lambda/N)` with its connected components.
#[derive(Debug, Clone, PartialEq)]
pub struct ErGraph {
    pub lambda: f64,
    pub graph: HostGraph,
    /// Components, each sorted, ordered by smallest member.
    pub components: Vec<Vec<u32>>,
    /// Index into `components` of the largest one (the first of maximal size).
    pub giant: usize,
}

impl ErGraph {
    /// Wraps a graph and computes components by union-find.
    pub fn from_graph(graph: HostGraph, lambda: f64) -> Self {
        let n = graph.len();
        let mut dsu = UnionFind::<u32>::new(n);
        for v in 0..n as u32 {
            for &w in graph.neighbors(v).iter().filter(|&&w| w > v) {
                dsu.union(v, w);
            }
        }
        let mut slot = vec![usize::MAX; n];
        let mut components: Vec<Vec<u32>> = Vec::new();
        for v in 0..n as u32 {
            let r = dsu.find(v) as usize;
            if slot[r] == usize::MAX {
                slot[r] = components.len();
                components.push(Vec::new());
            }
            components[slot[r]].push(v);
        }
        let giant = components
            .iter()
            .enumerate()
            .fold(0, |best, (i, c)| if c.len() > components[best].len() { i } else { best });
        Self { lambda, graph, components, giant }
    }

    pub fn n(&self) -> usize {
        self.graph.len()
    }

    pub fn giant_size(&self) -> usize {
        self.components.get(self.giant).map_or(0, Vec::len)
    }

    /// Size of the second largest component (0 if there is only one).
    pub fn second_size(&self) -> usize {
        let mut sizes: Vec<usize> = self.components.iter().map(Vec::len).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes.get(1).copied().unwrap_or(0)
    }

    pub fn giant_graph(&self) -> HostGraph {
        self.graph.subgraph(&self.components[self.giant])
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.graph.edge_count() as f64 / self.n() as f64
    }

    /// Edge-list text with a `#gnp lambda` line in front of the host format.
    pub fn to_edge_list(&self) -> String {
        format!("#gnp {}\n{}", self.lambda, self.graph.to_edge_list())
    }

    pub fn from_edge_list(text: &str) -> Result<Self, ErError> {
        let lambda = text
            .lines()
            .find_map(|l| l.trim().strip_prefix("#gnp "))
            .ok_or_else(|| ErError::Malformed("missing #gnp line".into()))?
            .trim()
            .parse::<f64>()
            .map_err(|e| ErError::Malformed(e.to_string()))?;
        let graph = HostGraph::from_edge_list(text).map_err(|e| ErError::Malformed(e.to_string()))?;
        Ok(Self::from_graph(graph, lambda))
    }
}

/// Samples `G(N, lambda/N)` by geometric skipping over the pairs `(v, w)`,
/// `w < v`, in lexicographic order: `O(N + M)` expected time.
pub fn sample_er(n: usize, lambda: f64, seed: SampleSeed) -> Result<ErGraph, ErError> {
    if n < 2 || !(lambda > 0.0 && lambda < n as f64) {
        return Err(ErError::InvalidParams(format!("need N >= 2 and 0 < lambda < N, got N={n}, lambda={lambda}")));
    }
    let p = lambda / n as f64;
    let log_q = (-p).ln_1p();
    let mut rng = seed.stream(GRAPH_STREAM);
    let mut edges = Vec::new();
    let (mut v, mut w) = (1usize, -1i64);
    while v < n {
        let r: f64 = rng.random();
        // skip a Geometric(p) number of pairs; r = 0 maps to an infinite skip
        let skip = ((1.0 - r).ln() / log_q).floor();
        w += 1 + if skip.is_finite() { skip.min(n as f64 * n as f64) as i64 } else { i64::MAX / 4 };
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            edges.push((v as u32, w as u32));
        }
    }
    let graph = HostGraph::new(n, &edges, &[], None).expect("sampled edges are distinct");
    Ok(ErGraph::from_graph(graph, lambda))
}

/// How eigenvalues are counted in [`dos_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DosMode {
    /// Dense eigensolve per component.
    Dense,
    /// Inertia counts at the grid energies.
    Inertia,
}

/// Per-vertex Laplacian eigenvalue counts of one graph in the grid cells.
/// The `components` zero eigenvalues form the atom.
fn graph_dos(g: &ErGraph, grid: &[f64], mode: DosMode) -> Result<(f64, Vec<f64>, f64), ErError> {
    let n = g.n() as f64;
    let mut counts = vec![0usize; grid.len()];
    let nonzero = g.n() - g.components.len();
    match mode {
        DosMode::Dense => {
            for comp in g.components.iter().filter(|c| c.len() > 1) {
                let spec = laplacian_eigs(&g.graph.subgraph(comp), Variant::Laplacian)?;
                for &x in spec.values.iter().skip(1) {
                    let i = crate::spectra::cell_of(grid, x);
                    if i < grid.len() {
                        counts[i] += 1;
                    }
                }
            }
        }
        DosMode::Inertia => {
            let mut below = 0;
            for (i, &e) in grid.iter().enumerate() {
                let c = count_eigs_in(&g.graph, e, Variant::Laplacian)?;
                counts[i] = c - below;
                below = c;
            }
        }
    }
    let inside: usize = counts.iter().sum();
    Ok((
        g.components.len() as f64 / n,
        counts.iter().map(|&c| c as f64 / n).collect(),
        (nonzero - inside) as f64 / n,
    ))
}

/// Averaged empirical spectral measure of the Laplacian of `G(N, lambda/N)`;
/// the atom at zero is the number of components over `N`.
pub fn dos_estimate(
    n: usize,
    lambda: f64,
    n_graphs: u64,
    grid: &[f64],
    seed: u64,
    mode: DosMode,
) -> Result<SpectralMeasureEstimate, ErError> {
    crate::spectra::validate_grid(grid)?;
    let parts = try_map_chunks(n_graphs, |range| {
        let mut acc = crate::spectra::MeasureAccumulator::new(grid.len());
        for i in range {
            let g = sample_er(n, lambda, SampleSeed::new(seed, i))?;
            let (atom, cells, tail) = graph_dos(&g, grid, mode)?;
            acc.push(atom, &cells, tail);
        }
        Ok::<_, ErError>(acc)
    })?;
    let mut acc = crate::spectra::MeasureAccumulator::new(grid.len());
    for p in &parts {
        acc.merge(p);
    }
    Ok(acc.finish(grid, None))
}

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

/// `E*[1_(|T| < inf) / |T|] = Lambda E[1/|T| | |T| < inf]`, the limiting
/// number of components per vertex.
pub fn bgw_atom_at_zero(model: &OffspringModel, n_samples: u64, seed: u64, size_cap: usize) -> Result<Estimate, ErError> {
    if !model.is_supercritical() {
        return Err(BranchingError::SubcriticalModel { mean: model.mean() }.into());
    }
    let lambda_ext = model.extinction();
    if lambda_ext == 0.0 {
        return Ok(Estimate { value: 0.0, stderr: 0.0, n_samples });
    }
    let parts = try_map_chunks(n_samples, |range| {
        let mut acc = MeanAccumulator::new();
        for i in range {
            let t = sample_extinct(model, SampleSeed::new(seed, i), size_cap)?;
            acc.push(1.0 / t.len() as f64);
        }
        Ok::<_, ErError>(acc)
    })?;
    let mut acc = MeanAccumulator::new();
    for p in &parts {
        acc.merge(p);
    }
    Ok(Estimate {
        value: lambda_ext * acc.mean(),
        stderr: lambda_ext * acc.stderr(),
        n_samples,
    })
}

/// Mean number of components per vertex of `G(N, lambda/N)`; equals the
/// atom at zero of [`dos_estimate`] on the same seeds.
pub fn er_atom_at_zero(n: usize, lambda: f64, n_graphs: u64, seed: u64) -> Result<Estimate, ErError> {
    let parts = try_map_chunks(n_graphs, |range| {
        let mut acc = MeanAccumulator::new();
        for i in range {
            let g = sample_er(n, lambda, SampleSeed::new(seed, i))?;
            acc.push(g.components.len() as f64 / n as f64);
        }
        Ok::<_, ErError>(acc)
    })?;
    let mut acc = MeanAccumulator::new();
    for p in &parts {
        acc.merge(p);
    }
    Ok(Estimate {
        value: acc.mean(),
        stderr: acc.stderr(),
        n_samples: n_graphs,
    })
}

/// Averaged `count(]0, E]) / |C_max|` on the giant component, for both Laplacians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GiantMass {
    pub energy: f64,
    pub laplacian: f64,
    pub laplacian_stderr: f64,
    pub normalized: f64,
    pub normalized_stderr: f64,
    /// Samples where the Laplacian count exceeded the normalized count.
    pub trace_violations: u64,
    pub mean_giant_size: f64,
    pub n_graphs: u64,
}

pub fn giant_spectral_mass(n: usize, lambda: f64, n_graphs: u64, e: f64, seed: u64) -> Result<GiantMass, ErError> {
    Ok(giant_spectral_masses(n, lambda, n_graphs, &[e], seed)?.remove(0))
}

/// [`giant_spectral_mass`] at several energies on the same graphs.
pub fn giant_spectral_masses(
    n: usize,
    lambda: f64,
    n_graphs: u64,
    energies: &[f64],
    seed: u64,
) -> Result<Vec<GiantMass>, ErError> {
    if !(lambda > 1.0) {
        return Err(ErError::InvalidParams(format!("lambda = {lambda} must exceed 1")));
    }
    if energies.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(SpectraError::InvalidGrid("energies must be positive".into()).into());
    }
    type Acc = (Vec<MeanAccumulator>, Vec<MeanAccumulator>, Vec<u64>, MeanAccumulator);
    let k = energies.len();
    let new_acc = || -> Acc { (vec![MeanAccumulator::new(); k], vec![MeanAccumulator::new(); k], vec![0; k], MeanAccumulator::new()) };
    let parts = try_map_chunks(n_graphs, |range| {
        let mut acc = new_acc();
        for i in range {
            let g = sample_er(n, lambda, SampleSeed::new(seed, i))?;
            let giant = g.giant_graph();
            let size = giant.len() as f64;
            acc.3.push(size);
            for (j, &e) in energies.iter().enumerate() {
                let lap = count_eigs_in(&giant, e, Variant::Laplacian)?;
                let norm = count_eigs_in(&giant, e, Variant::Normalized)?;
                acc.0[j].push(lap as f64 / size);
                acc.1[j].push(norm as f64 / size);
                acc.2[j] += u64::from(lap > norm);
            }
        }
        Ok::<_, ErError>(acc)
    })?;
    let mut total = new_acc();
    for p in &parts {
        for j in 0..k {
            total.0[j].merge(&p.0[j]);
            total.1[j].merge(&p.1[j]);
            total.2[j] += p.2[j];
        }
        total.3.merge(&p.3);
    }
    Ok((0..k)
        .map(|j| GiantMass {
            energy: energies[j],
            laplacian: total.0[j].mean(),
            laplacian_stderr: total.0[j].stderr(),
            normalized: total.1[j].mean(),
            normalized_stderr: total.1[j].stderr(),
            trace_violations: total.2[j],
            mean_giant_size: total.3.mean(),
            n_graphs,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_lambda_gives_empty_graph() {
        let g = sample_er(10_000, 1e-9, SampleSeed::new(1, 0)).unwrap();
        assert_eq!(g.graph.edge_count(), 0);
        assert_eq!(g.components.len(), 10_000);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(sample_er(1, 0.5, SampleSeed::new(0, 0)).is_err());
        assert!(sample_er(10, 10.0, SampleSeed::new(0, 0)).is_err());
        assert!(sample_er(10, 0.0, SampleSeed::new(0, 0)).is_err());
    }

    #[test]
    fn mean_degree_and_giant() {
        let mut deg = MeanAccumulator::new();
        let mut giant = MeanAccumulator::new();
        for i in 0..20 {
            let g = sample_er(10_000, 2.0, SampleSeed::new(2, i)).unwrap();
            deg.push(g.mean_degree());
            giant.push(g.giant_size() as f64 / 1e4);
        }
        assert!((deg.mean() - 2.0).abs() < 0.1, "{}", deg.mean());
        let survival = 1.0 - OffspringModel::poisson(2.0).unwrap().extinction();
        assert!((giant.mean() - survival).abs() < 0.02, "{}", giant.mean());
    }

    #[test]
    fn dense_complete_graph_pairs() {
        // every pair of a small graph at lambda close to N appears at rate lambda/N
        let mut hits = 0usize;
        let trials = 4000;
        for i in 0..trials {
            let g = sample_er(4, 2.0, SampleSeed::new(3, i)).unwrap();
            hits += g.graph.edge_count();
        }
        let rate = hits as f64 / (trials as f64 * 6.0);
        assert!((rate - 0.5).abs() < 0.02, "{rate}");
    }

    #[test]
    fn kernel_dimension_is_component_count() {
        for i in 0..5 {
            let g = sample_er(300, 1.5, SampleSeed::new(4, i)).unwrap();
            let spec = laplacian_eigs(&g.graph, Variant::Laplacian).unwrap();
            let zeros = spec.values.iter().filter(|x| x.abs() < 1e-8).count();
            assert_eq!(zeros, g.components.len());
        }
    }

    #[test]
    fn dos_modes_agree_and_total_is_one() {
        let grid = [0.13, 0.57, 1.11, 2.37, 4.21];
        let a = dos_estimate(200, 2.0, 3, &grid, 5, DosMode::Dense).unwrap();
        let b = dos_estimate(200, 2.0, 3, &grid, 5, DosMode::Inertia).unwrap();
        let total = a.atom_at_zero + a.masses.iter().sum::<f64>() + a.tail;
        assert!((total - 1.0).abs() < 1e-12);
        for (x, y) in a.masses.iter().zip(&b.masses) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(a.atom_at_zero, b.atom_at_zero);
        let atom = er_atom_at_zero(200, 2.0, 3, 5).unwrap();
        assert!((atom.value - a.atom_at_zero).abs() < 1e-15);
    }

    #[test]
    fn giant_above_spectrum() {
        let g = sample_er(300, 2.0, SampleSeed::new(6, 0)).unwrap();
        let giant = g.giant_graph();
        let max_deg = (0..giant.len() as u32).map(|v| giant.neighbors(v).len()).max().unwrap();
        let e = 2.0 * max_deg as f64 + 1.0;
        let m = giant_spectral_mass(300, 2.0, 1, e, 6).unwrap();
        let size = giant.len() as f64;
        assert!((m.laplacian - (1.0 - 1.0 / size)).abs() < 1e-12);
        assert_eq!(m.trace_violations, 0);
    }

    #[test]
    fn bgw_atom_range() {
        let m = OffspringModel::poisson(2.0).unwrap();
        let a = bgw_atom_at_zero(&m, 2000, 7, 1 << 20).unwrap();
        assert!(a.value > 0.0 && a.value <= m.extinction());
        let sub = OffspringModel::table(&[(0, 1.0)]).unwrap();
        assert!(bgw_atom_at_zero(&sub, 10, 0, 10).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = sample_er(50, 2.0, SampleSeed::new(8, 0)).unwrap();
        let back = ErGraph::from_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(back, g);
    }
}
