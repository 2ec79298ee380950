//! Random small hosts and graphs for the oracle audits.

use rand::Rng;

use crate::isoperimetry::HostGraph;
use crate::seed::SampleSeed;

const FOREST_STREAM: u64 = 0xF0;
const GRAPH_STREAM: u64 = 0x6A;

/// A random forest on `1..=max_vertices` vertices with random frontier
/// counts (0 to 3 per vertex), rooted at 0.
pub fn random_forest_host(seed: SampleSeed, max_vertices: usize) -> HostGraph {
    let mut rng = seed.stream(FOREST_STREAM);
    let n = rng.random_range(1..=max_vertices.max(1));
    let mut edges = Vec::new();
    for v in 1..n as u32 {
        if rng.random_bool(0.9) {
            edges.push((rng.random_range(0..v), v));
        }
    }
    let frontier: Vec<(u32, u32)> = (0..n as u32)
        .filter_map(|v| {
            let k = if rng.random_bool(0.5) { 0 } else { rng.random_range(1..=3) };
            (k > 0).then_some((v, k))
        })
        .collect();
    HostGraph::new(n, &edges, &frontier, Some(0)).expect("generated forest is simple")
}

/// A random connected simple graph on `2..=max_vertices` vertices: a random
/// spanning tree plus independent extra edges at a random density.
pub fn random_connected_graph(seed: SampleSeed, max_vertices: usize) -> HostGraph {
    let mut rng = seed.stream(GRAPH_STREAM);
    let n = rng.random_range(2..=max_vertices.max(2));
    let density: f64 = rng.random_range(0.0..0.35);
    let mut edges: Vec<(u32, u32)> = (1..n as u32).map(|v| (rng.random_range(0..v), v)).collect();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if !edges.contains(&(u, v)) && rng.random_bool(density) {
                edges.push((u, v));
            }
        }
    }
    HostGraph::new(n, &edges, &[], None).expect("generated graph is simple")
}
