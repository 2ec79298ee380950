use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::InducedError;
use crate::isoperimetry::{HostGraph, IslandDecomposition, QParam};
use crate::numeric::format_float;
use crate::seed::fingerprint;

/// Where an induced graph came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedProvenance {
    pub host_id: String,
    pub q: QParam,
    pub decomposition_id: String,
}

/// Weighted graph on the ocean vertices of a host.
///
/// Vertices are addressed by host id. `exterior(x)` is the weight of the edges
/// from `x` into unexplored territory, so
/// `vertex_weight(x) = sum_y w(x, y) + exterior(x) = deg(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedWalkGraph {
    host_len: usize,
    ocean: Vec<u32>,
    /// Host id to ocean index, `u32::MAX` for island vertices.
    index: Vec<u32>,
    /// Per ocean index: neighbours by ocean index with weights, sorted, self-loop included.
    weights: Vec<Vec<(u32, f64)>>,
    exterior: Vec<f64>,
    vertex_weight: Vec<f64>,
    /// False for ocean vertices bordering an island that touches the frontier.
    exact: Vec<bool>,
    root: Option<u32>,
    pub provenance: InducedProvenance,
}

impl InducedWalkGraph {
    pub fn ocean(&self) -> &[u32] {
        &self.ocean
    }

    pub fn host_len(&self) -> usize {
        self.host_len
    }

    pub fn root(&self) -> Option<u32> {
        self.root
    }

    pub fn contains(&self, x: u32) -> bool {
        self.index.get(x as usize).is_some_and(|&i| i != u32::MAX)
    }

    pub(crate) fn ocean_index(&self, x: u32) -> Result<usize, InducedError> {
        match self.index.get(x as usize) {
            Some(&i) if i != u32::MAX => Ok(i as usize),
            _ => Err(InducedError::NotOcean(x)),
        }
    }

    /// `w(x, y)`, zero when absent or either vertex is not in the ocean.
    pub fn weight(&self, x: u32, y: u32) -> f64 {
        let (Ok(i), Ok(j)) = (self.ocean_index(x), self.ocean_index(y)) else {
            return 0.0;
        };
        let row = &self.weights[i];
        row.binary_search_by_key(&(j as u32), |e| e.0).map_or(0.0, |k| row[k].1)
    }

    /// Neighbours of `x` (host ids) with weights, self-loop included.
    pub fn neighbors(&self, x: u32) -> impl Iterator<Item = (u32, f64)> + '_ {
        let row = self.ocean_index(x).map_or(&[][..], |i| &self.weights[i][..]);
        row.iter().map(|&(j, w)| (self.ocean[j as usize], w))
    }

    pub fn exterior(&self, x: u32) -> f64 {
        self.ocean_index(x).map_or(0.0, |i| self.exterior[i])
    }

    /// Whether the row of `x` is fully determined by the explored host.
    pub fn is_exact(&self, x: u32) -> bool {
        self.ocean_index(x).is_ok_and(|i| self.exact[i])
    }

    /// Ocean vertices whose rows are exact.
    pub fn exact_vertices(&self) -> Vec<u32> {
        self.ocean.iter().zip(&self.exact).filter(|e| *e.1).map(|e| *e.0).collect()
    }

    pub fn vertex_weight(&self, x: u32) -> f64 {
        self.ocean_index(x).map_or(0.0, |i| self.vertex_weight[i])
    }

    pub(crate) fn rows(&self) -> &[Vec<(u32, f64)>] {
        &self.weights
    }

    pub(crate) fn exterior_weights(&self) -> &[f64] {
        &self.exterior
    }

    pub(crate) fn vertex_weights(&self) -> &[f64] {
        &self.vertex_weight
    }

    /// Text form: a JSON header comment, one `#vertex x weight` line per
    /// ocean vertex, one `#exterior x weight` line where nonzero and one
    /// `u v w` line per weighted pair with `u <= v`.
    pub fn to_text(&self) -> String {
        let header = serde_json::json!({
            "provenance": self.provenance,
            "host_vertices": self.host_len,
            "root": self.root,
        });
        let mut out = format!("# {header}\n");
        for (i, &x) in self.ocean.iter().enumerate() {
            let _ = writeln!(out, "#vertex {x} {}", format_float(self.vertex_weight[i]));
            if self.exterior[i] > 0.0 {
                let _ = writeln!(out, "#exterior {x} {}", format_float(self.exterior[i]));
            }
            if !self.exact[i] {
                let _ = writeln!(out, "#inexact {x}");
            }
        }
        for (i, row) in self.weights.iter().enumerate() {
            for &(j, w) in row.iter().filter(|e| e.0 as usize >= i) {
                let _ = writeln!(out, "{} {} {}", self.ocean[i], self.ocean[j as usize], format_float(w));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, InducedError> {
        #[derive(Deserialize)]
        struct Header {
            provenance: InducedProvenance,
            host_vertices: usize,
            root: Option<u32>,
        }
        let mut header: Option<Header> = None;
        let mut vertices = Vec::new();
        let mut exterior = Vec::new();
        let mut inexact = Vec::new();
        let mut edges = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let bad = || InducedError::Malformed(format!("line {}: {raw:?}", no + 1));
            if line.is_empty() {
                continue;
            }
            if let Some(json) = line.strip_prefix("# ") {
                header = Some(serde_json::from_str(json).map_err(|e| InducedError::Malformed(e.to_string()))?);
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let id = |s: &str| s.parse::<u32>().map_err(|_| bad());
            let val = |s: &str| s.parse::<f64>().map_err(|_| bad());
            match f.as_slice() {
                ["#vertex", x, w] => vertices.push((id(x)?, val(w)?)),
                ["#exterior", x, w] => exterior.push((id(x)?, val(w)?)),
                ["#inexact", x] => inexact.push(id(x)?),
                [u, v, w] => edges.push((id(u)?, id(v)?, val(w)?)),
                _ => return Err(bad()),
            }
        }
        let header = header.ok_or_else(|| InducedError::Malformed("missing header".into()))?;
        let n = header.host_vertices;
        let mut index = vec![u32::MAX; n];
        let mut ocean = Vec::with_capacity(vertices.len());
        let mut vertex_weight = Vec::with_capacity(vertices.len());
        for &(x, w) in &vertices {
            let slot = index
                .get_mut(x as usize)
                .ok_or_else(|| InducedError::Malformed(format!("vertex {x} out of range")))?;
            *slot = ocean.len() as u32;
            ocean.push(x);
            vertex_weight.push(w);
        }
        let lookup = |x: u32| match index.get(x as usize) {
            Some(&i) if i != u32::MAX => Ok(i),
            _ => Err(InducedError::NotOcean(x)),
        };
        let mut ext = vec![0.0; ocean.len()];
        for (x, w) in exterior {
            ext[lookup(x)? as usize] = w;
        }
        let mut exact = vec![true; ocean.len()];
        for x in inexact {
            exact[lookup(x)? as usize] = false;
        }
        let mut weights = vec![Vec::new(); ocean.len()];
        for (u, v, w) in edges {
            let (i, j) = (lookup(u)?, lookup(v)?);
            weights[i as usize].push((j, w));
            if i != j {
                weights[j as usize].push((i, w));
            }
        }
        for row in &mut weights {
            row.sort_by_key(|e| e.0);
        }
        Ok(Self {
            host_len: n,
            ocean,
            index,
            weights,
            exterior: ext,
            vertex_weight,
            exact,
            root: header.root,
            provenance: header.provenance,
        })
    }
}

/// Assembles the induced weights.
///
/// A step from ocean `x` to ocean `y` contributes 1. A step into an island
/// vertex `a` contributes `P_a(first ocean vertex is y)`, obtained from one LU
/// solve per island with the island's ocean neighbours as absorbing states.
/// Every island must avoid the frontier.
pub fn build_induced(host: &HostGraph, dec: &IslandDecomposition) -> Result<InducedWalkGraph, InducedError> {
    assemble(host, dec, true)
}

/// As [`build_induced`], but an island touching the frontier is treated as
/// unexplored: edges into it count as exterior weight and its ocean
/// neighbours are marked inexact.
pub fn build_induced_partial(host: &HostGraph, dec: &IslandDecomposition) -> Result<InducedWalkGraph, InducedError> {
    assemble(host, dec, false)
}

fn assemble(host: &HostGraph, dec: &IslandDecomposition, strict: bool) -> Result<InducedWalkGraph, InducedError> {
    let n = host.len();
    let mask = {
        let mut m = vec![false; n];
        for &v in dec.islands.iter().flatten() {
            *m.get_mut(v as usize)
                .ok_or_else(|| InducedError::Mismatch(format!("island vertex {v} not in host")))? = true;
        }
        m
    };
    if dec.ocean.len() + dec.island_vertex_count() != n {
        return Err(InducedError::Mismatch("islands and ocean do not partition the host".into()));
    }
    let mut index = vec![u32::MAX; n];
    let mut ocean = Vec::with_capacity(dec.ocean.len());
    for v in 0..n as u32 {
        if !mask[v as usize] {
            index[v as usize] = ocean.len() as u32;
            ocean.push(v);
        }
    }
    let mut weights: Vec<Vec<(u32, f64)>> = vec![Vec::new(); ocean.len()];
    let mut exterior = vec![0.0; ocean.len()];
    let mut vertex_weight = vec![0.0; ocean.len()];
    let mut exact = vec![true; ocean.len()];
    for (i, &x) in ocean.iter().enumerate() {
        exterior[i] = f64::from(host.frontier_edges(x));
        vertex_weight[i] = f64::from(host.degree(x));
        for &y in host.neighbors(x) {
            if !mask[y as usize] {
                weights[i].push((index[y as usize], 1.0));
            }
        }
    }
    for island in &dec.islands {
        let local = |v: u32| island.binary_search(&v).ok();
        if let Some(&v) = island.iter().find(|&&v| host.frontier_edges(v) > 0) {
            if strict {
                return Err(InducedError::InfiniteIsland { vertex: v });
            }
            for &a_v in island {
                for &x in host.neighbors(a_v).iter().filter(|&&x| !mask[x as usize]) {
                    let i = index[x as usize] as usize;
                    exterior[i] += 1.0;
                    exact[i] = false;
                }
            }
            continue;
        }
        let mut shore: Vec<u32> = island
            .iter()
            .flat_map(|&a| host.neighbors(a).iter().copied())
            .filter(|&y| !mask[y as usize])
            .collect();
        shore.sort_unstable();
        shore.dedup();
        let (k, m) = (island.len(), shore.len());
        // (I - P_II) H = P_I,shore
        let mut a = DMatrix::<f64>::identity(k, k);
        let mut b = DMatrix::<f64>::zeros(k, m);
        for (r, &v) in island.iter().enumerate() {
            let p = 1.0 / f64::from(host.degree(v));
            for &w in host.neighbors(v) {
                match local(w) {
                    Some(c) => a[(r, c)] -= p,
                    None => b[(r, shore.binary_search(&w).expect("shore vertex"))] += p,
                }
            }
        }
        let h = a
            .lu()
            .solve(&b)
            .ok_or(InducedError::SingularSystem { vertex: island[0] })?;
        for &x in &shore {
            let i = index[x as usize] as usize;
            for &a_v in host.neighbors(x).iter().filter(|&&a_v| mask[a_v as usize]) {
                if let Some(r) = local(a_v) {
                    for (c, &y) in shore.iter().enumerate() {
                        let hv = h[(r, c)];
                        if hv != 0.0 {
                            weights[i].push((index[y as usize], hv));
                        }
                    }
                }
            }
        }
    }
    for row in &mut weights {
        row.sort_by_key(|e| e.0);
        row.dedup_by(|later, first| {
            if later.0 == first.0 {
                first.1 += later.1;
                true
            } else {
                false
            }
        });
    }
    let root = host.root().filter(|&r| !mask[r as usize]);
    let host_id = format!("{:016x}", fingerprint(host.to_edge_list().as_bytes()));
    let decomposition_id = format!("{:016x}", fingerprint(dec.to_json().as_bytes()));
    Ok(InducedWalkGraph {
        host_len: n,
        ocean,
        index,
        weights,
        exterior,
        vertex_weight,
        exact,
        root,
        provenance: InducedProvenance { host_id, q: dec.q, decomposition_id },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::SampledTree;
    use crate::isoperimetry::islands;

    /// Center 0 with ocean leaves 1, 2, 3 (each with frontier edges) and a
    /// pendant path 4-5-6-7.
    fn pendant_host() -> HostGraph {
        HostGraph::new(
            8,
            &[(0, 1), (0, 2), (0, 3), (0, 4), (4, 5), (5, 6), (6, 7)],
            &[(1, 2), (2, 2), (3, 2)],
            Some(0),
        )
        .unwrap()
    }

    #[test]
    fn no_islands_gives_host_edges() {
        let host = HostGraph::from_tree(&SampledTree::regular(2, 4));
        let dec = islands(&host, QParam::rational(1, 5).unwrap()).unwrap();
        assert!(dec.islands.is_empty());
        let g = build_induced(&host, &dec).unwrap();
        for x in 0..host.len() as u32 {
            for y in 0..host.len() as u32 {
                let want = if host.neighbors(x).contains(&y) { 1.0 } else { 0.0 };
                assert_eq!(g.weight(x, y), want);
            }
            assert_eq!(g.vertex_weight(x), f64::from(host.degree(x)));
        }
    }

    #[test]
    fn pendant_path_becomes_self_loop() {
        let host = pendant_host();
        let dec = islands(&host, QParam::rational(3, 10).unwrap()).unwrap();
        assert_eq!(dec.islands, vec![vec![4, 5, 6, 7]]);
        let g = build_induced(&host, &dec).unwrap();
        for y in 1..4 {
            assert_eq!(g.weight(0, y), 1.0);
        }
        assert!((g.weight(0, 0) - 1.0).abs() < 1e-14);
        assert_eq!(g.vertex_weight(0), 4.0);
    }

    #[test]
    fn leaf_island_one_step_excursion() {
        // o - x, x has a leaf child l forming the island and frontier elsewhere
        let host = HostGraph::new(3, &[(0, 1), (1, 2)], &[(0, 5), (1, 5)], Some(0)).unwrap();
        let dec = IslandDecomposition {
            q: QParam::rational(1, 1).unwrap(),
            islands: vec![vec![2]],
            ocean: vec![0, 1],
            iotas: vec![0.0],
            moat_certified: true,
        };
        let g = build_induced(&host, &dec).unwrap();
        assert!((g.weight(1, 1) - 1.0).abs() < 1e-15);
        assert_eq!(g.weight(0, 1), 1.0);
    }

    #[test]
    fn frontier_island_is_rejected() {
        let host = HostGraph::new(2, &[(0, 1)], &[(1, 1), (0, 9)], Some(0)).unwrap();
        let dec = IslandDecomposition {
            q: QParam::rational(1, 1).unwrap(),
            islands: vec![vec![1]],
            ocean: vec![0],
            iotas: vec![0.0],
            moat_certified: false,
        };
        assert_eq!(build_induced(&host, &dec), Err(InducedError::InfiniteIsland { vertex: 1 }));
        let g = build_induced_partial(&host, &dec).unwrap();
        assert!(!g.is_exact(0));
        assert_eq!(g.exterior(0), 10.0);
        assert_eq!(g.weight(0, 0), 0.0);
        assert!(g.exact_vertices().is_empty());
    }

    #[test]
    fn two_shore_island_is_symmetric() {
        // cycle 0-1-2-3-0 plus chord-free path; island {1} touches 0 and 2
        let host = HostGraph::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], &[(0, 1), (2, 1), (3, 1)], Some(0)).unwrap();
        let dec = IslandDecomposition {
            q: QParam::rational(1, 1).unwrap(),
            islands: vec![vec![1]],
            ocean: vec![0, 2, 3],
            iotas: vec![0.0],
            moat_certified: true,
        };
        let g = build_induced(&host, &dec).unwrap();
        assert!((g.weight(0, 2) - 0.5).abs() < 1e-15);
        assert_eq!(g.weight(0, 2), g.weight(2, 0));
        assert!((g.weight(0, 0) - 0.5).abs() < 1e-15);
        let total: f64 = g.neighbors(0).map(|e| e.1).sum::<f64>() + g.exterior(0);
        assert!((total - g.vertex_weight(0)).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let host = pendant_host();
        let dec = islands(&host, QParam::rational(3, 10).unwrap()).unwrap();
        let g = build_induced(&host, &dec).unwrap();
        let text = g.to_text();
        assert!(text.starts_with("# {"));
        assert!(text.contains("\n0 0 "));
        assert_eq!(InducedWalkGraph::from_text(&text).unwrap(), g);
    }
}
