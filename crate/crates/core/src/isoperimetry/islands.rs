use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{HostGraph, IsoError, QParam};

/// Largest interior handled by [`islands_bruteforce`].
pub const BRUTEFORCE_MAX: usize = 22;

/// `q|V| - |dV|` kept as the integer pair `(|V|, |dV|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Iso {
    pub size: i64,
    pub boundary: i64,
}

impl Iso {
    fn add(self, o: Iso) -> Iso {
        Iso { size: self.size + o.size, boundary: self.boundary + o.boundary }
    }

    fn minus_edge(self) -> Iso {
        Iso { size: self.size, boundary: self.boundary + 1 }
    }

    /// Compares isolation values exactly.
    pub fn cmp_value(&self, other: &Iso, q: &QParam) -> Ordering {
        q.cmp_scaled(self.size - other.size, self.boundary - other.boundary)
    }

    /// Larger isolation first, then smaller size.
    fn cmp_lex(&self, other: &Iso, q: &QParam) -> Ordering {
        self.cmp_value(other, q).then(other.size.cmp(&self.size))
    }

    pub fn value(&self, q: &QParam) -> f64 {
        q.eval(self.size, self.boundary)
    }
}

/// Size and edge boundary of `set` (which must not repeat vertices).
pub fn boundary(host: &HostGraph, set: &[u32]) -> Result<Iso, IsoError> {
    let mut member = vec![false; host.len()];
    for &v in set {
        let slot = member.get_mut(v as usize).ok_or(IsoError::UnknownVertex(v))?;
        *slot = true;
    }
    let mut b = 0i64;
    for &v in set {
        b += i64::from(host.frontier_edges(v));
        b += host.neighbors(v).iter().filter(|&&w| !member[w as usize]).count() as i64;
    }
    Ok(Iso { size: member.iter().filter(|&&m| m).count() as i64, boundary: b })
}

/// `q|V| - |dV|`, counting frontier edges of members as boundary.
pub fn isolation(host: &HostGraph, set: &[u32], q: &QParam) -> Result<f64, IsoError> {
    Ok(boundary(host, set)?.value(q))
}

/// Union of all q-isolated cores split into connected components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IslandDecomposition {
    pub q: QParam,
    /// Sorted islands, ordered by smallest member.
    pub islands: Vec<Vec<u32>>,
    pub ocean: Vec<u32>,
    /// Isolation value of each island.
    pub iotas: Vec<f64>,
    /// True when no island vertex has a frontier edge, so unexplored
    /// territory cannot change the islands.
    pub moat_certified: bool,
}

impl IslandDecomposition {
    /// Builds the decomposition from the union of cores `core`.
    fn from_union(host: &HostGraph, q: QParam, core: &[bool]) -> Self {
        let n = host.len();
        let mut seen = vec![false; n];
        let mut islands = Vec::new();
        for s in 0..n {
            if !core[s] || seen[s] {
                continue;
            }
            let mut comp = vec![s as u32];
            seen[s] = true;
            let mut i = 0;
            while i < comp.len() {
                for &w in host.neighbors(comp[i]) {
                    if core[w as usize] && !seen[w as usize] {
                        seen[w as usize] = true;
                        comp.push(w);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            islands.push(comp);
        }
        let iotas = islands
            .iter()
            .map(|c| boundary(host, c).expect("island vertices exist").value(&q))
            .collect();
        let ocean = (0..n as u32).filter(|&v| !core[v as usize]).collect();
        let moat_certified = islands.iter().flatten().all(|&v| host.frontier_edges(v) == 0);
        Self { q, islands, ocean, iotas, moat_certified }
    }

    /// Indicator of island membership over the host's vertices.
    pub fn island_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &v in self.islands.iter().flatten() {
            mask[v as usize] = true;
        }
        mask
    }

    pub fn island_vertex_count(&self) -> usize {
        self.islands.iter().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("decomposition serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, IsoError> {
        serde_json::from_str(text).map_err(|e| IsoError::MalformedHost(e.to_string()))
    }
}

/// Islands by exhaustive enumeration of all vertex subsets.
///
/// `V` is a core iff `iota(W) < iota(V)` for every proper subset `W`, which is
/// decided with the subset maxima `best(V) = max_{W subset V} iota(W)`.
pub fn islands_bruteforce(host: &HostGraph, q: QParam) -> Result<IslandDecomposition, IsoError> {
    let n = host.len();
    if n > BRUTEFORCE_MAX {
        return Err(IsoError::TooLarge { size: n, cap: BRUTEFORCE_MAX });
    }
    let full = 1usize << n;
    let nbr_mask: Vec<u32> = (0..n)
        .map(|v| host.neighbors(v as u32).iter().fold(0u32, |m, &w| m | (1 << w)))
        .collect();
    let mut iso = vec![Iso::default(); full];
    for set in 1..full {
        let v = set.trailing_zeros() as usize;
        let rest = set & (set - 1);
        let prev = iso[rest];
        let inner = (nbr_mask[v] & rest as u32).count_ones() as i64;
        let outer = host.neighbors(v as u32).len() as i64 - inner + i64::from(host.frontier_edges(v as u32));
        // adding v: its edges into `rest` stop being boundary, its others start
        iso[set] = Iso {
            size: prev.size + 1,
            boundary: prev.boundary - inner + outer,
        };
    }
    let better = |a: Iso, b: Iso| if a.cmp_value(&b, &q) == Ordering::Less { b } else { a };
    let mut best = iso.clone();
    for set in 1..full {
        let mut bits = set;
        while bits != 0 {
            let v = bits.trailing_zeros();
            bits &= bits - 1;
            best[set] = better(best[set], best[set & !(1 << v)]);
        }
    }
    let mut core = vec![false; n];
    for set in 1..full {
        let mut proper_best: Option<Iso> = None;
        let mut bits = set;
        while bits != 0 {
            let v = bits.trailing_zeros();
            bits &= bits - 1;
            let b = best[set & !(1 << v)];
            proper_best = Some(proper_best.map_or(b, |p| better(p, b)));
        }
        let dominated = proper_best.is_some_and(|p| p.cmp_value(&iso[set], &q) != Ordering::Less);
        if !dominated {
            let mut bits = set;
            while bits != 0 {
                core[bits.trailing_zeros() as usize] = true;
                bits &= bits - 1;
            }
        }
    }
    Ok(IslandDecomposition::from_union(host, q, &core))
}

/// Islands on a forest host in linear time.
///
/// The union of all cores equals the smallest maximizer of `iota`: the
/// function is supermodular, so maximizers are closed under intersection and
/// every core lies inside each of them. A rooted dynamic program finds the
/// maximizer of least size by comparing `(iota, -|V|)` lexicographically.
pub fn islands(host: &HostGraph, q: QParam) -> Result<IslandDecomposition, IsoError> {
    if !host.is_forest() {
        return Err(IsoError::NotATree);
    }
    let n = host.len();
    // preorder per component so every child follows its parent
    let mut order = Vec::with_capacity(n);
    let mut parent = vec![u32::MAX; n];
    let mut visited = vec![false; n];
    for s in 0..n {
        if visited[s] {
            continue;
        }
        visited[s] = true;
        let start = order.len();
        order.push(s as u32);
        let mut i = start;
        while i < order.len() {
            let v = order[i];
            for &w in host.neighbors(v) {
                if !visited[w as usize] {
                    visited[w as usize] = true;
                    parent[w as usize] = v;
                    order.push(w);
                }
            }
            i += 1;
        }
    }
    let pick = |a: Iso, b: Iso| if a.cmp_lex(&b, &q) == Ordering::Less { b } else { a };
    // f_in: best set in the subtree containing v; f_out: best set avoiding v
    let mut f_in: Vec<Iso> = (0..n)
        .map(|v| Iso { size: 1, boundary: i64::from(host.frontier_edges(v as u32)) })
        .collect();
    let mut f_out = vec![Iso::default(); n];
    for &v in order.iter().rev() {
        let p = parent[v as usize];
        if p == u32::MAX {
            continue;
        }
        let (vi, vo) = (f_in[v as usize], f_out[v as usize]);
        let p = p as usize;
        f_in[p] = f_in[p].add(pick(vi, vo.minus_edge()));
        f_out[p] = f_out[p].add(pick(vo, vi.minus_edge()));
    }
    let mut inside = vec![false; n];
    for &v in &order {
        let v = v as usize;
        let (vi, vo) = (f_in[v], f_out[v]);
        inside[v] = match parent[v] {
            u32::MAX => vi.cmp_lex(&vo, &q) == Ordering::Greater,
            p if inside[p as usize] => vi.cmp_lex(&vo.minus_edge(), &q) == Ordering::Greater,
            _ => vi.minus_edge().cmp_lex(&vo, &q) == Ordering::Greater,
        };
    }
    Ok(IslandDecomposition::from_union(host, q, &inside))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::SampledTree;

    fn q(s: &str) -> QParam {
        s.parse().unwrap()
    }

    /// Center 0 with three frontier edges and the path 1-2-3-4 hanging off it.
    fn pendant_host() -> HostGraph {
        HostGraph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4)], &[(0, 3)], Some(0)).unwrap()
    }

    #[test]
    fn isolation_examples() {
        let h = pendant_host();
        let q3 = q("0.3");
        assert_eq!(isolation(&h, &[], &q("0.5")).unwrap(), 0.0);
        assert!((isolation(&h, &[4], &q("0.5")).unwrap() + 0.5).abs() < 1e-15);
        assert!((isolation(&h, &[1, 2, 3, 4], &q3).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(isolation(&h, &[9], &q3), Err(IsoError::UnknownVertex(9)));
    }

    #[test]
    fn pendant_path_is_an_island() {
        let h = pendant_host();
        for d in [islands_bruteforce(&h, q("0.3")).unwrap(), islands(&h, q("0.3")).unwrap()] {
            assert_eq!(d.islands, vec![vec![1, 2, 3, 4]]);
            assert_eq!(d.ocean, vec![0]);
            assert!((d.iotas[0] - 0.2).abs() < 1e-15);
            assert!(d.moat_certified);
        }
    }

    #[test]
    fn binary_tree_has_no_islands() {
        let h = HostGraph::from_tree(&SampledTree::regular(2, 3));
        for d in [islands_bruteforce(&h, q("0.9")).unwrap(), islands(&h, q("0.9")).unwrap()] {
            assert!(d.islands.is_empty());
            assert_eq!(d.ocean.len(), 7);
        }
    }

    #[test]
    fn closed_graph_is_one_island() {
        let h = HostGraph::new(4, &[(0, 1), (1, 2), (2, 3)], &[], None).unwrap();
        for d in [islands_bruteforce(&h, q("0.1")).unwrap(), islands(&h, q("0.1")).unwrap()] {
            assert_eq!(d.islands, vec![vec![0, 1, 2, 3]]);
            assert!(d.ocean.is_empty());
        }
        let cyc = HostGraph::new(3, &[(0, 1), (1, 2), (2, 0)], &[], None).unwrap();
        assert_eq!(islands(&cyc, q("0.5")), Err(IsoError::NotATree));
        assert_eq!(islands_bruteforce(&cyc, q("0.5")).unwrap().islands, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn ties_do_not_make_cores() {
        // a single leaf with one frontier edge at q = 1: iota = 0 = iota(empty)
        let h = HostGraph::new(1, &[], &[(0, 1)], None).unwrap();
        assert!(islands_bruteforce(&h, q("1")).unwrap().islands.is_empty());
        assert!(islands(&h, q("1")).unwrap().islands.is_empty());
    }

    #[test]
    fn bruteforce_size_cap() {
        let edges: Vec<(u32, u32)> = (0..22).map(|i| (i, i + 1)).collect();
        let h = HostGraph::new(23, &edges, &[], None).unwrap();
        assert!(matches!(islands_bruteforce(&h, q("0.5")), Err(IsoError::TooLarge { .. })));
    }

    #[test]
    fn json_shape() {
        let d = islands(&pendant_host(), q("0.3")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&d.to_json()).unwrap();
        assert_eq!(v["q"], 0.3);
        assert_eq!(v["islands"], serde_json::json!([[1, 2, 3, 4]]));
        assert_eq!(v["ocean"], serde_json::json!([0]));
        assert_eq!(IslandDecomposition::from_json(&d.to_json()).unwrap(), d);
    }
}
