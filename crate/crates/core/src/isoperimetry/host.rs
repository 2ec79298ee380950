use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::IsoError;
use crate::branching::{SampledTree, VertexId};

/// A finite graph whose vertices may carry edges into unexplored territory.
///
/// `degree(v)` counts interior neighbours plus frontier edges, so a truncated
/// tree keeps the degrees of the underlying infinite tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostGraph {
    adj: Vec<Vec<u32>>,
    frontier: Vec<u32>,
    root: Option<u32>,
}

impl HostGraph {
    /// Builds a host on `n` vertices. Duplicate edges and self-loops are rejected.
    pub fn new(n: usize, edges: &[(u32, u32)], frontier: &[(u32, u32)], root: Option<u32>) -> Result<Self, IsoError> {
        let mut adj = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(IsoError::UnknownVertex(u.max(v)));
            }
            if u == v || !seen.insert((u.min(v), u.max(v))) {
                return Err(IsoError::MalformedHost(format!("edge {u} {v} repeated or a loop")));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let mut fr = vec![0u32; n];
        for &(v, k) in frontier {
            *fr.get_mut(v as usize).ok_or(IsoError::UnknownVertex(v))? += k;
        }
        if let Some(r) = root {
            if r as usize >= n {
                return Err(IsoError::UnknownVertex(r));
            }
        }
        Ok(Self { adj, frontier: fr, root })
    }

    /// Host on the expanded vertices of `tree` (ids preserved); every edge to an
    /// unexpanded child becomes a frontier edge.
    pub fn from_tree(tree: &SampledTree) -> Self {
        Self::from_tree_ball(tree, u32::MAX)
    }

    /// Host on the vertices of depth `<= radius` that are expanded. Requires the
    /// breadth-first layout of [`SampledTree`], so interior ids form a prefix.
    pub fn from_tree_ball(tree: &SampledTree, radius: u32) -> Self {
        let n = (0..tree.len() as VertexId)
            .take_while(|&v| tree.is_expanded(v) && tree.depth(v) <= radius)
            .count();
        let mut adj = vec![Vec::new(); n];
        let mut frontier = vec![0u32; n];
        for v in 0..n as VertexId {
            for c in tree.children(v) {
                if (c as usize) < n {
                    adj[v as usize].push(c);
                    adj[c as usize].push(v);
                } else {
                    frontier[v as usize] += 1;
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Self {
            adj,
            frontier,
            root: (n > 0).then_some(0),
        }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn root(&self) -> Option<u32> {
        self.root
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn frontier_edges(&self, v: u32) -> u32 {
        self.frontier[v as usize]
    }

    pub fn degree(&self, v: u32) -> u32 {
        self.adj[v as usize].len() as u32 + self.frontier[v as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Connected components of the interior, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<u32>> {
        let n = self.len();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s as u32];
            comp[s] = id;
            let mut i = 0;
            while i < members.len() {
                let v = members[i];
                for &w in &self.adj[v as usize] {
                    if comp[w as usize] == usize::MAX {
                        comp[w as usize] = id;
                        members.push(w);
                    }
                }
                i += 1;
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Subgraph induced by the sorted vertex list `keep`, relabelled by
    /// position; frontier counts are kept and the root follows if present.
    pub fn subgraph(&self, keep: &[u32]) -> HostGraph {
        let mut local = vec![u32::MAX; self.len()];
        for (i, &v) in keep.iter().enumerate() {
            local[v as usize] = i as u32;
        }
        let adj = keep
            .iter()
            .map(|&v| {
                let mut row: Vec<u32> = self.adj[v as usize]
                    .iter()
                    .map(|&w| local[w as usize])
                    .filter(|&w| w != u32::MAX)
                    .collect();
                row.sort_unstable();
                row
            })
            .collect();
        HostGraph {
            adj,
            frontier: keep.iter().map(|&v| self.frontier[v as usize]).collect(),
            root: self.root.map(|r| local[r as usize]).filter(|&r| r != u32::MAX),
        }
    }

    /// Vertices within graph distance `radius` of `center`, sorted.
    pub fn ball(&self, center: u32, radius: u32) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.len()];
        dist[center as usize] = 0;
        let mut queue = std::collections::VecDeque::from([center]);
        let mut out = Vec::new();
        while let Some(v) = queue.pop_front() {
            out.push(v);
            let d = dist[v as usize];
            if d == radius {
                continue;
            }
            for &w in &self.adj[v as usize] {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = d + 1;
                    queue.push_back(w);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn is_forest(&self) -> bool {
        self.edge_count() + self.components().len() == self.len()
    }

    /// Edge-list text: `#vertices n`, optional `#root r`, one `u v` line per
    /// edge and one `#frontier u k` line per vertex with frontier edges.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("#vertices {}\n", self.len());
        if let Some(r) = self.root {
            let _ = writeln!(out, "#root {r}");
        }
        for (u, list) in self.adj.iter().enumerate() {
            for &v in list.iter().filter(|&&v| v as usize > u) {
                let _ = writeln!(out, "{u} {v}");
            }
        }
        for (u, &k) in self.frontier.iter().enumerate().filter(|(_, k)| **k > 0) {
            let _ = writeln!(out, "#frontier {u} {k}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self, IsoError> {
        let mut n: Option<usize> = None;
        let mut root = None;
        let mut edges = Vec::new();
        let mut frontier = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || IsoError::MalformedHost(format!("line {}: {raw:?}", no + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<u32>().map_err(|_| bad());
            match fields.as_slice() {
                ["#vertices", k] => n = Some(num(k)? as usize),
                ["#root", r] => root = Some(num(r)?),
                ["#frontier", u, k] => frontier.push((num(u)?, num(k)?)),
                [first, ..] if first.starts_with('#') => {}
                [u, v] => edges.push((num(u)?, num(v)?)),
                _ => return Err(bad()),
            }
        }
        let n = n.unwrap_or_else(|| {
            edges
                .iter()
                .flat_map(|&(u, v)| [u, v])
                .chain(frontier.iter().map(|&(u, _)| u))
                .max()
                .map_or(0, |m| m as usize + 1)
        });
        Self::new(n, &edges, &frontier, root)
    }
}
