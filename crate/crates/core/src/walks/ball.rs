use crate::branching::{SampledTree, VertexId};

use super::WalkError;

/// Simple random walk on the vertices of depth `<= radius`, killed when it
/// steps deeper.
///
/// Because trees are stored breadth-first, the ball is an id prefix and each
/// level is a contiguous range. Transition probabilities use the full degree,
/// so the operator is the exact walk up to the first exit.
#[derive(Debug, Clone)]
pub struct BallWalk {
    radius: u32,
    parent: Vec<u32>,
    child_start: Vec<u32>,
    child_end: Vec<u32>,
    degree: Vec<u32>,
    inv_degree: Vec<f64>,
    /// `level_end[d]` is one past the last id at depth `d`.
    level_end: Vec<usize>,
}

impl BallWalk {
    /// Requires every vertex of depth `<= radius` to be expanded.
    pub fn new(tree: &SampledTree, radius: u32) -> Result<Self, WalkError> {
        let radius = radius.min(tree.max_generated_depth());
        if tree.complete_depth() <= radius {
            return Err(WalkError::InsufficientRadius {
                needed: radius,
                available: tree.complete_depth().saturating_sub(1),
            });
        }
        let mut level_end = Vec::with_capacity(radius as usize + 1);
        let mut n = 0usize;
        for d in 0..=radius {
            while n < tree.len() && tree.depth(n as VertexId) == d {
                n += 1;
            }
            level_end.push(n);
        }
        let mut parent = Vec::with_capacity(n);
        let mut child_start = Vec::with_capacity(n);
        let mut child_end = Vec::with_capacity(n);
        let mut degree = Vec::with_capacity(n);
        for v in 0..n as VertexId {
            parent.push(tree.parent(v).unwrap_or(u32::MAX));
            let ch = tree.children(v);
            child_start.push(ch.start);
            child_end.push(if tree.depth(v) < radius { ch.end } else { ch.start });
            degree.push(tree.degree(v).expect("ball vertices are expanded"));
        }
        let inv_degree = degree
            .iter()
            .map(|&d| if d == 0 { 0.0 } else { 1.0 / d as f64 })
            .collect();
        Ok(Self {
            radius,
            parent,
            child_start,
            child_end,
            degree,
            inv_degree,
            level_end,
        })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn degree(&self, v: usize) -> u32 {
        self.degree[v]
    }

    pub fn max_degree(&self) -> u32 {
        self.degree.iter().copied().max().unwrap_or(0)
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.parent[v];
        (p != u32::MAX).then_some(p as usize)
    }

    /// Children of `v` inside the ball.
    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        self.child_start[v] as usize..self.child_end[v] as usize
    }

    /// Number of ids at depth `<= d` (clamped to the ball).
    pub fn prefix(&self, d: u32) -> usize {
        self.level_end[d.min(self.radius) as usize]
    }

    /// `out = p P` for the killed walk, touching only ids below `prefix(depth + 1)`
    /// where `depth` bounds the support of `p`. `scratch` holds `p / deg`.
    pub fn step(&self, p: &[f64], out: &mut [f64], scratch: &mut [f64], support_depth: u32) {
        let m = self.prefix(support_depth);
        let m_out = self.prefix(support_depth + 1);
        for v in 0..m {
            scratch[v] = p[v] * self.inv_degree[v];
        }
        for v in m..m_out {
            scratch[v] = 0.0;
        }
        out[0] = 0.0;
        for u in 0..m_out {
            let mut acc = if u == 0 { 0.0 } else { scratch[self.parent[u] as usize] };
            if u < m {
                for c in self.children(u) {
                    acc += scratch[c];
                }
            }
            out[u] = acc;
        }
        // single vertex without neighbours: the walk stays put
        if self.degree[0] == 0 {
            out[0] = p[0];
        }
    }

    /// Killed return probabilities `P(X_t = o, no exit)` for even `t = 0, 2, ..., 2 * half_steps`.
    ///
    /// Uses reversibility: `P^(2s)(o,o) = sum_v P^s(o,v)^2 deg(o)/deg(v)`, so only
    /// `half_steps` operator applications are needed.
    pub fn even_returns(&self, half_steps: usize) -> Vec<f64> {
        let n = self.len();
        let mut p = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        p[0] = 1.0;
        let d0 = self.degree[0] as f64;
        let mut out = Vec::with_capacity(half_steps + 1);
        out.push(1.0);
        for s in 1..=half_steps {
            let depth = (s as u32 - 1).min(self.radius);
            self.step(&p, &mut next, &mut scratch, depth);
            std::mem::swap(&mut p, &mut next);
            let m = self.prefix(s as u32);
            let mut acc = crate::numeric::CompensatedSum::new();
            if self.degree[0] == 0 {
                acc.add(p[0]);
            } else {
                for v in 0..m {
                    if p[v] != 0.0 {
                        acc.add(p[v] * p[v] * d0 * self.inv_degree[v]);
                    }
                }
            }
            out.push(acc.value().min(1.0));
        }
        out
    }

    /// `P(tau_A < t)` where `tau_A` is the first time `n >= 0` the killed walk
    /// is in `A = {v : target[v]}`; `target` is indexed by tree id.
    pub fn hit_before(&self, target: &[bool], t: usize) -> f64 {
        if t == 0 {
            return 0.0;
        }
        if target.first().copied().unwrap_or(false) {
            return 1.0;
        }
        let n = self.len();
        let mut p = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        p[0] = 1.0;
        let mut hit = crate::numeric::CompensatedSum::new();
        for s in 1..t {
            let depth = (s as u32 - 1).min(self.radius);
            self.step(&p, &mut next, &mut scratch, depth);
            std::mem::swap(&mut p, &mut next);
            for v in 0..self.prefix(s as u32) {
                if target.get(v).copied().unwrap_or(false) && p[v] != 0.0 {
                    hit.add(p[v]);
                    p[v] = 0.0;
                }
            }
        }
        hit.value().min(1.0)
    }
}
