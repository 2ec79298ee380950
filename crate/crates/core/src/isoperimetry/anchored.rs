use super::{HostGraph, IsoError};

/// Default limit on the number of connected root sets visited.
pub const ANCHORED_SEARCH_BUDGET: u64 = 10_000_000;

/// `min |dK| / |K|` over connected `K` containing the root with `|K| = size`.
///
/// Enumerates connected sets by the extension-set method (each set once).
/// On forest hosts `|dK| = sum of degrees - 2(|K| - 1)`, which gives a lower
/// bound for pruning partial sets.
pub fn min_anchored_ratio(host: &HostGraph, size: usize, budget: u64) -> Result<f64, IsoError> {
    let root = host.root().ok_or(IsoError::MissingRoot)?;
    if size == 0 || size > host.len() {
        return Err(IsoError::InvalidSize(size));
    }
    let forest = host.is_forest();
    let min_deg = (0..host.len() as u32).map(|v| host.degree(v)).min().unwrap_or(0) as i64;
    let mut search = Search {
        host,
        size,
        forest,
        min_deg,
        best: f64::INFINITY,
        visited: 0,
        budget,
        in_set: vec![false; host.len()],
        blocked: vec![false; host.len()],
    };
    search.in_set[root as usize] = true;
    search.blocked[root as usize] = true;
    let ext: Vec<u32> = host.neighbors(root).to_vec();
    for &w in &ext {
        search.blocked[w as usize] = true;
    }
    search.extend(1, i64::from(host.degree(root)), 0, ext)?;
    if search.best.is_infinite() {
        return Err(IsoError::InvalidSize(size));
    }
    Ok(search.best)
}

struct Search<'a> {
    host: &'a HostGraph,
    size: usize,
    forest: bool,
    min_deg: i64,
    best: f64,
    visited: u64,
    budget: u64,
    in_set: Vec<bool>,
    /// Vertices in the set, in the extension list, or excluded.
    blocked: Vec<bool>,
}

impl Search<'_> {
    fn boundary(&self, deg_sum: i64, inner_edges: i64) -> i64 {
        deg_sum - 2 * inner_edges
    }

    fn extend(&mut self, len: usize, deg_sum: i64, inner: i64, mut ext: Vec<u32>) -> Result<(), IsoError> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(IsoError::SearchBudgetExceeded { budget: self.budget });
        }
        if len == self.size {
            let r = self.boundary(deg_sum, inner) as f64 / len as f64;
            self.best = self.best.min(r);
            return Ok(());
        }
        if self.forest {
            let remaining = (self.size - len) as i64;
            let lower = deg_sum + remaining * self.min_deg - 2 * (self.size as i64 - 1);
            if lower as f64 / self.size as f64 >= self.best {
                return Ok(());
            }
        }
        while let Some(w) = ext.pop() {
            let mut next_ext = ext.clone();
            let mut added = Vec::new();
            for &x in self.host.neighbors(w) {
                if !self.blocked[x as usize] {
                    self.blocked[x as usize] = true;
                    added.push(x);
                    next_ext.push(x);
                }
            }
            let new_inner = inner + self.host.neighbors(w).iter().filter(|&&x| self.in_set[x as usize]).count() as i64;
            self.in_set[w as usize] = true;
            let r = self.extend(len + 1, deg_sum + i64::from(self.host.degree(w)), new_inner, next_ext);
            self.in_set[w as usize] = false;
            for x in added {
                self.blocked[x as usize] = false;
            }
            r?;
            // w stays blocked so later siblings never contain it; whoever
            // added it to the extension list unblocks it
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::SampledTree;

    #[test]
    fn binary_tree_ratio() {
        let h = HostGraph::from_tree(&SampledTree::regular(2, 5));
        let r = min_anchored_ratio(&h, 5, ANCHORED_SEARCH_BUDGET).unwrap();
        assert!((r - 1.2).abs() < 1e-15);
    }

    #[test]
    fn path_from_end() {
        let h = HostGraph::new(4, &[(0, 1), (1, 2), (2, 3)], &[(3, 1)], Some(0)).unwrap();
        assert!((min_anchored_ratio(&h, 3, 100).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_root() {
        let h = HostGraph::from_tree(&SampledTree::regular(3, 2));
        assert_eq!(min_anchored_ratio(&h, 1, 10).unwrap(), 3.0);
    }

    #[test]
    fn budget_and_root_errors() {
        let h = HostGraph::from_tree(&SampledTree::regular(3, 4));
        assert!(matches!(
            min_anchored_ratio(&h, 8, 5),
            Err(IsoError::SearchBudgetExceeded { .. })
        ));
        let g = HostGraph::new(2, &[(0, 1)], &[], None).unwrap();
        assert_eq!(min_anchored_ratio(&g, 1, 10), Err(IsoError::MissingRoot));
    }

    #[test]
    fn counts_each_connected_set_once() {
        // every 3-set of the 4-cycle is a path with two boundary edges
        let h = HostGraph::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], &[], Some(0)).unwrap();
        assert!((min_anchored_ratio(&h, 3, 100).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }
}
