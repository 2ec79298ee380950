use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BranchingError, OffspringModel};
use crate::seed::{child_key, vertex_rng};

pub type VertexId = u32;

const NO_PARENT: VertexId = VertexId::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeTag {
    /// Vertex with an infinite line of descent.
    S,
    /// Vertex whose subtree is finite.
    E,
    Untyped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Vertex {
    parent: VertexId,
    first_child: VertexId,
    child_count: u32,
    depth: u32,
    tag: TypeTag,
    expanded: bool,
    key: u64,
}

/// Limits for breadth-first generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_vertices: usize,
    /// Vertices at this depth are left unexpanded.
    pub max_depth: u32,
}

impl Budget {
    pub fn depth(max_depth: u32) -> Self {
        Self {
            max_vertices: usize::MAX,
            max_depth,
        }
    }

    pub fn vertices(max_vertices: usize) -> Self {
        Self {
            max_vertices,
            max_depth: u32::MAX,
        }
    }
}

/// Offspring laws used to expand vertices of each type.
#[derive(Debug, Clone)]
pub struct TreeLaw {
    model: OffspringModel,
    dual: Option<OffspringModel>,
}

impl TreeLaw {
    pub fn new(model: &OffspringModel) -> Self {
        Self {
            model: model.clone(),
            dual: model.extinct_dual().ok(),
        }
    }

    pub fn model(&self) -> &OffspringModel {
        &self.model
    }

    /// Child tags of a vertex with tag `tag`, drawn from its own generator.
    fn draw_children<R: Rng>(&self, tag: TypeTag, rng: &mut R, out: &mut Vec<TypeTag>) {
        out.clear();
        match tag {
            TypeTag::Untyped => {
                let n = self.model.sample(rng);
                out.resize(n, TypeTag::Untyped);
            }
            TypeTag::E => {
                let dual = self
                    .dual
                    .as_ref()
                    .expect("E vertices only arise when extinction is possible");
                let n = dual.sample(rng);
                out.resize(n, TypeTag::E);
            }
            TypeTag::S => {
                // (n, U) ~ mu(n) (1-L)^|U| L^(n-|U|) conditioned on U nonempty
                let p_survive = 1.0 - self.model.extinction();
                loop {
                    let n = self.model.sample(rng);
                    out.clear();
                    let mut any = false;
                    for _ in 0..n {
                        let s = p_survive >= 1.0 || rng.random::<f64>() < p_survive;
                        any |= s;
                        out.push(if s { TypeTag::S } else { TypeTag::E });
                    }
                    if any {
                        break;
                    }
                }
            }
        }
    }
}

/// A finite rooted tree, possibly the truncation of an infinite one.
///
/// Vertices are stored in breadth-first order: ids `< expanded_count()` have
/// their children generated, the rest form the frontier. Children of a vertex
/// occupy a contiguous id range.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTree {
    vertices: Vec<Vertex>,
    cursor: usize,
}

impl SampledTree {
    /// A single unexpanded root.
    pub fn root(key: u64, tag: TypeTag) -> Self {
        Self {
            vertices: vec![Vertex {
                parent: NO_PARENT,
                first_child: 0,
                child_count: 0,
                depth: 0,
                tag,
                expanded: false,
                key,
            }],
            cursor: 0,
        }
    }

    /// Builds a tree from child counts listed in breadth-first order.
    /// `None` marks a frontier vertex; every frontier vertex must come after
    /// all expanded ones.
    pub fn from_child_counts(counts: &[Option<u32>]) -> Result<Self, BranchingError> {
        let mut tree = Self::root(0, TypeTag::Untyped);
        let mut i = 0;
        while i < tree.vertices.len() {
            if let Some(n) = counts.get(i).copied().flatten() {
                if i != tree.cursor {
                    return Err(BranchingError::MalformedTree(format!(
                        "expanded vertex {i} follows a frontier vertex"
                    )));
                }
                let tags = vec![TypeTag::Untyped; n as usize];
                tree.attach_children(i, &tags);
            }
            i += 1;
        }
        if counts.len() != tree.vertices.len() {
            return Err(BranchingError::MalformedTree(format!(
                "{} counts for {} vertices",
                counts.len(),
                tree.vertices.len()
            )));
        }
        Ok(tree)
    }

    /// Path with `n` vertices rooted at one end, fully expanded.
    pub fn path(n: usize) -> Self {
        let mut counts = vec![Some(1); n.max(1)];
        *counts.last_mut().unwrap() = Some(0);
        Self::from_child_counts(&counts).expect("valid path")
    }

    /// Star rooted at its center with `leaves` leaves, fully expanded.
    pub fn star(leaves: u32) -> Self {
        let mut counts = vec![Some(leaves)];
        counts.extend(std::iter::repeat_n(Some(0), leaves as usize));
        Self::from_child_counts(&counts).expect("valid star")
    }

    /// Complete `arity`-ary tree with leaves at `depth`, which are frontier vertices.
    pub fn regular(arity: u32, depth: u32) -> Self {
        let mut counts = Vec::new();
        let mut level = 1usize;
        for _ in 0..depth {
            counts.extend(std::iter::repeat_n(Some(arity), level));
            level *= arity as usize;
        }
        counts.extend(std::iter::repeat_n(None, level));
        Self::from_child_counts(&counts).expect("valid regular tree")
    }

    fn attach_children(&mut self, v: usize, tags: &[TypeTag]) {
        debug_assert_eq!(v, self.cursor);
        let first = self.vertices.len() as VertexId;
        let parent = self.vertices[v];
        for (i, &tag) in tags.iter().enumerate() {
            self.vertices.push(Vertex {
                parent: v as VertexId,
                first_child: 0,
                child_count: 0,
                depth: parent.depth + 1,
                tag,
                expanded: false,
                key: child_key(parent.key, i as u32),
            });
        }
        let vx = &mut self.vertices[v];
        vx.first_child = first;
        vx.child_count = tags.len() as u32;
        vx.expanded = true;
        self.cursor += 1;
    }

    /// Expands frontier vertices breadth-first until the budget stops it.
    ///
    /// Expansion draws are keyed by vertex, so growing a tree in several
    /// steps yields the same tree as growing it once.
    pub fn grow(&mut self, law: &TreeLaw, budget: Budget) {
        let mut tags = Vec::new();
        while self.cursor < self.vertices.len() {
            let v = self.vertices[self.cursor];
            if v.depth >= budget.max_depth {
                break;
            }
            let mut rng = vertex_rng(v.key);
            law.draw_children(v.tag, &mut rng, &mut tags);
            if self.vertices.len().saturating_add(tags.len()) > budget.max_vertices {
                break;
            }
            self.attach_children(self.cursor, &tags);
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn root_id(&self) -> VertexId {
        0
    }

    /// Number of vertices whose children are known.
    pub fn expanded_count(&self) -> usize {
        self.cursor
    }

    pub fn is_expanded(&self, v: VertexId) -> bool {
        self.vertices[v as usize].expanded
    }

    /// Unexpanded vertices, in breadth-first order.
    pub fn frontier(&self) -> Range<VertexId> {
        self.cursor as VertexId..self.vertices.len() as VertexId
    }

    pub fn is_finite_complete(&self) -> bool {
        self.cursor == self.vertices.len()
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        let p = self.vertices[v as usize].parent;
        (p != NO_PARENT).then_some(p)
    }

    /// Children of `v`; empty for frontier vertices.
    pub fn children(&self, v: VertexId) -> Range<VertexId> {
        let x = &self.vertices[v as usize];
        x.first_child..x.first_child + x.child_count
    }

    pub fn child_count(&self, v: VertexId) -> Option<u32> {
        let x = &self.vertices[v as usize];
        x.expanded.then_some(x.child_count)
    }

    /// Degree in the full (untruncated) tree, known once `v` is expanded.
    pub fn degree(&self, v: VertexId) -> Option<u32> {
        let x = &self.vertices[v as usize];
        x.expanded
            .then_some(x.child_count + u32::from(x.parent != NO_PARENT))
    }

    pub fn depth(&self, v: VertexId) -> u32 {
        self.vertices[v as usize].depth
    }

    pub fn tag(&self, v: VertexId) -> TypeTag {
        self.vertices[v as usize].tag
    }

    /// Seed key of `v`, a hash of its Ulam–Harris path.
    pub fn key(&self, v: VertexId) -> u64 {
        self.vertices[v as usize].key
    }

    /// Depth up to which every vertex is expanded (exclusive bound).
    pub fn complete_depth(&self) -> u32 {
        match self.vertices.get(self.cursor) {
            Some(v) => v.depth,
            None => u32::MAX,
        }
    }

    pub fn max_generated_depth(&self) -> u32 {
        self.vertices.last().map_or(0, |v| v.depth)
    }

    /// Number of descendants of `v` including itself. Requires the subtree to be complete.
    pub fn subtree_size(&self, v: VertexId) -> Option<usize> {
        let mut size = 0usize;
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            if !self.is_expanded(x) {
                return None;
            }
            size += 1;
            stack.extend(self.children(x));
        }
        Some(size)
    }

    /// Checks the structural invariants; used by tests.
    pub fn validate(&self) -> Result<(), String> {
        if self.vertices.is_empty() || self.vertices[0].parent != NO_PARENT {
            return Err("missing root".into());
        }
        let mut seen_frontier = false;
        for (i, x) in self.vertices.iter().enumerate() {
            if i > 0 {
                let p = self.vertices.get(x.parent as usize).ok_or("dangling parent")?;
                if !self.children(x.parent).contains(&(i as VertexId)) {
                    return Err(format!("vertex {i} not listed by its parent"));
                }
                if x.depth != p.depth + 1 {
                    return Err(format!("depth of {i}"));
                }
                if x.tag == TypeTag::S && p.tag != TypeTag::S {
                    return Err(format!("S vertex {i} under non-S parent"));
                }
            }
            if x.expanded {
                if seen_frontier {
                    return Err("expanded vertex after frontier".into());
                }
                for c in self.children(i as VertexId) {
                    if self.vertices[c as usize].parent != i as VertexId {
                        return Err(format!("child {c} of {i} has another parent"));
                    }
                }
                if x.tag == TypeTag::S
                    && !self
                        .children(i as VertexId)
                        .any(|c| self.vertices[c as usize].tag == TypeTag::S)
                {
                    return Err(format!("S vertex {i} without S child"));
                }
            } else {
                seen_frontier = true;
                if x.child_count != 0 {
                    return Err(format!("frontier vertex {i} has children"));
                }
            }
        }
        if self.vertices.iter().filter(|x| x.expanded).count() != self.cursor {
            return Err("cursor mismatch".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_tree_depth_three() {
        let t = SampledTree::regular(2, 3);
        assert_eq!(t.len(), 15);
        assert_eq!(t.frontier().len(), 8);
        assert!(t.frontier().all(|v| t.depth(v) == 3));
        t.validate().unwrap();
    }

    #[test]
    fn path_and_star_shapes() {
        let p = SampledTree::path(2);
        assert_eq!(p.len(), 2);
        assert_eq!(p.degree(0), Some(1));
        assert_eq!(p.degree(1), Some(1));
        let s = SampledTree::star(3);
        assert_eq!(s.degree(0), Some(3));
        assert!(s.is_finite_complete());
        s.validate().unwrap();
    }

    #[test]
    fn rejects_expansion_after_frontier() {
        assert!(SampledTree::from_child_counts(&[Some(2), None, Some(0)]).is_err());
        assert!(SampledTree::from_child_counts(&[Some(2), Some(0)]).is_err());
    }

    #[test]
    fn growth_is_path_independent() {
        let law = TreeLaw::new(&OffspringModel::poisson(2.0).unwrap());
        let mut once = SampledTree::root(99, TypeTag::S);
        once.grow(&law, Budget::depth(8));
        let mut twice = SampledTree::root(99, TypeTag::S);
        twice.grow(&law, Budget::depth(3));
        twice.grow(&law, Budget::depth(8));
        assert_eq!(once, twice);
        once.validate().unwrap();
    }

    #[test]
    fn vertex_budget_is_respected() {
        let law = TreeLaw::new(&OffspringModel::table(&[(3, 1.0)]).unwrap());
        let mut t = SampledTree::root(1, TypeTag::Untyped);
        t.grow(&law, Budget::vertices(20));
        assert!(t.len() <= 20);
        assert_eq!(t.len(), 19);
        assert!(!t.is_finite_complete());
    }
}
