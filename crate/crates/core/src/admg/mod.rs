//! Acyclic directed mixed graphs.
//!
//! An [`Admg`] holds directed edges (`A -> B`, direct causal effects) and
//! bidirected edges (`A <-> B`, latent confounding). The directed part must be
//! acyclic. Vertices are identified by strings and stored in lexicographic
//! order, so every iteration over a graph is deterministic.
//!
//! Graph queries are split across submodules:
//!
//! - [`separation`]: ancestors, districts, augmented graphs and the two
//!   m-separation routes (augmented-graph and path enumeration).
//! - [`blanket`]: graphical and induced Markov blankets, separating-set witness.
//! - [`io`]: the line-oriented text format.

pub mod blanket;
pub mod io;
pub mod separation;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use separation::UndirectedGraph;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("self-loop on vertex `{0}`")]
    SelfLoop(String),
    #[error("directed cycle through {0:?}")]
    Cycle(Vec<String>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, GraphError>;

/// A set of vertex identifiers, iterated in lexicographic order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSet(BTreeSet<String>);

impl VertexSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: &str) -> bool {
        self.0.contains(v)
    }

    pub fn insert(&mut self, v: impl Into<String>) -> bool {
        self.0.insert(v.into())
    }

    pub fn remove(&mut self, v: &str) -> bool {
        self.0.remove(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> + '_ {
        self.0.iter().map(String::as_str)
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.difference(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn to_vec(&self) -> Vec<String> {
        self.0.iter().cloned().collect()
    }

    pub fn as_btree(&self) -> &BTreeSet<String> {
        &self.0
    }
}

impl<S: Into<String>> FromIterator<S> for VertexSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        VertexSet(iter.into_iter().map(Into::into).collect())
    }
}

impl<'a> IntoIterator for &'a VertexSet {
    type Item = &'a String;
    type IntoIter = std::collections::btree_set::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// Shorthand for building a [`VertexSet`] from string literals.
#[macro_export]
macro_rules! vset {
    () => { $crate::admg::VertexSet::new() };
    ($($v:expr),+ $(,)?) => {
        [$($v),+].into_iter().collect::<$crate::admg::VertexSet>()
    };
}

/// Acyclic directed mixed graph. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Admg {
    names: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    siblings: Vec<Vec<usize>>,
}

/// Incremental builder; validation happens in [`AdmgBuilder::build`].
#[derive(Debug, Clone, Default)]
pub struct AdmgBuilder {
    nodes: BTreeSet<String>,
    directed: BTreeSet<(String, String)>,
    bidirected: BTreeSet<(String, String)>,
}

impl AdmgBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(mut self, v: impl Into<String>) -> Self {
        self.add_node(v);
        self
    }

    pub fn directed(mut self, tail: impl Into<String>, head: impl Into<String>) -> Self {
        self.add_directed(tail, head);
        self
    }

    pub fn bidirected(mut self, a: impl Into<String>, b: impl Into<String>) -> Self {
        self.add_bidirected(a, b);
        self
    }

    pub fn add_node(&mut self, v: impl Into<String>) {
        self.nodes.insert(v.into());
    }

    pub fn add_directed(&mut self, tail: impl Into<String>, head: impl Into<String>) {
        let (t, h) = (tail.into(), head.into());
        self.nodes.insert(t.clone());
        self.nodes.insert(h.clone());
        self.directed.insert((t, h));
    }

    pub fn add_bidirected(&mut self, a: impl Into<String>, b: impl Into<String>) {
        let (a, b) = (a.into(), b.into());
        self.nodes.insert(a.clone());
        self.nodes.insert(b.clone());
        if a <= b {
            self.bidirected.insert((a, b));
        } else {
            self.bidirected.insert((b, a));
        }
    }

    pub fn build(self) -> Result<Admg> {
        Admg::new(self.nodes, self.directed, self.bidirected)
    }
}

impl Admg {
    /// Builds a graph, rejecting self-loops, dangling endpoints and directed cycles.
    pub fn new<V, D, B>(vertices: V, directed: D, bidirected: B) -> Result<Self>
    where
        V: IntoIterator,
        V::Item: Into<String>,
        D: IntoIterator<Item = (String, String)>,
        B: IntoIterator<Item = (String, String)>,
    {
        let names: Vec<String> = vertices
            .into_iter()
            .map(Into::into)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: HashMap<String, usize> = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let n = names.len();
        let lookup = |v: &str| {
            index
                .get(v)
                .copied()
                .ok_or_else(|| GraphError::UnknownVertex(v.to_string()))
        };

        let mut parents = vec![BTreeSet::new(); n];
        let mut children = vec![BTreeSet::new(); n];
        let mut siblings = vec![BTreeSet::new(); n];
        for (t, h) in directed {
            if t == h {
                return Err(GraphError::SelfLoop(t));
            }
            let (ti, hi) = (lookup(&t)?, lookup(&h)?);
            children[ti].insert(hi);
            parents[hi].insert(ti);
        }
        for (a, b) in bidirected {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let (ai, bi) = (lookup(&a)?, lookup(&b)?);
            siblings[ai].insert(bi);
            siblings[bi].insert(ai);
        }
        let collect =
            |v: Vec<BTreeSet<usize>>| -> Vec<Vec<usize>> { v.into_iter().map(|s| s.into_iter().collect()).collect() };
        let g = Admg {
            names,
            index,
            parents: collect(parents),
            children: collect(children),
            siblings: collect(siblings),
        };
        if let Some(cycle) = g.find_cycle() {
            return Err(GraphError::Cycle(
                cycle.into_iter().map(|i| g.names[i].clone()).collect(),
            ));
        }
        Ok(g)
    }

    pub fn builder() -> AdmgBuilder {
        AdmgBuilder::new()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Vertex names in lexicographic order.
    pub fn vertices(&self) -> &[String] {
        &self.names
    }

    pub fn vertex_set(&self) -> VertexSet {
        self.names.iter().cloned().collect()
    }

    pub fn contains(&self, v: &str) -> bool {
        self.index.contains_key(v)
    }

    pub fn directed_edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (t, ch) in self.children.iter().enumerate() {
            for &h in ch {
                out.push((self.names[t].clone(), self.names[h].clone()));
            }
        }
        out
    }

    /// Bidirected edges as `(a, b)` with `a < b`.
    pub fn bidirected_edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (a, sib) in self.siblings.iter().enumerate() {
            for &b in sib.iter().filter(|&&b| b > a) {
                out.push((self.names[a].clone(), self.names[b].clone()));
            }
        }
        out
    }

    pub fn has_directed(&self, tail: &str, head: &str) -> bool {
        match (self.index.get(tail), self.index.get(head)) {
            (Some(&t), Some(&h)) => self.children[t].binary_search(&h).is_ok(),
            _ => false,
        }
    }

    pub fn has_bidirected(&self, a: &str, b: &str) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&a), Some(&b)) => self.siblings[a].binary_search(&b).is_ok(),
            _ => false,
        }
    }

    pub fn adjacent(&self, a: &str, b: &str) -> bool {
        self.has_directed(a, b) || self.has_directed(b, a) || self.has_bidirected(a, b)
    }

    pub fn parents(&self, v: &str) -> Result<VertexSet> {
        let i = self.idx(v)?;
        Ok(self.names_of(&self.parents[i]))
    }

    pub fn children(&self, v: &str) -> Result<VertexSet> {
        let i = self.idx(v)?;
        Ok(self.names_of(&self.children[i]))
    }

    /// Vertices joined to `v` by a bidirected edge.
    pub fn siblings(&self, v: &str) -> Result<VertexSet> {
        let i = self.idx(v)?;
        Ok(self.names_of(&self.siblings[i]))
    }

    /// Topological order of the directed part, lexicographic among ties.
    pub fn topological_order(&self) -> Vec<String> {
        self.topo_indices().into_iter().map(|i| self.names[i].clone()).collect()
    }

    /// Subgraph induced on `keep`; edges with an endpoint outside are dropped.
    pub fn induced_subgraph(&self, keep: &VertexSet) -> Result<Admg> {
        self.check_members(keep)?;
        let directed = self
            .directed_edges()
            .into_iter()
            .filter(|(t, h)| keep.contains(t) && keep.contains(h));
        let bidirected = self
            .bidirected_edges()
            .into_iter()
            .filter(|(a, b)| keep.contains(a) && keep.contains(b));
        Admg::new(keep.iter(), directed, bidirected)
    }

    pub(crate) fn idx(&self, v: &str) -> Result<usize> {
        self.index
            .get(v)
            .copied()
            .ok_or_else(|| GraphError::UnknownVertex(v.to_string()))
    }

    pub(crate) fn mask_of(&self, set: &VertexSet) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.len()];
        for v in set.iter() {
            mask[self.idx(v)?] = true;
        }
        Ok(mask)
    }

    pub(crate) fn names_of(&self, idx: &[usize]) -> VertexSet {
        idx.iter().map(|&i| self.names[i].clone()).collect()
    }

    pub(crate) fn names_of_mask(&self, mask: &[bool]) -> VertexSet {
        mask.iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| self.names[i].clone())
            .collect()
    }

    pub(crate) fn check_members(&self, set: &VertexSet) -> Result<()> {
        for v in set.iter() {
            self.idx(v)?;
        }
        Ok(())
    }

    pub(crate) fn parents_idx(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub(crate) fn children_idx(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub(crate) fn siblings_idx(&self, i: usize) -> &[usize] {
        &self.siblings[i]
    }

    pub(crate) fn topo_indices(&self) -> Vec<usize> {
        let n = self.len();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        order
    }

    fn find_cycle(&self) -> Option<Vec<usize>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let n = self.len();
        let mut state = vec![0u8; n];
        let mut stack: Vec<usize> = Vec::new();
        for root in 0..n {
            if state[root] != 0 {
                continue;
            }
            let mut frames: Vec<(usize, usize)> = vec![(root, 0)];
            state[root] = 1;
            stack.push(root);
            while let Some(&mut (v, ref mut next)) = frames.last_mut() {
                if *next < self.children[v].len() {
                    let c = self.children[v][*next];
                    *next += 1;
                    match state[c] {
                        0 => {
                            state[c] = 1;
                            stack.push(c);
                            frames.push((c, 0));
                        }
                        1 => {
                            let pos = stack.iter().position(|&s| s == c).unwrap_or(0);
                            let mut cycle = stack[pos..].to_vec();
                            cycle.push(c);
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    state[v] = 2;
                    stack.pop();
                    frames.pop();
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_two_cycle() {
        // X -> T together with T -> X
        let err = Admg::builder()
            .directed("C", "Y")
            .directed("C", "X")
            .directed("Y", "T")
            .directed("X", "T")
            .directed("X", "Y")
            .directed("T", "X")
            .build()
            .unwrap_err();
        match err {
            GraphError::Cycle(c) => {
                assert!(c.contains(&"X".to_string()) && c.contains(&"T".to_string()))
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_self_loops_and_dangling_edges() {
        assert_eq!(
            Admg::builder().directed("A", "A").build().unwrap_err(),
            GraphError::SelfLoop("A".into())
        );
        assert_eq!(
            Admg::builder().bidirected("B", "B").build().unwrap_err(),
            GraphError::SelfLoop("B".into())
        );
        let err = Admg::new(
            ["A"],
            vec![("A".to_string(), "B".to_string())],
            Vec::<(String, String)>::new(),
        )
        .unwrap_err();
        assert_eq!(err, GraphError::UnknownVertex("B".into()));
    }

    #[test]
    fn parallel_directed_and_bidirected_edges_allowed() {
        let g = Admg::builder().directed("A", "B").bidirected("A", "B").build().unwrap();
        assert!(g.has_directed("A", "B"));
        assert!(g.has_bidirected("B", "A"));
    }

    #[test]
    fn topological_order_breaks_ties_lexicographically() {
        let g = Admg::builder().directed("b", "a").node("c").node("d").build().unwrap();
        assert_eq!(g.topological_order(), vec!["b", "a", "c", "d"]);
    }
}
