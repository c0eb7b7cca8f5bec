//! Ancestral sets, districts, augmented graphs and m-separation.
//!
//! Two independent routes decide m-separation:
//!
//! - [`Admg::m_separated`] separates in the augmented graph of the induced
//!   subgraph on `an(X ∪ Y ∪ Z)`.
//! - [`Admg::m_connected_oracle`] enumerates simple paths and checks the
//!   collider / noncollider conditions directly.
//!
//! The second route is exponential and meant as a test oracle on small graphs.

use std::collections::{BTreeSet, VecDeque};

use super::{Admg, GraphError, Result, VertexSet};

/// Undirected graph over the same vertex names as the ADMG it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    vertices: Vec<String>,
    edges: BTreeSet<(String, String)>,
}

impl UndirectedGraph {
    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    /// Edges as `(a, b)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.edges.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        let key = if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        self.edges.contains(&key)
    }
}

impl Admg {
    /// `an(xs)`: every vertex with a directed path into `xs`, including `xs`.
    pub fn ancestors(&self, xs: &VertexSet) -> Result<VertexSet> {
        let seed = self.mask_of(xs)?;
        Ok(self.names_of_mask(&self.ancestors_mask(&seed)))
    }

    pub fn is_ancestral(&self, set: &VertexSet) -> Result<bool> {
        Ok(self.ancestors(set)? == *set)
    }

    /// Vertices reachable from `x` through bidirected edges only, plus `x`.
    pub fn district(&self, x: &str) -> Result<VertexSet> {
        let xi = self.idx(x)?;
        let all = vec![true; self.len()];
        Ok(self.names_of_mask(&self.district_mask(xi, &all)))
    }

    /// Whether `a` and `b` are joined by a path whose interior vertices are all colliders.
    pub fn collider_connected(&self, a: &str, b: &str) -> Result<bool> {
        let (ai, bi) = (self.idx(a)?, self.idx(b)?);
        let all = vec![true; self.len()];
        Ok(ai != bi && self.collider_connected_mask(ai, &all)[bi])
    }

    /// Augmented graph: `c - d` iff `c` and `d` are collider connected.
    pub fn augmented_graph(&self) -> UndirectedGraph {
        let all = vec![true; self.len()];
        let mut edges = BTreeSet::new();
        for c in 0..self.len() {
            let reach = self.collider_connected_mask(c, &all);
            for d in (c + 1)..self.len() {
                if reach[d] {
                    edges.insert((self.names[c].clone(), self.names[d].clone()));
                }
            }
        }
        UndirectedGraph {
            vertices: self.names.clone(),
            edges,
        }
    }

    /// m-separation of `xs` and `ys` given `zs`, decided in the augmented
    /// graph of the induced subgraph on `an(xs ∪ ys ∪ zs)`.
    pub fn m_separated(&self, xs: &VertexSet, ys: &VertexSet, zs: &VertexSet) -> Result<bool> {
        check_disjoint_nonempty(xs, ys, zs)?;
        let (xm, ym, zm) = (self.mask_of(xs)?, self.mask_of(ys)?, self.mask_of(zs)?);
        Ok(self.m_separated_masks(&xm, &ym, &zm))
    }

    /// Single-vertex convenience wrapper around [`Admg::m_separated`].
    pub fn m_separated_pair(&self, x: &str, y: &str, zs: &VertexSet) -> Result<bool> {
        let xs: VertexSet = [x].into_iter().collect();
        let ys: VertexSet = [y].into_iter().collect();
        self.m_separated(&xs, &ys, zs)
    }

    /// Path-enumeration route: true iff some simple path between `x` and `y`
    /// has every noncollider outside `zs` and every collider in `an(zs)`.
    pub fn m_connected_oracle(&self, x: &str, y: &str, zs: &VertexSet) -> Result<bool> {
        if x == y {
            return Err(GraphError::InvalidArgument(format!(
                "endpoints must differ, got `{x}` twice"
            )));
        }
        if zs.contains(x) || zs.contains(y) {
            return Err(GraphError::InvalidArgument(
                "endpoints must not be in the conditioning set".into(),
            ));
        }
        let (xi, yi) = (self.idx(x)?, self.idx(y)?);
        let zm = self.mask_of(zs)?;
        let an_z = self.ancestors_mask(&zm);
        let mut visited = vec![false; self.len()];
        visited[xi] = true;
        Ok(self.search_connecting_path(xi, yi, None, &zm, &an_z, &mut visited))
    }

    pub(crate) fn ancestors_mask(&self, seed: &[bool]) -> Vec<bool> {
        let mut out = seed.to_vec();
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|&i| seed[i]).collect();
        while let Some(v) = queue.pop_front() {
            for &p in self.parents_idx(v) {
                if !out[p] {
                    out[p] = true;
                    queue.push_back(p);
                }
            }
        }
        out
    }

    /// District of `x` in the subgraph induced on `within`.
    pub(crate) fn district_mask(&self, x: usize, within: &[bool]) -> Vec<bool> {
        let mut out = vec![false; self.len()];
        out[x] = true;
        let mut queue = VecDeque::from([x]);
        while let Some(v) = queue.pop_front() {
            for &s in self.siblings_idx(v) {
                if within[s] && !out[s] {
                    out[s] = true;
                    queue.push_back(s);
                }
            }
        }
        out
    }

    /// Vertices collider connected to `c` in the subgraph induced on `within`.
    ///
    /// A collider path leaves `c` into a child or sibling, continues through
    /// bidirected edges only, and ends either there or at a parent of the last
    /// vertex. Adjacent vertices are included. `c` itself is excluded.
    pub(crate) fn collider_connected_mask(&self, c: usize, within: &[bool]) -> Vec<bool> {
        let n = self.len();
        let mut out = vec![false; n];
        for &p in self.parents_idx(c) {
            out[p] |= within[p];
        }
        let mut inner = vec![false; n];
        let mut queue = VecDeque::new();
        for &h in self.children_idx(c).iter().chain(self.siblings_idx(c)) {
            if within[h] && !inner[h] {
                inner[h] = true;
                queue.push_back(h);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &s in self.siblings_idx(v) {
                if s != c && within[s] && !inner[s] {
                    inner[s] = true;
                    queue.push_back(s);
                }
            }
        }
        for v in 0..n {
            if inner[v] {
                out[v] = true;
                for &p in self.parents_idx(v) {
                    out[p] |= within[p];
                }
            }
        }
        out[c] = false;
        out
    }

    pub(crate) fn m_separated_masks(&self, xs: &[bool], ys: &[bool], zs: &[bool]) -> bool {
        let n = self.len();
        let seed: Vec<bool> = (0..n).map(|i| xs[i] || ys[i] || zs[i]).collect();
        let anc = self.ancestors_mask(&seed);
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for i in 0..n {
            if xs[i] {
                seen[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(v) = queue.pop_front() {
            let nbrs = self.collider_connected_mask(v, &anc);
            for w in 0..n {
                if !nbrs[w] || seen[w] || zs[w] {
                    continue;
                }
                if ys[w] {
                    return false;
                }
                seen[w] = true;
                queue.push_back(w);
            }
        }
        true
    }

    /// Depth-first search over simple paths. `arrow_in` records whether the
    /// edge used to reach `v` has an arrowhead at `v`; `None` at the start vertex.
    fn search_connecting_path(
        &self,
        v: usize,
        target: usize,
        arrow_in: Option<bool>,
        zs: &[bool],
        an_z: &[bool],
        visited: &mut [bool],
    ) -> bool {
        // (next vertex, arrowhead at v, arrowhead at next)
        let steps = self
            .parents_idx(v)
            .iter()
            .map(|&p| (p, true, false))
            .chain(self.children_idx(v).iter().map(|&c| (c, false, true)))
            .chain(self.siblings_idx(v).iter().map(|&s| (s, true, true)));
        for (w, head_at_v, head_at_w) in steps {
            if visited[w] {
                continue;
            }
            if let Some(arrow_in) = arrow_in {
                let collider = arrow_in && head_at_v;
                let open = if collider { an_z[v] } else { !zs[v] };
                if !open {
                    continue;
                }
            }
            if w == target {
                return true;
            }
            visited[w] = true;
            let found = self.search_connecting_path(w, target, Some(head_at_w), zs, an_z, visited);
            visited[w] = false;
            if found {
                return true;
            }
        }
        false
    }
}

fn check_disjoint_nonempty(xs: &VertexSet, ys: &VertexSet, zs: &VertexSet) -> Result<()> {
    if xs.is_empty() || ys.is_empty() {
        return Err(GraphError::InvalidArgument(
            "both endpoint sets must be nonempty".into(),
        ));
    }
    if !xs.is_disjoint(ys) || !xs.is_disjoint(zs) || !ys.is_disjoint(zs) {
        return Err(GraphError::InvalidArgument(
            "endpoint and conditioning sets must be pairwise disjoint".into(),
        ));
    }
    Ok(())
}
