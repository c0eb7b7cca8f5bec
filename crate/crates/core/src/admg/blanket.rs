//! Markov blankets in mixed graphs.

use super::{Admg, GraphError, Result, VertexSet};

impl Admg {
    /// Graphical Markov blanket of `t`: parents, children, spouses, vertices
    /// bidirected-connected to `t` or to a child of `t`, and the parents of
    /// those. Equivalently, every vertex collider connected to `t`.
    pub fn markov_blanket(&self, t: &str) -> Result<VertexSet> {
        let ti = self.idx(t)?;
        let all = vec![true; self.len()];
        Ok(self.names_of_mask(&self.collider_connected_mask(ti, &all)))
    }

    /// `imb_A(x) = pa(dis(x)) ∪ (dis(x) \ {x})`, taken in the subgraph induced on `a`.
    ///
    /// `a` must be ancestral and `x` must have no children inside `a`.
    pub fn induced_markov_blanket(&self, a: &VertexSet, x: &str) -> Result<VertexSet> {
        let xi = self.idx(x)?;
        let within = self.mask_of(a)?;
        if !within[xi] {
            return Err(GraphError::Precondition(format!("`{x}` is not in the set")));
        }
        if self.ancestors_mask(&within) != within {
            return Err(GraphError::Precondition("set is not ancestral".into()));
        }
        if self.children_idx(xi).iter().any(|&c| within[c]) {
            return Err(GraphError::Precondition(format!("`{x}` has children inside the set")));
        }
        let dist = self.district_mask(xi, &within);
        let mut out = dist.clone();
        for v in 0..self.len() {
            if dist[v] {
                for &p in self.parents_idx(v) {
                    out[p] |= within[p];
                }
            }
        }
        out[xi] = false;
        Ok(self.names_of_mask(&out))
    }

    /// A witness m-separating set for `t` and `c`, if any set does.
    ///
    /// Some subset of `V \ {t, c}` separates the pair iff
    /// `an({t, c}) \ {t, c}` does, so that set is the witness returned.
    pub fn separating_subset(&self, t: &str, c: &str) -> Result<Option<VertexSet>> {
        if t == c {
            return Err(GraphError::InvalidArgument("endpoints must differ".to_string()));
        }
        self.idx(t)?;
        self.idx(c)?;
        if self.adjacent(t, c) {
            return Ok(None);
        }
        let ends: VertexSet = [t, c].into_iter().collect();
        let candidate = self.ancestors(&ends)?.difference(&ends);
        if self.m_separated_pair(t, c, &candidate)? {
            Ok(Some(candidate))
        } else {
            Ok(None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{remark_graph, smallg_graph};
    use crate::vset;

    #[test]
    fn remark_graph_blanket() {
        let g = remark_graph();
        assert_eq!(g.markov_blanket("T").unwrap(), vset!["C1", "X", "Y"]);
    }

    #[test]
    fn smallg_blanket() {
        let g = smallg_graph();
        assert_eq!(g.markov_blanket("T").unwrap(), vset!["C1", "P", "X", "Y"]);
    }

    #[test]
    fn isolated_vertex_has_empty_blanket() {
        let g = Admg::builder().node("T").directed("A", "B").build().unwrap();
        assert!(g.markov_blanket("T").unwrap().is_empty());
    }

    #[test]
    fn blanket_follows_bidirected_chain_from_child() {
        // T -> A <-> B <-> C, D -> C
        let g = Admg::builder()
            .directed("T", "A")
            .bidirected("A", "B")
            .bidirected("B", "C")
            .directed("D", "C")
            .directed("E", "D")
            .build()
            .unwrap();
        assert_eq!(g.markov_blanket("T").unwrap(), vset!["A", "B", "C", "D"]);
    }

    #[test]
    fn induced_blanket_examples() {
        let g = remark_graph();
        let a = g.ancestors(&vset!["T"]).unwrap();
        assert_eq!(g.induced_markov_blanket(&a, "T").unwrap(), vset!["X"]);

        let single = Admg::builder().node("x").build().unwrap();
        assert!(single.induced_markov_blanket(&vset!["x"], "x").unwrap().is_empty());

        let chain = Admg::builder().directed("A", "B").build().unwrap();
        assert_eq!(chain.induced_markov_blanket(&vset!["A", "B"], "B").unwrap(), vset!["A"]);
    }

    #[test]
    fn induced_blanket_preconditions() {
        let chain = Admg::builder().directed("A", "B").build().unwrap();
        assert!(matches!(
            chain.induced_markov_blanket(&vset!["B"], "B"),
            Err(GraphError::Precondition(_))
        ));
        assert!(matches!(
            chain.induced_markov_blanket(&vset!["A", "B"], "A"),
            Err(GraphError::Precondition(_))
        ));
    }

    #[test]
    fn separating_subset_examples() {
        let g = remark_graph();
        let w = g.separating_subset("T", "C1").unwrap().unwrap();
        assert!(g.m_separated_pair("T", "C1", &w).unwrap());

        let adj = Admg::builder().directed("C", "T").build().unwrap();
        assert_eq!(adj.separating_subset("T", "C").unwrap(), None);

        let s = smallg_graph();
        assert!(s.separating_subset("T", "C1").unwrap().is_some());
        assert!(s.m_separated_pair("T", "C1", &vset!["X"]).unwrap());
    }
}
