//! Seeded random graph generators for property tests and benchmarks.

use rand::Rng;

use crate::admg::{Admg, AdmgBuilder, VertexSet};

/// Vertex names padded so lexicographic order matches index order.
pub fn vertex_names(prefix: &str, n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len().max(1);
    (0..n).map(|i| format!("{prefix}{i:0width$}")).collect()
}

/// Random ADMG on `n` vertices: a directed edge `i -> j` for `i < j` in a
/// random order with probability `p_directed`, and a bidirected edge between
/// any pair with probability `p_bidirected`.
pub fn random_admg<R: Rng + ?Sized>(n: usize, p_directed: f64, p_bidirected: f64, rng: &mut R) -> Admg {
    let names = vertex_names("V", n);
    let mut order: Vec<usize> = (0..n).collect();
    // Fisher-Yates so the causal order is unrelated to name order
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut b = AdmgBuilder::new();
    for name in &names {
        b.add_node(name);
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p_directed) {
                b.add_directed(&names[order[i]], &names[order[j]]);
            }
            if rng.random_bool(p_bidirected) {
                b.add_bidirected(&names[order[i]], &names[order[j]]);
            }
        }
    }
    b.build().expect("forward edges are acyclic")
}

/// A random ADMG with designated target and context vertices.
#[derive(Debug, Clone)]
pub struct ContextGraph {
    pub graph: Admg,
    pub target: String,
    pub contexts: VertexSet,
}

/// Random graph obeying the context constraints: contexts are pairwise
/// confounded, have no system parents and no system siblings, and none is a
/// parent of the target. Contexts are named `C0..`, system variables `S0..`,
/// and one system variable is renamed `T`.
pub fn random_context_admg<R: Rng + ?Sized>(
    n_system: usize,
    n_contexts: usize,
    p_directed: f64,
    p_bidirected: f64,
    rng: &mut R,
) -> ContextGraph {
    assert!(n_system >= 1, "need at least the target");
    let system = random_admg(n_system, p_directed, p_bidirected, rng);
    let t_idx = rng.random_range(0..n_system);
    let rename = |v: &str| -> String {
        let i: usize = v[1..].parse().expect("generated name");
        if i == t_idx {
            "T".to_string()
        } else {
            format!("S{}", &v[1..])
        }
    };
    let contexts = vertex_names("C", n_contexts);
    let mut b = AdmgBuilder::new();
    for v in system.vertices() {
        b.add_node(rename(v));
    }
    for (a, c) in system.directed_edges() {
        b.add_directed(rename(&a), rename(&c));
    }
    for (a, c) in system.bidirected_edges() {
        b.add_bidirected(rename(&a), rename(&c));
    }
    for (i, c) in contexts.iter().enumerate() {
        b.add_node(c);
        for d in &contexts[i + 1..] {
            b.add_bidirected(c, d);
        }
        for v in system.vertices() {
            let v = rename(v);
            if v != "T" && rng.random_bool(p_directed) {
                b.add_directed(c, &v);
            }
        }
    }
    ContextGraph {
        graph: b.build().expect("contexts are sources"),
        target: "T".to_string(),
        contexts: contexts.into_iter().collect(),
    }
}
