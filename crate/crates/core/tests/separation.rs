use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sctl_core::admg::{Admg, VertexSet};
use sctl_core::gen::random_admg;

fn graph(seed: u64, n: usize, pd: f64, pb: f64) -> Admg {
    random_admg(n, pd, pb, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn arb_graph(max: usize) -> impl Strategy<Value = Admg> {
    (any::<u64>(), 1..=max, 0.1f64..0.6, 0.0f64..0.4).prop_map(|(s, n, pd, pb)| graph(s, n, pd, pb))
}

/// Conditioning sets drawn from a bit mask over the vertices.
fn subset(g: &Admg, mask: u32, exclude: &[&str]) -> VertexSet {
    g.vertices()
        .iter()
        .enumerate()
        .filter(|(i, v)| mask & (1 << i) != 0 && !exclude.contains(&v.as_str()))
        .map(|(_, v)| v.clone())
        .collect()
}

proptest! {
    #[test]
    fn augmented_route_matches_path_search(g in arb_graph(7), i in 0usize..7, j in 0usize..7, mask in any::<u32>()) {
        let n = g.len();
        let (x, y) = (&g.vertices()[i % n], &g.vertices()[j % n]);
        prop_assume!(x != y);
        let z = subset(&g, mask, &[x, y]);
        let sep = g.m_separated_pair(x, y, &z).unwrap();
        prop_assert_eq!(sep, !g.m_connected_oracle(x, y, &z).unwrap());
    }

    #[test]
    fn separation_is_symmetric(g in arb_graph(8), i in 0usize..8, j in 0usize..8, mask in any::<u32>()) {
        let n = g.len();
        let (x, y) = (&g.vertices()[i % n], &g.vertices()[j % n]);
        prop_assume!(x != y);
        let z = subset(&g, mask, &[x, y]);
        prop_assert_eq!(g.m_separated_pair(x, y, &z).unwrap(), g.m_separated_pair(y, x, &z).unwrap());
    }

    #[test]
    fn blanket_shields_the_vertex(g in arb_graph(9), i in 0usize..9) {
        let t = g.vertices()[i % g.len()].clone();
        let mb = g.markov_blanket(&t).unwrap();
        let mut rest = g.vertex_set().difference(&mb);
        rest.remove(&t);
        for v in rest.iter() {
            prop_assert!(g.m_separated_pair(&t, v, &mb).unwrap(), "{} not shielded from {}", t, v);
        }
    }

    #[test]
    fn blanket_is_minimal(g in arb_graph(9), i in 0usize..9) {
        let t = g.vertices()[i % g.len()].clone();
        let mb = g.markov_blanket(&t).unwrap();
        for m in mb.iter() {
            let mut rest = mb.clone();
            rest.remove(m);
            prop_assert!(!g.m_separated_pair(&t, m, &rest).unwrap(), "{} removable from Mb({})", m, t);
        }
    }

    #[test]
    fn induced_blanket_within_blanket(g in arb_graph(9), i in 0usize..9) {
        let x = g.vertices()[i % g.len()].clone();
        let a = g.ancestors(&VertexSet::from_iter([x.clone()])).unwrap();
        let imb = g.induced_markov_blanket(&a, &x).unwrap();
        prop_assert!(imb.is_subset(&g.markov_blanket(&x).unwrap()));
        // ordered local Markov property
        let mut rest = a.difference(&imb);
        rest.remove(&x);
        for v in rest.iter() {
            prop_assert!(g.m_separated_pair(&x, v, &imb).unwrap());
        }
    }

    #[test]
    fn ancestral_witness_separates_non_adjacent(g in arb_graph(9), i in 0usize..9, j in 0usize..9) {
        let n = g.len();
        let (t, c) = (&g.vertices()[i % n], &g.vertices()[j % n]);
        prop_assume!(t != c);
        let others: Vec<String> = g.vertices().iter().filter(|v| *v != t && *v != c).cloned().collect();
        let any_separates = (0u32..1 << others.len()).any(|m| {
            let z: VertexSet = others.iter().enumerate().filter(|(k, _)| m & (1 << k) != 0).map(|(_, v)| v.clone()).collect();
            g.m_separated_pair(t, c, &z).unwrap()
        });
        match g.separating_subset(t, c).unwrap() {
            None => prop_assert!(!any_separates),
            Some(s) => {
                prop_assert!(!g.adjacent(t, c));
                prop_assert!(g.m_separated_pair(t, c, &s).unwrap());
            }
        }
    }

    #[test]
    fn text_format_round_trips(g in arb_graph(9)) {
        let text = g.to_text();
        let back = Admg::parse(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(back.to_text(), text);
    }
}

#[test]
fn remark_example_separations() {
    let g = sctl_core::fixtures::remark_graph();
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<VertexSet>();
    assert!(g.m_separated_pair("T", "C1", &s(&["X"])).unwrap());
    assert!(!g.m_separated_pair("T", "C1", &s(&["X", "Y"])).unwrap());
    assert!(!g.m_separated_pair("T", "C1", &s(&[])).unwrap());
}
