use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sctl_core::admg::Admg;
use sctl_core::citest::DataCi;
use sctl_core::citest::OracleCi;
use sctl_core::fixtures::{smallg_graph, smallg_spec};
use sctl_core::gen::random_admg;
use sctl_core::mb::{self, MbAlgorithm, MbOptions};
use sctl_core::synth::sample;

fn arb_graph(max: usize) -> impl Strategy<Value = Admg> {
    (any::<u64>(), 1..=max, 0.1f64..0.6, 0.0f64..0.4)
        .prop_map(|(s, n, pd, pb)| random_admg(n, pd, pb, &mut ChaCha8Rng::seed_from_u64(s)))
}

proptest! {
    #[test]
    fn oracle_recovers_graphical_blanket(g in arb_graph(10), i in 0usize..10) {
        let t = g.vertices()[i % g.len()].clone();
        let ci = OracleCi::new(&g);
        let expected = g.markov_blanket(&t).unwrap();
        for algo in MbAlgorithm::ALL {
            let r = mb::discover(algo, &ci, g.vertices(), &t, &MbOptions::default()).unwrap();
            prop_assert_eq!(&r.blanket, &expected, "{} on {}", algo, t);
        }
    }

    #[test]
    fn trace_replays_to_blanket(g in arb_graph(10), i in 0usize..10) {
        let t = g.vertices()[i % g.len()].clone();
        let ci = OracleCi::new(&g);
        for algo in MbAlgorithm::ALL {
            let r = mb::discover(algo, &ci, g.vertices(), &t, &MbOptions::default()).unwrap();
            prop_assert_eq!(r.replay(), r.blanket.clone());
            prop_assert!(r.test_count >= r.trace.len());
        }
    }

    #[test]
    fn discovery_is_repeatable(g in arb_graph(8), i in 0usize..8) {
        let t = g.vertices()[i % g.len()].clone();
        let ci = OracleCi::new(&g);
        for algo in MbAlgorithm::ALL {
            let a = mb::discover(algo, &ci, g.vertices(), &t, &MbOptions::default()).unwrap();
            let b = mb::discover(algo, &ci, g.vertices(), &t, &MbOptions::default()).unwrap();
            prop_assert_eq!(a.trace_text(), b.trace_text());
        }
    }

    #[test]
    fn blanket_never_holds_target(g in arb_graph(8), i in 0usize..8, cap in 0usize..3) {
        let t = g.vertices()[i % g.len()].clone();
        let ci = OracleCi::new(&g);
        let opts = MbOptions { alpha: 0.05, max_conditioning: Some(cap) };
        for algo in MbAlgorithm::ALL {
            let r = mb::discover(algo, &ci, g.vertices(), &t, &opts).unwrap();
            prop_assert!(!r.blanket.contains(&t));
            prop_assert_eq!(r.replay(), r.blanket.clone());
        }
    }
}

/// Tests run at alpha = 0.05, so an occasional extra admission is expected;
/// misses are not at this sample size.
#[test]
fn fisher_z_iamb_on_sampled_data() {
    let g = smallg_graph();
    let expected = g.markov_blanket("T").unwrap();
    let mut exact = 0;
    for seed in 0..5 {
        let d = sample(&smallg_spec(), 2000, seed).unwrap();
        let ci = DataCi::new(&d);
        let r = mb::iamb(&ci, &d.names(), "T", &MbOptions::default()).unwrap();
        assert!(
            expected.is_subset(&r.blanket),
            "seed {seed} missed members:\n{}",
            r.trace_text()
        );
        exact += usize::from(r.blanket == expected);
    }
    assert!(exact >= 4, "exact recovery in {exact}/5");
}
