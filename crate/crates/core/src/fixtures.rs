//! Reference graphs and scenarios used across tests, examples and the CLI.

use crate::admg::{Admg, VertexSet};
use crate::synth::{GroundTruthSpec, Mechanism, SampleSizes, Scenario, Severity, ShiftSpec, VariableSpec};

/// `C1 <-> C2, C1 -> Y, C2 -> X, X -> T, T -> Y`.
pub fn remark_graph() -> Admg {
    Admg::builder()
        .bidirected("C1", "C2")
        .directed("C1", "Y")
        .directed("C2", "X")
        .directed("X", "T")
        .directed("T", "Y")
        .build()
        .expect("reference graph is acyclic")
}

/// The nine-vertex benchmark graph with target `T` and context `C1`.
pub fn smallg_graph() -> Admg {
    Admg::builder()
        .bidirected("C1", "C2")
        .directed("C1", "Y")
        .directed("C2", "X")
        .directed("X", "T")
        .directed("T", "Y")
        .directed("T", "P")
        .directed("P", "Q")
        .directed("D", "B")
        .directed("C2", "B")
        .build()
        .expect("reference graph is acyclic")
}

/// The larger benchmark graph with target `M`, whose blanket holds no context.
pub fn target_m_graph() -> Admg {
    let directed = [
        ("K", "L"),
        ("K", "M"),
        ("K", "J"),
        ("M", "N"),
        ("J", "N"),
        ("L", "M"),
        ("C1", "Y"),
        ("C2", "X"),
        ("X", "T"),
        ("T", "Y"),
        ("T", "P"),
        ("P", "Q"),
        ("D", "B"),
        ("C2", "B"),
        ("E", "B"),
        ("E", "I"),
        ("F", "D"),
        ("G", "E"),
        ("H", "E"),
        ("J", "X"),
    ];
    let mut b = Admg::builder().bidirected("C1", "C2");
    for (t, h) in directed {
        b = b.directed(t, h);
    }
    b.build().expect("reference graph is acyclic")
}

fn var(name: &str, mechanism: Mechanism) -> VariableSpec {
    VariableSpec {
        name: name.to_string(),
        latent: false,
        mechanism,
    }
}

fn latent(name: &str, mechanism: Mechanism) -> VariableSpec {
    VariableSpec {
        name: name.to_string(),
        latent: true,
        mechanism,
    }
}

fn contexts() -> VertexSet {
    ["C1", "C2"].into_iter().map(String::from).collect()
}

/// Linear-Gaussian mechanisms for [`remark_graph`]; the confounder `U`
/// realizes `C1 <-> C2`.
pub fn remark_spec() -> GroundTruthSpec {
    GroundTruthSpec {
        variables: vec![
            latent("U", Mechanism::gaussian(0.0, &[], 1.0)),
            var("C1", Mechanism::gaussian(0.0, &[("U", 0.9)], 0.5)),
            var("C2", Mechanism::gaussian(0.0, &[("U", 0.9)], 0.5)),
            var("X", Mechanism::gaussian(0.5, &[("C2", 1.0)], 1.0)),
            var("T", Mechanism::gaussian(0.0, &[("X", 1.2)], 1.0)),
            var("Y", Mechanism::gaussian(0.0, &[("T", 1.0), ("C1", 1.5)], 1.0)),
        ],
        contexts: contexts(),
        target: "T".into(),
    }
}

/// Linear-Gaussian mechanisms for [`smallg_graph`].
pub fn smallg_spec() -> GroundTruthSpec {
    let mut spec = remark_spec();
    spec.variables.extend([
        var("P", Mechanism::gaussian(0.0, &[("T", 1.0)], 1.0)),
        var("Q", Mechanism::gaussian(0.0, &[("P", 0.9)], 1.0)),
        var("D", Mechanism::gaussian(0.0, &[], 1.0)),
        var("B", Mechanism::gaussian(0.0, &[("D", 0.8), ("C2", 0.8)], 1.0)),
    ]);
    spec
}

/// [`smallg_spec`] with a severe shift on `C1`.
pub fn smallg_scenario(n: usize, replicates: usize, seed: u64) -> Scenario {
    Scenario {
        name: "smallg".into(),
        spec: smallg_spec(),
        shift: ShiftSpec::new(["C1".to_string()].into_iter().collect(), Severity::Severe),
        sample_sizes: SampleSizes { source: n, target: n },
        replicates,
        seed,
    }
}

/// [`remark_spec`] with a mild shift on `C1`.
pub fn remark_scenario(n: usize, replicates: usize, seed: u64) -> Scenario {
    Scenario {
        name: "remark".into(),
        spec: remark_spec(),
        shift: ShiftSpec::new(["C1".to_string()].into_iter().collect(), Severity::Mild),
        sample_sizes: SampleSizes { source: n, target: n },
        replicates,
        seed,
    }
}

/// A wide spec with `n_observed` observed variables: the smallg core around
/// `T` (blanket `{C1, P, W, X, Y}`) plus weakly chained noise variables
/// `Z0000…` that are independent of the core.
pub fn wide_spec(n_observed: usize) -> GroundTruthSpec {
    let mut spec = remark_spec();
    spec.variables.retain(|v| v.name != "T");
    spec.variables.extend([
        var("W", Mechanism::gaussian(0.0, &[], 1.0)),
        var("T", Mechanism::gaussian(0.0, &[("X", 1.2), ("W", 0.8)], 1.0)),
        var("P", Mechanism::gaussian(0.0, &[("T", 1.0)], 1.0)),
    ]);
    let core = spec.variables.iter().filter(|v| !v.latent).count();
    let extra = n_observed.saturating_sub(core);
    let names = crate::gen::vertex_names("Z", extra.max(1));
    for (i, z) in names.iter().take(extra).enumerate() {
        let m = if i % 2 == 1 {
            Mechanism::gaussian(0.0, &[(names[i - 1].as_str(), 0.7)], 1.0)
        } else {
            Mechanism::gaussian(0.0, &[], 1.0)
        };
        spec.variables.push(var(z, m));
    }
    spec
}
