use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sctl_core::admg::VertexSet;
use sctl_core::dataset::Dataset;
use sctl_core::fixtures::{remark_graph, remark_spec, smallg_graph, smallg_scenario, smallg_spec};
use sctl_core::gen::random_context_admg;
use sctl_core::predict::welch_t_test;
use sctl_core::synth::*;

fn set(v: &[&str]) -> VertexSet {
    v.iter().map(|s| s.to_string()).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn explicit_latents_project_back(seed in any::<u64>(), n_sys in 1usize..7, n_ctx in 0usize..3, discrete in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cg = random_context_admg(n_sys, n_ctx, 0.35, 0.3, &mut rng);
        let family = if discrete { MechanismFamily::Discrete } else { MechanismFamily::Gaussian };
        let spec = spec_from_graph(&cg.graph, &cg.contexts, &cg.target, family, &mut rng).unwrap();
        prop_assert!(spec.violations().is_empty(), "{:?}", spec.violations());
        prop_assert_eq!(spec.evaluation_graph().unwrap(), cg.graph.clone());
        prop_assert_eq!(spec.latents().len(), cg.graph.bidirected_edges().len());
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), n in 1usize..50, discrete in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cg = random_context_admg(4, 2, 0.4, 0.3, &mut rng);
        let family = if discrete { MechanismFamily::Discrete } else { MechanismFamily::Gaussian };
        let spec = spec_from_graph(&cg.graph, &cg.contexts, &cg.target, family, &mut rng).unwrap();
        let a = sample(&spec, n, seed).unwrap();
        prop_assert_eq!(&a, &sample(&spec, n, seed).unwrap());
        prop_assert_eq!(a.names(), spec.observed().to_vec());
        prop_assert_eq!(a.n_rows(), n);
    }

    #[test]
    fn csv_round_trips(seed in any::<u64>(), discrete in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cg = random_context_admg(4, 1, 0.4, 0.3, &mut rng);
        let family = if discrete { MechanismFamily::Discrete } else { MechanismFamily::Gaussian };
        let spec = spec_from_graph(&cg.graph, &cg.contexts, &cg.target, family, &mut rng).unwrap();
        let d = sample(&spec, 20, seed).unwrap();
        let text = d.to_csv_string();
        let force: Vec<String> = if discrete { d.names() } else { Vec::new() };
        let back = Dataset::from_csv_reader(text.as_bytes(), &force).unwrap();
        prop_assert_eq!(back.to_csv_string(), text);
        if !discrete {
            prop_assert_eq!(back, d);
        }
    }

    #[test]
    fn split_seeds_are_distinct(base in any::<u64>()) {
        let seeds: std::collections::BTreeSet<u64> = (0..16).map(|s| split_seed(base, s)).collect();
        prop_assert_eq!(seeds.len(), 16);
    }
}

fn with_mechanism(mut spec: GroundTruthSpec, name: &str, m: Mechanism) -> GroundTruthSpec {
    spec.variables.iter_mut().find(|v| v.name == name).unwrap().mechanism = m;
    spec
}

fn messages(spec: &GroundTruthSpec) -> Vec<String> {
    spec.violations().into_iter().map(|v| v.message).collect()
}

#[test]
fn rejects_system_parent_of_context() {
    let spec = with_mechanism(
        remark_spec(),
        "C1",
        Mechanism::gaussian(0.0, &[("U", 0.9), ("X", 1.0)], 0.5),
    );
    let msgs = messages(&spec);
    assert!(
        msgs.iter().any(|m| m.contains("`X` is a parent of context `C1`")),
        "{msgs:?}"
    );
}

#[test]
fn rejects_context_parent_of_target() {
    let spec = with_mechanism(
        remark_spec(),
        "T",
        Mechanism::gaussian(0.0, &[("X", 1.2), ("C1", 1.0)], 1.0),
    );
    let msgs = messages(&spec);
    assert!(
        msgs.iter()
            .any(|m| m.contains("context `C1` is a parent of the target")),
        "{msgs:?}"
    );
}

#[test]
fn rejects_unconfounded_contexts() {
    let spec = with_mechanism(remark_spec(), "C2", Mechanism::gaussian(0.0, &[], 0.5));
    let msgs = messages(&spec);
    assert!(msgs.iter().any(|m| m.contains("not confounded")), "{msgs:?}");
}

#[test]
fn rejects_context_confounded_with_system() {
    let spec = with_mechanism(
        remark_spec(),
        "X",
        Mechanism::gaussian(0.5, &[("C2", 1.0), ("U", 0.3)], 1.0),
    );
    let msgs = messages(&spec);
    assert!(
        msgs.iter().any(|m| m.contains("confounded with system variable `X`")),
        "{msgs:?}"
    );
}

#[test]
fn violations_name_field_paths() {
    let spec = with_mechanism(
        remark_spec(),
        "Y",
        Mechanism::gaussian(0.0, &[("T", 1.0), ("Nope", 1.0)], -1.0),
    );
    let paths: Vec<String> = spec.violations().into_iter().map(|v| v.path).collect();
    assert!(
        paths.contains(&"variables[5].mechanism.noise_var".to_string()),
        "{paths:?}"
    );
    assert!(
        paths.contains(&"variables[5].mechanism.coefficients.Nope".to_string()),
        "{paths:?}"
    );
}

#[test]
fn fixture_specs_match_fixture_graphs() {
    assert_eq!(remark_spec().evaluation_graph().unwrap(), remark_graph());
    assert_eq!(smallg_spec().evaluation_graph().unwrap(), smallg_graph());
}

#[test]
fn sample_means_match_analytic_moments() {
    let spec = remark_spec();
    let n = 10_000;
    let d = sample(&spec, n, 42).unwrap();
    for v in spec.observed().iter() {
        let (mu, sigma2) = gaussian_moments(&spec, v).unwrap();
        let xs = d.continuous(v).unwrap();
        let se = (sigma2 / n as f64).sqrt();
        assert!(
            (mean(xs) - mu).abs() < 3.0 * se,
            "{v}: mean {} vs {mu} (se {se})",
            mean(xs)
        );
        assert!(
            (var(xs) / sigma2 - 1.0).abs() < 0.06,
            "{v}: var {} vs {sigma2}",
            var(xs)
        );
    }
}

#[test]
fn remark_moments_by_hand() {
    // C2 = 0.9 U + e: var 0.81 + 0.5; X = 0.5 + C2 + e; T = 1.2 X + e
    let spec = remark_spec();
    let (m, v) = gaussian_moments(&spec, "X").unwrap();
    assert!((m - 0.5).abs() < 1e-12 && (v - 2.31).abs() < 1e-12);
    let (m, v) = gaussian_moments(&spec, "T").unwrap();
    assert!((m - 0.6).abs() < 1e-12 && (v - (1.44 * 2.31 + 1.0)).abs() < 1e-12);
}

#[test]
fn severity_shifts_context_moments() {
    let spec = remark_spec();
    let (m0, v0) = gaussian_moments(&spec, "C1").unwrap();
    for sev in [Severity::Smooth, Severity::Mild, Severity::Severe] {
        let lv = sev.levels();
        let shifted = apply_shift(&spec, &ShiftSpec::new(set(&["C1"]), sev)).unwrap();
        let (m1, v1) = gaussian_moments(&shifted, "C1").unwrap();
        assert!((m1 - m0 - lv.mean_shift_sd * v0.sqrt()).abs() < 1e-9, "{sev}");
        assert!((v1 / v0 - lv.variance_scale).abs() < 1e-9, "{sev}");
        // only the context mechanism changes
        for v in spec.variables.iter().filter(|v| v.name != "C1") {
            assert_eq!(shifted.variable(&v.name), Some(v));
        }
    }
}

#[test]
fn zero_magnitude_leaves_distribution_unchanged() {
    let spec = smallg_spec();
    let mut shift = ShiftSpec::new(set(&["C1"]), Severity::Smooth);
    shift.magnitude = 0.0;
    let shifted = apply_shift(&spec, &shift).unwrap();
    assert_eq!(shifted, spec);
    let a = sample(&spec, 10_000, split_seed(9, 0)).unwrap();
    let b = sample(&shifted, 10_000, split_seed(9, 1)).unwrap();
    for v in spec.observed().iter() {
        let (_, p) = welch_t_test(a.continuous(v).unwrap(), b.continuous(v).unwrap()).unwrap();
        assert!(p > 0.001, "{v}: p = {p}");
    }
}

#[test]
fn scenario_generation_is_deterministic() {
    let sc = smallg_scenario(200, 3, 5);
    let a = generate_scenario(&sc).unwrap();
    let b = generate_scenario(&sc).unwrap();
    assert_eq!(a.source, b.source);
    assert_eq!(a.targets, b.targets);
    assert_eq!(a.meta, b.meta);
    assert_eq!(a.targets.len(), 3);
    for r in &a.meta.replicates {
        let v = r.perturbed_variable.as_deref().unwrap();
        assert!(v != "T" && !sc.spec.contexts.contains(v));
        assert!(r.factors.iter().all(|f| (f - 1.0).abs() <= REPLICATE_JITTER));
    }
}

#[test]
fn faithfulness_probe_on_fixture() {
    let report = faithfulness_probe(&smallg_spec(), 10_000, 0.01, 3, 200).unwrap();
    assert!(report.disagreement_rate() < 0.10, "{:?}", report.disagreements);
}

#[test]
fn faithfulness_probe_flags_zero_coefficient() {
    // X keeps its edge from C2 in the graph but the weight is zero
    let spec = with_mechanism(remark_spec(), "X", Mechanism::gaussian(0.5, &[("C2", 0.0)], 1.0));
    let report = faithfulness_probe(&spec, 10_000, 0.01, 3, 300).unwrap();
    assert!(
        report
            .vanished_dependences()
            .any(|d| (d.x == "X" && d.y == "C2") || (d.x == "C2" && d.y == "X")),
        "{:?}",
        report.disagreements
    );
}

#[test]
fn probe_refuses_small_samples() {
    assert!(matches!(
        faithfulness_probe(&remark_spec(), MIN_PROBE_ROWS - 1, 0.01, 0, 10),
        Err(SynthError::Precondition(_))
    ));
}
