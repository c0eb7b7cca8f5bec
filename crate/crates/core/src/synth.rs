//! Ground-truth scenarios: structural mechanisms over observed and latent
//! variables, context shifts for the target domain, and seeded sampling.
//!
//! Latent confounders are ordinary vertices marked `latent`; they are sampled
//! and then dropped, so a latent with directed paths to two observed vertices
//! shows up as a bidirected edge in the evaluation graph.
//!
//! Seeds: stream `s` of base seed `b` uses `splitmix64(b + s·0x9E3779B97F4A7C15)`
//! to seed ChaCha8. Stream 0 is the source domain, stream `r` the `r`-th target
//! replicate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admg::{Admg, AdmgBuilder, GraphError, VertexSet};
use crate::citest::{CiError, CiTest, DataCi};
use crate::dataset::{Column, DataError, Dataset, DomainLabel};

/// Identifier of the pseudo-random generator, stored in scenario metadata.
pub const PRNG_ALGORITHM: &str = "chacha8";
pub const SEED_GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
/// Replicate coefficient jitter: factors drawn uniformly from `1 ± JITTER`.
pub const REPLICATE_JITTER: f64 = 0.05;
pub const DEFAULT_REPLICATES: usize = 8;
pub const MIN_PROBE_ROWS: usize = 1000;
const CPT_TOLERANCE: f64 = 1e-9;
const MAX_ENUMERATED_STATES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn list_violations(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  {x}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario:\n{}", list_violations(.0))]
    Validation(Vec<Violation>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Ci(#[from] CiError),
}

pub type Result<T> = std::result::Result<T, SynthError>;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(SEED_GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `stream` derived from `base`.
pub fn split_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base.wrapping_add(stream.wrapping_mul(SEED_GOLDEN_GAMMA)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mechanism {
    /// `v = intercept + Σ coef·parent + N(0, noise_var)`; discrete parents
    /// enter through their level index.
    LinearGaussian {
        #[serde(default)]
        intercept: f64,
        #[serde(default)]
        coefficients: BTreeMap<String, f64>,
        noise_var: f64,
    },
    /// Conditional probability table; row `r` is the parent configuration in
    /// mixed radix with the first parent most significant.
    Discrete {
        levels: Vec<String>,
        #[serde(default)]
        parents: Vec<String>,
        table: Vec<Vec<f64>>,
    },
}

impl Mechanism {
    pub fn gaussian(intercept: f64, coefficients: &[(&str, f64)], noise_var: f64) -> Mechanism {
        Mechanism::LinearGaussian {
            intercept,
            coefficients: coefficients.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            noise_var,
        }
    }

    pub fn discrete(levels: &[&str], parents: &[&str], table: Vec<Vec<f64>>) -> Mechanism {
        Mechanism::Discrete {
            levels: levels.iter().map(|s| s.to_string()).collect(),
            parents: parents.iter().map(|s| s.to_string()).collect(),
            table,
        }
    }

    pub fn parents(&self) -> Vec<String> {
        match self {
            Mechanism::LinearGaussian { coefficients, .. } => coefficients.keys().cloned().collect(),
            Mechanism::Discrete { parents, .. } => parents.clone(),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Mechanism::Discrete { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    #[serde(default)]
    pub latent: bool,
    pub mechanism: Mechanism,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthSpec {
    pub variables: Vec<VariableSpec>,
    pub contexts: VertexSet,
    pub target: String,
}

impl GroundTruthSpec {
    pub fn variable(&self, name: &str) -> Option<&VariableSpec> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn observed(&self) -> VertexSet {
        self.variables
            .iter()
            .filter(|v| !v.latent)
            .map(|v| v.name.clone())
            .collect()
    }

    pub fn latents(&self) -> VertexSet {
        self.variables
            .iter()
            .filter(|v| v.latent)
            .map(|v| v.name.clone())
            .collect()
    }

    /// Observed variables that are neither contexts nor the target.
    pub fn system_variables(&self) -> VertexSet {
        let mut s = self.observed().difference(&self.contexts);
        s.remove(&self.target);
        s
    }

    /// Directed graph over observed and latent vertices.
    pub fn graph(&self) -> Result<Admg> {
        let mut b = AdmgBuilder::new();
        for v in &self.variables {
            b.add_node(&v.name);
            for p in v.mechanism.parents() {
                b.add_directed(p, &v.name);
            }
        }
        Ok(b.build()?)
    }

    /// Latent projection onto the observed vertices.
    pub fn evaluation_graph(&self) -> Result<Admg> {
        let g = self.graph()?;
        Ok(project_latents(&g, &self.latents()))
    }

    /// Collects every violated invariant with its field path.
    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(SynthError::Validation(v))
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |path: String, message: String| out.push(Violation { path, message });
        let mut seen = BTreeSet::new();
        for (i, v) in self.variables.iter().enumerate() {
            if v.name.is_empty() || v.name.chars().any(|c| c.is_whitespace() || c == ',') {
                push(format!("variables[{i}].name"), format!("invalid name `{}`", v.name));
            }
            if !seen.insert(v.name.as_str()) {
                push(
                    format!("variables[{i}].name"),
                    format!("duplicate variable `{}`", v.name),
                );
            }
        }
        for (i, v) in self.variables.iter().enumerate() {
            let base = format!("variables[{i}].mechanism");
            match &v.mechanism {
                Mechanism::LinearGaussian {
                    intercept,
                    coefficients,
                    noise_var,
                } => {
                    if !intercept.is_finite() {
                        push(format!("{base}.intercept"), "must be finite".into());
                    }
                    if !(noise_var.is_finite() && *noise_var >= 0.0) {
                        push(
                            format!("{base}.noise_var"),
                            format!("must be finite and >= 0, got {noise_var}"),
                        );
                    }
                    for (p, c) in coefficients {
                        if !c.is_finite() {
                            push(format!("{base}.coefficients.{p}"), "must be finite".into());
                        }
                        if self.variable(p).is_none() {
                            push(format!("{base}.coefficients.{p}"), format!("unknown parent `{p}`"));
                        }
                    }
                }
                Mechanism::Discrete { levels, parents, table } => {
                    if levels.is_empty() {
                        push(format!("{base}.levels"), "at least one level required".into());
                    }
                    if levels.iter().collect::<BTreeSet<_>>().len() != levels.len() {
                        push(format!("{base}.levels"), "duplicate level".into());
                    }
                    let mut rows = 1usize;
                    let mut parents_ok = true;
                    for (j, p) in parents.iter().enumerate() {
                        match self.variable(p) {
                            None => {
                                push(format!("{base}.parents[{j}]"), format!("unknown parent `{p}`"));
                                parents_ok = false;
                            }
                            Some(pv) => match &pv.mechanism {
                                Mechanism::Discrete { levels, .. } => rows = rows.saturating_mul(levels.len()),
                                _ => {
                                    push(
                                        format!("{base}.parents[{j}]"),
                                        format!("parent `{p}` of a discrete variable must be discrete"),
                                    );
                                    parents_ok = false;
                                }
                            },
                        }
                    }
                    if parents.iter().collect::<BTreeSet<_>>().len() != parents.len() {
                        push(format!("{base}.parents"), "duplicate parent".into());
                    }
                    if parents_ok && table.len() != rows {
                        push(
                            format!("{base}.table"),
                            format!(
                                "expected {rows} rows (one per parent configuration), got {}",
                                table.len()
                            ),
                        );
                    }
                    for (r, row) in table.iter().enumerate() {
                        if row.len() != levels.len() {
                            push(
                                format!("{base}.table[{r}]"),
                                format!("expected {} probabilities, got {}", levels.len(), row.len()),
                            );
                            continue;
                        }
                        if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                            push(format!("{base}.table[{r}]"), "probabilities must be >= 0".into());
                        }
                        let sum: f64 = row.iter().sum();
                        if (sum - 1.0).abs() > CPT_TOLERANCE {
                            push(format!("{base}.table[{r}]"), format!("row sums to {sum}, expected 1"));
                        }
                    }
                }
            }
        }
        match self.variable(&self.target) {
            None => push("target".into(), format!("unknown target `{}`", self.target)),
            Some(v) if v.latent => push("target".into(), "target must be observed".into()),
            _ => {}
        }
        for c in self.contexts.iter() {
            match self.variable(c) {
                None => push("contexts".into(), format!("unknown context `{c}`")),
                Some(v) if v.latent => push("contexts".into(), format!("context `{c}` must be observed")),
                _ => {}
            }
        }
        if self.contexts.contains(&self.target) {
            push("contexts".into(), "target cannot be a context".into());
        }
        if !out.is_empty() {
            return out;
        }
        let g = match self.graph() {
            Ok(g) => g,
            Err(e) => {
                out.push(Violation {
                    path: "variables".into(),
                    message: e.to_string(),
                });
                return out;
            }
        };
        let eg = project_latents(&g, &self.latents());
        out.extend(context_violations(&eg, &self.contexts, &self.target));
        out
    }
}

/// Structural context checks on an evaluation graph: no system→context edge,
/// no system↔context confounding, all context pairs confounded, no
/// context→target edge.
pub fn context_violations(g: &Admg, contexts: &VertexSet, target: &str) -> Vec<Violation> {
    let mut out = Vec::new();
    let cs = contexts.to_vec();
    for (i, c) in cs.iter().enumerate() {
        let Ok(parents) = g.parents(c) else { continue };
        for p in parents.iter().filter(|p| !contexts.contains(p)) {
            out.push(Violation {
                path: "contexts".into(),
                message: format!("system variable `{p}` is a parent of context `{c}`"),
            });
        }
        for s in g
            .siblings(c)
            .unwrap_or_default()
            .iter()
            .filter(|s| !contexts.contains(s))
        {
            out.push(Violation {
                path: "contexts".into(),
                message: format!("context `{c}` is confounded with system variable `{s}`"),
            });
        }
        for d in &cs[i + 1..] {
            if !g.has_bidirected(c, d) {
                out.push(Violation {
                    path: "contexts".into(),
                    message: format!("contexts `{c}` and `{d}` are not confounded"),
                });
            }
        }
        if g.has_directed(c, target) {
            out.push(Violation {
                path: "contexts".into(),
                message: format!("context `{c}` is a parent of the target `{target}`"),
            });
        }
    }
    out
}

/// Latent projection of a directed graph: `a -> b` when a directed path from
/// `a` to `b` has only latent intermediates, `a <-> b` when some latent reaches
/// both through latent-only directed paths.
pub fn project_latents(g: &Admg, latents: &VertexSet) -> Admg {
    let observed: Vec<String> = g.vertices().iter().filter(|v| !latents.contains(v)).cloned().collect();
    // observed vertices reachable from `v` through latent-only intermediates
    let reach = |v: &str| -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<String> = g.children(v).map(|c| c.to_vec()).unwrap_or_default();
        let mut seen = BTreeSet::new();
        while let Some(u) = stack.pop() {
            if !seen.insert(u.clone()) {
                continue;
            }
            if latents.contains(&u) {
                stack.extend(g.children(&u).map(|c| c.to_vec()).unwrap_or_default());
            } else {
                out.insert(u);
            }
        }
        out
    };
    let mut b = AdmgBuilder::new();
    for v in &observed {
        b.add_node(v);
        for w in reach(v) {
            b.add_directed(v, w);
        }
    }
    for l in latents.iter() {
        let r: Vec<String> = reach(l).into_iter().collect();
        for (i, a) in r.iter().enumerate() {
            for c in &r[i + 1..] {
                b.add_bidirected(a, c);
            }
        }
    }
    for (a, c) in g.bidirected_edges() {
        if !latents.contains(&a) && !latents.contains(&c) {
            b.add_bidirected(a, c);
        }
    }
    b.build().expect("projection of an acyclic graph is acyclic")
}

/// Name given to the latent realizing `a <-> b`.
pub fn latent_name(a: &str, b: &str) -> String {
    format!("L_{a}_{b}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismFamily {
    Gaussian,
    Discrete,
}

/// Random mechanisms for a graph: every bidirected edge becomes an explicit
/// latent parent. Gaussian coefficients are drawn from ±[0.5, 1.5], discrete
/// variables are binary with Dirichlet(1) CPT rows.
pub fn spec_from_graph<R: Rng + ?Sized>(
    g: &Admg,
    contexts: &VertexSet,
    target: &str,
    family: MechanismFamily,
    rng: &mut R,
) -> Result<GroundTruthSpec> {
    let mut parents: BTreeMap<String, Vec<String>> = g
        .vertices()
        .iter()
        .map(|v| (v.clone(), g.parents(v).unwrap().to_vec()))
        .collect();
    let mut latents = Vec::new();
    for (a, b) in g.bidirected_edges() {
        let l = latent_name(&a, &b);
        if g.contains(&l) {
            return Err(SynthError::InvalidArgument(format!(
                "latent name `{l}` clashes with a vertex"
            )));
        }
        parents.get_mut(&a).unwrap().push(l.clone());
        parents.get_mut(&b).unwrap().push(l.clone());
        latents.push(l);
    }
    let mech = |ps: &[String], rng: &mut R| match family {
        MechanismFamily::Gaussian => Mechanism::LinearGaussian {
            intercept: 0.0,
            coefficients: ps
                .iter()
                .map(|p| {
                    let mag: f64 = rng.random_range(0.5..1.5);
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    (p.clone(), sign * mag)
                })
                .collect(),
            noise_var: 1.0,
        },
        MechanismFamily::Discrete => Mechanism::Discrete {
            levels: vec!["0".into(), "1".into()],
            parents: ps.to_vec(),
            table: dirichlet_table(1 << ps.len(), 2, rng),
        },
    };
    let mut variables = Vec::new();
    for l in &latents {
        variables.push(VariableSpec {
            name: l.clone(),
            latent: true,
            mechanism: mech(&[], rng),
        });
    }
    for (v, ps) in &parents {
        variables.push(VariableSpec {
            name: v.clone(),
            latent: false,
            mechanism: mech(ps, rng),
        });
    }
    let spec = GroundTruthSpec {
        variables,
        contexts: contexts.clone(),
        target: target.to_string(),
    };
    Ok(spec)
}

/// `rows` probability rows over `levels` outcomes, each Dirichlet(1, …, 1).
pub fn dirichlet_table<R: Rng + ?Sized>(rows: usize, levels: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            let g: Vec<f64> = (0..levels).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let s: f64 = g.iter().sum();
            g.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

enum Compiled {
    Gaussian {
        intercept: f64,
        coefficients: Vec<(usize, f64)>,
        sd: f64,
    },
    Discrete {
        levels: usize,
        parents: Vec<usize>,
        radix: Vec<usize>,
        cumulative: Vec<Vec<f64>>,
    },
}

enum Values {
    Real(Vec<f64>),
    Codes(Vec<u32>),
}

impl Values {
    fn get(&self, r: usize) -> f64 {
        match self {
            Values::Real(v) => v[r],
            Values::Codes(c) => c[r] as f64,
        }
    }

    fn code(&self, r: usize) -> usize {
        match self {
            Values::Real(_) => unreachable!("validated: discrete parents only"),
            Values::Codes(c) => c[r] as usize,
        }
    }
}

fn cardinality(spec: &GroundTruthSpec, v: &str) -> usize {
    match &spec.variable(v).expect("validated").mechanism {
        Mechanism::Discrete { levels, .. } => levels.len(),
        _ => 0,
    }
}

/// Ancestral sampling of `n` rows; latent columns are dropped.
pub fn sample(spec: &GroundTruthSpec, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(SynthError::Precondition("sample size must be at least 1".into()));
    }
    spec.validate()?;
    let g = spec.graph()?;
    let order = g.topological_order();
    let pos: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let compiled: Vec<Compiled> = order
        .iter()
        .map(|v| match &spec.variable(v).unwrap().mechanism {
            Mechanism::LinearGaussian {
                intercept,
                coefficients,
                noise_var,
            } => Compiled::Gaussian {
                intercept: *intercept,
                coefficients: coefficients.iter().map(|(p, c)| (pos[p.as_str()], *c)).collect(),
                sd: noise_var.sqrt(),
            },
            Mechanism::Discrete { levels, parents, table } => {
                let cards: Vec<usize> = parents.iter().map(|p| cardinality(spec, p)).collect();
                let mut radix = vec![1usize; cards.len()];
                for i in (0..cards.len().saturating_sub(1)).rev() {
                    radix[i] = radix[i + 1] * cards[i + 1];
                }
                let cumulative = table
                    .iter()
                    .map(|row| {
                        row.iter()
                            .scan(0.0, |acc, p| {
                                *acc += p;
                                Some(*acc)
                            })
                            .collect()
                    })
                    .collect();
                Compiled::Discrete {
                    levels: levels.len(),
                    parents: parents.iter().map(|p| pos[p.as_str()]).collect(),
                    radix,
                    cumulative,
                }
            }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<Values> = Vec::with_capacity(order.len());
    for c in &compiled {
        let col = match c {
            Compiled::Gaussian {
                intercept,
                coefficients,
                sd,
            } => Values::Real(
                (0..n)
                    .map(|r| {
                        let mean = intercept + coefficients.iter().map(|(p, b)| b * values[*p].get(r)).sum::<f64>();
                        let e: f64 = rng.sample(StandardNormal);
                        mean + sd * e
                    })
                    .collect(),
            ),
            Compiled::Discrete {
                levels,
                parents,
                radix,
                cumulative,
            } => Values::Codes(
                (0..n)
                    .map(|r| {
                        let row: usize = parents.iter().zip(radix).map(|(p, k)| values[*p].code(r) * k).sum();
                        let u: f64 = rng.random();
                        let cum = &cumulative[row];
                        cum.iter().position(|&c| u < c).unwrap_or(levels - 1) as u32
                    })
                    .collect(),
            ),
        };
        values.push(col);
    }

    let mut columns: Vec<(String, Column)> = Vec::new();
    for (v, vals) in order.iter().zip(values) {
        let var = spec.variable(v).unwrap();
        if var.latent {
            continue;
        }
        let col = match (vals, &var.mechanism) {
            (Values::Real(x), _) => Column::continuous(v.clone(), x),
            (Values::Codes(c), Mechanism::Discrete { levels, .. }) => Column::discrete(v.clone(), levels.clone(), c),
            _ => unreachable!(),
        };
        columns.push((v.clone(), col));
    }
    columns.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(Dataset::new(columns.into_iter().map(|(_, c)| c).collect())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Smooth,
    Mild,
    Severe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeverityLevels {
    /// Gaussian contexts: mean moved by this many marginal standard deviations.
    pub mean_shift_sd: f64,
    /// Gaussian contexts: marginal variance multiplied by this factor.
    pub variance_scale: f64,
    /// Discrete contexts: total-variation distance of the shifted marginal.
    pub tv_distance: f64,
}

impl Severity {
    pub fn levels(self) -> SeverityLevels {
        let (m, v, t) = match self {
            Severity::Smooth => (0.5, 1.0, 0.05),
            Severity::Mild => (1.5, 1.5, 0.2),
            Severity::Severe => (3.0, 3.0, 0.5),
        };
        SeverityLevels {
            mean_shift_sd: m,
            variance_scale: v,
            tv_distance: t,
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Smooth => "smooth",
            Severity::Mild => "mild",
            Severity::Severe => "severe",
        })
    }
}

fn default_magnitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpec {
    pub shifted_contexts: VertexSet,
    pub severity: Severity,
    /// Scales the severity table; 0 leaves every mechanism unchanged.
    #[serde(default = "default_magnitude")]
    pub magnitude: f64,
    /// Explicit target-domain mechanisms, taking precedence over the table.
    #[serde(default)]
    pub overrides: BTreeMap<String, Mechanism>,
}

impl ShiftSpec {
    pub fn new(shifted: VertexSet, severity: Severity) -> Self {
        ShiftSpec {
            shifted_contexts: shifted,
            severity,
            magnitude: 1.0,
            overrides: BTreeMap::new(),
        }
    }

    pub fn none() -> Self {
        ShiftSpec::new(VertexSet::new(), Severity::Smooth)
    }
}

/// Target-domain spec: only shifted context mechanisms change.
pub fn apply_shift(spec: &GroundTruthSpec, shift: &ShiftSpec) -> Result<GroundTruthSpec> {
    spec.validate()?;
    for v in shift
        .shifted_contexts
        .iter()
        .chain(shift.overrides.keys().map(String::as_str))
    {
        if !spec.contexts.contains(v) {
            return Err(SynthError::InvalidArgument(format!(
                "`{v}` is not a context variable; only context mechanisms may be shifted"
            )));
        }
    }
    if !(shift.magnitude.is_finite() && shift.magnitude >= 0.0) {
        return Err(SynthError::InvalidArgument(format!(
            "shift magnitude must be >= 0, got {}",
            shift.magnitude
        )));
    }
    let mut out = spec.clone();
    let order = spec.graph()?.topological_order();
    let levels = shift.severity.levels();
    let k = shift.magnitude;
    for v in order
        .iter()
        .filter(|v| shift.shifted_contexts.contains(v) || shift.overrides.contains_key(*v))
    {
        let new = if let Some(m) = shift.overrides.get(v) {
            m.clone()
        } else if k == 0.0 {
            continue;
        } else {
            match &out.variable(v).unwrap().mechanism {
                Mechanism::LinearGaussian {
                    intercept,
                    coefficients,
                    noise_var,
                } => {
                    let (_, var) = gaussian_moments(&out, v)?;
                    let sd = var.sqrt();
                    let scale = 1.0 + (levels.variance_scale - 1.0) * k;
                    Mechanism::LinearGaussian {
                        intercept: intercept + levels.mean_shift_sd * k * sd,
                        coefficients: coefficients.clone(),
                        noise_var: noise_var + (scale - 1.0) * var,
                    }
                }
                Mechanism::Discrete {
                    levels: lv,
                    parents,
                    table,
                } => {
                    let tv = (levels.tv_distance * k).min(1.0);
                    Mechanism::Discrete {
                        levels: lv.clone(),
                        parents: parents.clone(),
                        table: tilt_to_tv(&out, v, table, tv)?,
                    }
                }
            }
        };
        out.variables.iter_mut().find(|x| &x.name == v).unwrap().mechanism = new;
    }
    out.validate()?;
    Ok(out)
}

/// Mean and variance of `v`; all ancestors must be linear-Gaussian.
pub fn gaussian_moments(spec: &GroundTruthSpec, v: &str) -> Result<(f64, f64)> {
    let g = spec.graph()?;
    let anc = g.ancestors(&VertexSet::from_iter([v.to_string()]))?;
    let order: Vec<String> = g.topological_order().into_iter().filter(|x| anc.contains(x)).collect();
    let idx: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, x)| (x.as_str(), i)).collect();
    let n = order.len();
    let mut mean = vec![0.0; n];
    let mut cov = vec![0.0; n * n];
    for (i, x) in order.iter().enumerate() {
        let Mechanism::LinearGaussian {
            intercept,
            coefficients,
            noise_var,
        } = &spec.variable(x).unwrap().mechanism
        else {
            return Err(SynthError::InvalidArgument(format!(
                "cannot shift `{v}` by standard deviations: ancestor `{x}` is not linear-Gaussian"
            )));
        };
        let coefs: Vec<(usize, f64)> = coefficients.iter().map(|(p, c)| (idx[p.as_str()], *c)).collect();
        mean[i] = intercept + coefs.iter().map(|(p, c)| c * mean[*p]).sum::<f64>();
        for j in 0..i {
            let c: f64 = coefs.iter().map(|(p, b)| b * cov[p * n + j]).sum();
            cov[i * n + j] = c;
            cov[j * n + i] = c;
        }
        cov[i * n + i] = noise_var
            + coefs
                .iter()
                .flat_map(|(p, b)| coefs.iter().map(move |(q, c)| (p, b, q, c)))
                .map(|(p, b, q, c)| b * c * cov[p * n + q])
                .sum::<f64>();
    }
    let i = idx[v];
    Ok((mean[i], cov[i * n + i]))
}

/// Exact distribution over parent configurations of a discrete `v`, by
/// enumerating its (discrete) ancestors.
fn parent_configuration_probs(spec: &GroundTruthSpec, v: &str) -> Result<Vec<f64>> {
    let Mechanism::Discrete { parents, .. } = &spec.variable(v).unwrap().mechanism else {
        unreachable!()
    };
    let g = spec.graph()?;
    let parent_set: VertexSet = parents.iter().cloned().collect();
    let anc = g.ancestors(&parent_set)?;
    let order: Vec<String> = g.topological_order().into_iter().filter(|x| anc.contains(x)).collect();
    let pos: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, x)| (x.as_str(), i)).collect();
    // states: (assignment over `order` so far, probability)
    let mut states: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), 1.0)];
    for x in &order {
        let Mechanism::Discrete {
            levels,
            parents: ps,
            table,
        } = &spec.variable(x).unwrap().mechanism
        else {
            return Err(SynthError::InvalidArgument(format!(
                "cannot tilt `{v}`: ancestor `{x}` is not discrete"
            )));
        };
        let cards: Vec<usize> = ps.iter().map(|p| cardinality(spec, p)).collect();
        let mut next = Vec::with_capacity(states.len() * levels.len());
        for (assign, p) in &states {
            let mut row = 0;
            for (q, card) in ps.iter().zip(&cards) {
                row = row * card + assign[pos[q.as_str()]] as usize;
            }
            for (k, pk) in table[row].iter().enumerate() {
                if *pk > 0.0 {
                    let mut a = assign.clone();
                    a.push(k as u32);
                    next.push((a, p * pk));
                }
            }
        }
        if next.len() > MAX_ENUMERATED_STATES {
            return Err(SynthError::InvalidArgument(format!(
                "too many ancestor configurations to tilt `{v}` exactly"
            )));
        }
        states = next;
    }
    let cards: Vec<usize> = parents.iter().map(|p| cardinality(spec, p)).collect();
    let rows: usize = cards.iter().product();
    let mut probs = vec![0.0; rows];
    for (assign, p) in states {
        let mut row = 0;
        for (q, card) in parents.iter().zip(&cards) {
            row = row * card + assign[pos[q.as_str()]] as usize;
        }
        probs[row] += p;
    }
    Ok(probs)
}

fn tilt_row(row: &[f64], theta: f64) -> Vec<f64> {
    let logs: Vec<f64> = row
        .iter()
        .enumerate()
        .map(|(k, p)| {
            if *p > 0.0 {
                p.ln() + theta * k as f64
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn marginal(config: &[f64], table: &[Vec<f64>]) -> Vec<f64> {
    let mut m = vec![0.0; table.first().map_or(0, Vec::len)];
    for (p, row) in config.iter().zip(table) {
        for (k, q) in row.iter().enumerate() {
            m[k] += p * q;
        }
    }
    m
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Exponentially tilts every CPT row towards higher (or, failing that, lower)
/// levels until the marginal of `v` sits at total-variation distance `tv`.
fn tilt_to_tv(spec: &GroundTruthSpec, v: &str, table: &[Vec<f64>], tv: f64) -> Result<Vec<Vec<f64>>> {
    if tv == 0.0 {
        return Ok(table.to_vec());
    }
    let config = parent_configuration_probs(spec, v)?;
    let base = marginal(&config, table);
    let dist = |theta: f64| {
        let t: Vec<Vec<f64>> = table.iter().map(|r| tilt_row(r, theta)).collect();
        total_variation(&marginal(&config, &t), &base)
    };
    for dir in [1.0, -1.0] {
        let mut hi = 1.0;
        while dist(dir * hi) < tv && hi < 512.0 {
            hi *= 2.0;
        }
        if dist(dir * hi) < tv {
            continue;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dist(dir * mid) < tv {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let theta = dir * 0.5 * (lo + hi);
        return Ok(table.iter().map(|r| tilt_row(r, theta)).collect());
    }
    Err(SynthError::InvalidArgument(format!(
        "total-variation shift of {tv} is unreachable for `{v}` by tilting"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSizes {
    pub source: usize,
    pub target: usize,
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub spec: GroundTruthSpec,
    pub shift: ShiftSpec,
    pub sample_sizes: SampleSizes,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let mut v: Vec<Violation> = self
            .spec
            .violations()
            .into_iter()
            .map(|x| Violation {
                path: format!("spec.{}", x.path),
                message: x.message,
            })
            .collect();
        for c in self.shift.shifted_contexts.iter() {
            if !self.spec.contexts.contains(c) {
                v.push(Violation {
                    path: "shift.shifted_contexts".into(),
                    message: format!("`{c}` is not a context variable"),
                });
            }
        }
        for c in self.shift.overrides.keys() {
            if !self.spec.contexts.contains(c) {
                v.push(Violation {
                    path: format!("shift.overrides.{c}"),
                    message: "only context mechanisms may be overridden".into(),
                });
            }
        }
        if !(self.shift.magnitude.is_finite() && self.shift.magnitude >= 0.0) {
            v.push(Violation {
                path: "shift.magnitude".into(),
                message: "must be >= 0".into(),
            });
        }
        if self.sample_sizes.source == 0 {
            v.push(Violation {
                path: "sample_sizes.source".into(),
                message: "must be at least 1".into(),
            });
        }
        if self.sample_sizes.target == 0 && self.replicates > 0 {
            v.push(Violation {
                path: "sample_sizes.target".into(),
                message: "must be at least 1".into(),
            });
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(SynthError::Validation(v))
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Scenario, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateMeta {
    pub index: usize,
    pub stream_seed: u64,
    pub sample_seed: u64,
    pub perturbed_variable: Option<String>,
    pub factors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub name: String,
    pub prng: String,
    pub seed_split: String,
    pub seed: u64,
    pub source_seed: u64,
    pub sample_sizes: SampleSizes,
    pub target: String,
    pub contexts: VertexSet,
    pub shifted_contexts: VertexSet,
    pub severity: Severity,
    pub severity_levels: SeverityLevels,
    pub magnitude: f64,
    pub replicate_jitter: f64,
    pub evaluation_graph: String,
    pub replicates: Vec<ReplicateMeta>,
}

#[derive(Debug, Clone)]
pub struct ScenarioData {
    pub source: Dataset,
    pub targets: Vec<Dataset>,
    pub meta: ScenarioMeta,
}

/// Target-domain spec of replicate `r` (1-based): the shifted spec with one
/// randomly chosen system mechanism jittered.
pub fn replicate_spec(sc: &Scenario, r: usize) -> Result<(GroundTruthSpec, ReplicateMeta)> {
    let shifted = apply_shift(&sc.spec, &sc.shift)?;
    perturb_replicate(&shifted, sc.seed, r)
}

fn perturb_replicate(shifted: &GroundTruthSpec, seed: u64, r: usize) -> Result<(GroundTruthSpec, ReplicateMeta)> {
    let stream_seed = split_seed(seed, r as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
    let mut spec = shifted.clone();
    let candidates = spec.system_variables().to_vec();
    let mut factors = Vec::new();
    let mut perturbed = None;
    if !candidates.is_empty() {
        let v = candidates[rng.random_range(0..candidates.len())].clone();
        let mut jitter = || 1.0 + rng.random_range(-REPLICATE_JITTER..=REPLICATE_JITTER);
        let var = spec.variables.iter_mut().find(|x| x.name == v).unwrap();
        match &mut var.mechanism {
            Mechanism::LinearGaussian {
                coefficients,
                noise_var,
                ..
            } => {
                if coefficients.is_empty() {
                    let f = jitter();
                    *noise_var *= f;
                    factors.push(f);
                } else {
                    for c in coefficients.values_mut() {
                        let f = jitter();
                        *c *= f;
                        factors.push(f);
                    }
                }
            }
            Mechanism::Discrete { table, .. } => {
                for row in table.iter_mut() {
                    for p in row.iter_mut() {
                        let f = jitter();
                        *p *= f;
                        factors.push(f);
                    }
                    let s: f64 = row.iter().sum();
                    row.iter_mut().for_each(|p| *p /= s);
                }
            }
        }
        perturbed = Some(v);
    }
    let sample_seed = rng.random();
    Ok((
        spec,
        ReplicateMeta {
            index: r,
            stream_seed,
            sample_seed,
            perturbed_variable: perturbed,
            factors,
        },
    ))
}

/// One source dataset and `replicates` shifted target datasets.
pub fn generate_scenario(sc: &Scenario) -> Result<ScenarioData> {
    sc.validate()?;
    let source_seed = split_seed(sc.seed, 0);
    let source = sample(&sc.spec, sc.sample_sizes.source, source_seed)?.with_domain(DomainLabel::Source);
    let shifted = apply_shift(&sc.spec, &sc.shift)?;
    let reps: Vec<(Dataset, ReplicateMeta)> = (1..=sc.replicates)
        .into_par_iter()
        .map(|r| {
            let (spec, meta) = perturb_replicate(&shifted, sc.seed, r)?;
            let d =
                sample(&spec, sc.sample_sizes.target, meta.sample_seed)?.with_domain(DomainLabel::Replicate(r as u32));
            Ok((d, meta))
        })
        .collect::<Result<_>>()?;
    let (targets, replicates): (Vec<_>, Vec<_>) = reps.into_iter().unzip();
    let meta = ScenarioMeta {
        name: sc.name.clone(),
        prng: PRNG_ALGORITHM.to_string(),
        seed_split: "splitmix64(seed + stream * 0x9E3779B97F4A7C15); stream 0 = source, r = replicate r".into(),
        seed: sc.seed,
        source_seed,
        sample_sizes: sc.sample_sizes,
        target: sc.spec.target.clone(),
        contexts: sc.spec.contexts.clone(),
        shifted_contexts: sc.shift.shifted_contexts.clone(),
        severity: sc.shift.severity,
        severity_levels: sc.shift.severity.levels(),
        magnitude: sc.shift.magnitude,
        replicate_jitter: REPLICATE_JITTER,
        evaluation_graph: sc.spec.evaluation_graph()?.to_text(),
        replicates,
    };
    Ok(ScenarioData { source, targets, meta })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeDisagreement {
    pub x: String,
    pub y: String,
    pub conditioning: VertexSet,
    pub graph_separated: bool,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessReport {
    pub n: usize,
    pub alpha: f64,
    pub tested: usize,
    pub disagreements: Vec<ProbeDisagreement>,
}

impl FaithfulnessReport {
    pub fn disagreement_rate(&self) -> f64 {
        if self.tested == 0 {
            0.0
        } else {
            self.disagreements.len() as f64 / self.tested as f64
        }
    }

    /// Graph-connected pairs that tested independent.
    pub fn vanished_dependences(&self) -> impl Iterator<Item = &ProbeDisagreement> {
        self.disagreements.iter().filter(|d| !d.graph_separated)
    }
}

/// Compares data CI decisions with m-separation on random `(x, y, S)`
/// triples with `|S| ≤ 2`.
pub fn faithfulness_probe(
    spec: &GroundTruthSpec,
    n: usize,
    alpha: f64,
    seed: u64,
    trials: usize,
) -> Result<FaithfulnessReport> {
    if n < MIN_PROBE_ROWS {
        return Err(SynthError::Precondition(format!(
            "faithfulness probe needs at least {MIN_PROBE_ROWS} rows, got {n}"
        )));
    }
    let d = sample(spec, n, split_seed(seed, 0))?;
    let g = spec.evaluation_graph()?;
    let vars = g.vertices().to_vec();
    if vars.len() < 2 {
        return Err(SynthError::Precondition("need at least two observed variables".into()));
    }
    let ci = DataCi::new(&d);
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, 1));
    let mut disagreements = Vec::new();
    for _ in 0..trials {
        let i = rng.random_range(0..vars.len());
        let mut j = rng.random_range(0..vars.len() - 1);
        if j >= i {
            j += 1;
        }
        let rest: Vec<&String> = vars
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i && *k != j)
            .map(|(_, v)| v)
            .collect();
        let size = rng.random_range(0..=2.min(rest.len()));
        let mut s = VertexSet::new();
        while s.len() < size {
            s.insert(rest[rng.random_range(0..rest.len())].clone());
        }
        let separated = g.m_separated_pair(&vars[i], &vars[j], &s)?;
        let p = ci.test(&vars[i], &vars[j], &s)?.p_value;
        if separated != (p > alpha) {
            disagreements.push(ProbeDisagreement {
                x: vars[i].clone(),
                y: vars[j].clone(),
                conditioning: s,
                graph_separated: separated,
                p_value: p,
            });
        }
    }
    Ok(FaithfulnessReport {
        n,
        alpha,
        tested: trials,
        disagreements,
    })
}
