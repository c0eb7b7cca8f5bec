//! Benchmark suites: SCTL against all features and the exhaustive search,
//! scored on every target replicate of every scenario.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sctl_core::dataset::format_f64;
use sctl_core::fixtures;
use sctl_core::mb::MbAlgorithm;
use sctl_core::predict::{evaluate, f_variance_test, fit, welch_t_test};
use sctl_core::sctl::{ess, sctl, CiMethod, Outcome, SctlConfig, SctlError, DEFAULT_ESS_CAP};
use sctl_core::synth::{generate_scenario, split_seed, SampleSizes, Scenario, ScenarioData, Severity, ShiftSpec};
use sctl_core::VertexSet;

use crate::io;
use crate::manifest::RunManifest;
use crate::BenchArgs;

pub const RESULTS_HEADER: &str = "scenario,replicate,method,status,features,mse,sse,accuracy,f1";
pub const COMPARISON_HEADER: &str = "scenario,method_a,method_b,n,mean_mse_a,mean_mse_b,welch_t,welch_p,f_stat,f_p";
pub const TIMINGS_HEADER: &str = "scenario,method,status,select_seconds,eval_seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sctl,
    AllFeatures,
    Ess,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Sctl => "sctl",
            Method::AllFeatures => "all_features",
            Method::Ess => "ess",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Remark,
    Smallg,
    /// The smallg core padded with independent noise variables.
    Wide,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SuiteEntry {
    File {
        config: PathBuf,
    },
    Builtin {
        builtin: Builtin,
        n: usize,
        #[serde(default = "default_replicates")]
        replicates: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        severity: Option<Severity>,
        /// Observed variable count for `wide`.
        #[serde(default)]
        variables: Option<usize>,
    },
    Inline(Box<Scenario>),
}

fn default_replicates() -> usize {
    sctl_core::synth::DEFAULT_REPLICATES
}

fn default_alpha() -> f64 {
    0.05
}

fn default_methods() -> Vec<Method> {
    vec![Method::Sctl, Method::AllFeatures, Method::Ess]
}

fn default_cap() -> usize {
    DEFAULT_ESS_CAP
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub mb_algorithm: Option<MbAlgorithm>,
    #[serde(default)]
    pub predictor: Option<String>,
    #[serde(default = "default_cap")]
    pub ess_cap: usize,
    #[serde(default)]
    pub max_subset_size: Option<usize>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub scenarios: Vec<SuiteEntry>,
}

fn resolve(entry: &SuiteEntry, base: &Path, index: usize, manifest: &mut RunManifest) -> Result<Scenario> {
    Ok(match entry {
        SuiteEntry::File { config } => {
            let path = base.join(config);
            manifest.add_input(&path)?;
            let mut sc: Scenario = io::read_json(&path)?;
            if sc.name.is_empty() {
                sc.name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
            }
            sc
        }
        SuiteEntry::Builtin {
            builtin,
            n,
            replicates,
            seed,
            severity,
            variables,
        } => {
            let mut sc = match builtin {
                Builtin::Remark => fixtures::remark_scenario(*n, *replicates, *seed),
                Builtin::Smallg => fixtures::smallg_scenario(*n, *replicates, *seed),
                Builtin::Wide => {
                    let vars = variables.unwrap_or(1000);
                    Scenario {
                        name: format!("wide{vars}"),
                        spec: fixtures::wide_spec(vars),
                        shift: ShiftSpec::new(["C1".to_string()].into_iter().collect(), Severity::Severe),
                        sample_sizes: SampleSizes { source: *n, target: *n },
                        replicates: *replicates,
                        seed: *seed,
                    }
                }
            };
            if let Some(s) = severity {
                sc.shift.severity = *s;
            }
            sc.name = format!("{}-n{n}", sc.name);
            sc
        }
        SuiteEntry::Inline(sc) => {
            let mut sc = (**sc).clone();
            if sc.name.is_empty() {
                sc.name = format!("scenario{index}");
            }
            sc
        }
    })
}

#[derive(Debug, Clone)]
struct Row {
    scenario: String,
    replicate: usize,
    method: Method,
    status: &'static str,
    features: String,
    mse: Option<f64>,
    sse: Option<f64>,
    accuracy: Option<f64>,
    f1: Option<f64>,
}

impl Row {
    fn csv(&self) -> String {
        let f = |x: Option<f64>| x.map(format_f64).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.replicate,
            self.method.name(),
            self.status,
            self.features,
            f(self.mse),
            f(self.sse),
            f(self.accuracy),
            f(self.f1)
        )
    }
}

#[derive(Debug, Clone, Serialize)]
struct SelectionRecord {
    scenario: String,
    method: &'static str,
    status: &'static str,
    features: Option<VertexSet>,
    blanket: Option<VertexSet>,
    subsets_tested: usize,
    predictor: String,
}

struct JobResult {
    rows: Vec<Row>,
    record: SelectionRecord,
    select_seconds: f64,
    eval_seconds: f64,
}

fn run_job(sc: &Scenario, data: &ScenarioData, method: Method, suite: &Suite) -> Result<JobResult> {
    let target = sc.spec.target.clone();
    let contexts = sc.spec.contexts.clone();
    let mut cfg = SctlConfig::new(&target, contexts.clone());
    cfg.alpha = suite.alpha;
    cfg.mb_algorithm = suite.mb_algorithm.unwrap_or(MbAlgorithm::Iamb);
    if let Some(p) = &suite.predictor {
        cfg.regressor = p.parse().map_err(anyhow::Error::msg)?;
    }
    cfg.ess_cap = suite.ess_cap;
    cfg.max_subset_size = suite.max_subset_size;

    let start = Instant::now();
    let (status, features, blanket, subsets) = match method {
        Method::AllFeatures => {
            let f: VertexSet = data
                .source
                .names()
                .into_iter()
                .filter(|v| v != &target && !contexts.contains(v))
                .collect();
            ("ok", Some(f), None, 0)
        }
        Method::Sctl | Method::Ess => {
            let out = if method == Method::Sctl {
                sctl(&data.source, None, &cfg, &CiMethod::Auto)
            } else {
                ess(&data.source, None, &cfg, &CiMethod::Auto)
            };
            match out {
                Ok(Outcome::Selected(sel)) => (
                    "ok",
                    Some(sel.best[0].features.clone()),
                    sel.report.blanket.map(|b| b.blanket),
                    sel.report.subsets_tested,
                ),
                Ok(Outcome::Abstained(r)) => ("abstained", None, r.blanket.map(|b| b.blanket), r.subsets_tested),
                Err(SctlError::BudgetExceeded { .. }) => ("budget_refused", None, None, 0),
                Err(e) => return Err(e).with_context(|| format!("{} on {}", method.name(), sc.name)),
            }
        }
    };
    let select_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let mut rows = Vec::with_capacity(data.targets.len());
    let kind = cfg.regressor.for_target(data.source.column(&target)?.is_continuous());
    let model = match &features {
        Some(f) => Some(fit(kind, &data.source, &f.to_vec(), &target)?),
        None => None,
    };
    for (i, t) in data.targets.iter().enumerate() {
        let m = model.as_ref().map(|p| evaluate(p, t, &target)).transpose()?;
        rows.push(Row {
            scenario: sc.name.clone(),
            replicate: i + 1,
            method,
            status,
            features: features.as_ref().map(|f| f.to_vec().join(";")).unwrap_or_default(),
            mse: m.map(|m| m.mse),
            sse: m.map(|m| m.sse),
            accuracy: m.and_then(|m| m.accuracy),
            f1: m.and_then(|m| m.f1),
        });
    }
    Ok(JobResult {
        rows,
        record: SelectionRecord {
            scenario: sc.name.clone(),
            method: method.name(),
            status,
            features,
            blanket,
            subsets_tested: subsets,
            predictor: kind.to_string(),
        },
        select_seconds,
        eval_seconds: start.elapsed().as_secs_f64(),
    })
}

fn comparisons(rows: &[Row], scenarios: &[String]) -> Vec<String> {
    let pairs = [
        (Method::Sctl, Method::AllFeatures),
        (Method::Sctl, Method::Ess),
        (Method::Ess, Method::AllFeatures),
    ];
    let mut out = Vec::new();
    for s in scenarios {
        let mse = |m: Method| -> Vec<f64> {
            rows.iter()
                .filter(|r| &r.scenario == s && r.method == m)
                .filter_map(|r| r.mse)
                .collect()
        };
        for (a, b) in pairs {
            let (xa, xb) = (mse(a), mse(b));
            if xa.len() < 2 || xb.len() < 2 {
                continue;
            }
            let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
            let cell = |r: Option<(f64, f64)>| match r {
                Some((s, p)) => (format_f64(s), format_f64(p)),
                None => ("NA".to_string(), "NA".to_string()),
            };
            let (t, pt) = cell(welch_t_test(&xa, &xb).ok());
            let (f, pf) = cell(f_variance_test(&xa, &xb).ok());
            out.push(format!(
                "{s},{},{},{},{},{},{t},{pt},{f},{pf}",
                a.name(),
                b.name(),
                xa.len().min(xb.len()),
                format_f64(mean(&xa)),
                format_f64(mean(&xb))
            ));
        }
    }
    out
}

pub fn run(args: &BenchArgs, seed: Option<u64>, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let suite: Suite = io::read_json(&args.suite)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut manifest = RunManifest::new("bench", argv, &args.suite, seed, &args.out)?;
    manifest.add_input(&args.suite)?;
    let base = args.suite.parent().unwrap_or(Path::new("."));
    let mut scenarios = Vec::new();
    for (i, e) in suite.scenarios.iter().enumerate() {
        let mut sc = resolve(e, base, i, &mut manifest)?;
        if let Some(s) = seed {
            sc.seed = split_seed(s, i as u64);
        }
        scenarios.push(sc);
    }
    let mut names = BTreeMap::new();
    for sc in &scenarios {
        if names.insert(sc.name.clone(), ()).is_some() {
            anyhow::bail!("duplicate scenario name `{}` in suite", sc.name);
        }
    }

    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build()?;
    let (datasets, results) = pool.install(|| -> Result<_> {
        let datasets: Vec<(ScenarioData, f64)> = scenarios
            .par_iter()
            .map(|sc| {
                let t = Instant::now();
                let d = generate_scenario(sc).with_context(|| format!("scenario {}", sc.name))?;
                Ok((d, t.elapsed().as_secs_f64()))
            })
            .collect::<Result<_>>()?;
        let jobs: Vec<(usize, Method)> = (0..scenarios.len())
            .flat_map(|i| suite.methods.iter().map(move |m| (i, *m)))
            .collect();
        let results: Vec<JobResult> = jobs
            .par_iter()
            .map(|(i, m)| run_job(&scenarios[*i], &datasets[*i].0, *m, &suite))
            .collect::<Result<_>>()?;
        Ok((datasets, results))
    })?;

    let mut rows: Vec<Row> = results.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    rows.sort_by(|a, b| {
        (a.scenario.as_str(), a.method, a.replicate).cmp(&(b.scenario.as_str(), b.method, b.replicate))
    });
    let mut results_csv = format!("{RESULTS_HEADER}\n");
    for r in &rows {
        results_csv.push_str(&r.csv());
        results_csv.push('\n');
    }
    manifest.write_output("results.csv", &results_csv)?;

    let scenario_names: Vec<String> = names.keys().cloned().collect();
    let comps = comparisons(&rows, &scenario_names);
    let mut comp_csv = format!("{COMPARISON_HEADER}\n");
    for c in &comps {
        comp_csv.push_str(c);
        comp_csv.push('\n');
    }
    manifest.write_output("comparisons.csv", &comp_csv)?;

    let mut records: Vec<&SelectionRecord> = results.iter().map(|r| &r.record).collect();
    records.sort_by(|a, b| (a.scenario.as_str(), a.method).cmp(&(b.scenario.as_str(), b.method)));
    let mut sel = String::new();
    for r in records {
        sel.push_str(&serde_json::to_string(r)?);
        sel.push('\n');
    }
    manifest.write_output("selections.jsonl", sel)?;

    let mut timed: Vec<&JobResult> = results.iter().collect();
    timed.sort_by(|a, b| {
        (a.record.scenario.as_str(), a.record.method).cmp(&(b.record.scenario.as_str(), b.record.method))
    });
    let mut timings = format!("{TIMINGS_HEADER}\n");
    for r in &timed {
        writeln!(
            timings,
            "{},{},{},{:.6},{:.6}",
            r.record.scenario, r.record.method, r.record.status, r.select_seconds, r.eval_seconds
        )?;
    }
    manifest.write_nondeterministic("timings.csv", &timings)?;

    let report = render_report(&suite, &scenarios, &datasets, &rows, &comps, &timed);
    manifest.write_nondeterministic("report.md", report)?;
    manifest.wall_seconds = start.elapsed().as_secs_f64();
    manifest.save()?;
    println!(
        "{} rows for {} scenarios written to {}",
        rows.len(),
        scenarios.len(),
        args.out.display()
    );
    Ok(())
}

fn render_report(
    suite: &Suite,
    scenarios: &[Scenario],
    datasets: &[(ScenarioData, f64)],
    rows: &[Row],
    comps: &[String],
    timed: &[&JobResult],
) -> String {
    let mut s = String::new();
    let title = if suite.name.is_empty() {
        "benchmark"
    } else {
        &suite.name
    };
    let _ = writeln!(s, "# {title}\n");
    let _ = writeln!(
        s,
        "alpha {} · blanket algorithm {} · predictor {} · ESS cap {}\n",
        suite.alpha,
        suite.mb_algorithm.unwrap_or(MbAlgorithm::Iamb),
        suite.predictor.as_deref().unwrap_or("knn5"),
        suite.ess_cap
    );
    let _ = writeln!(s, "## Target-domain MSE\n");
    let _ = writeln!(s, "| scenario | method | status | features | replicates | mean MSE |");
    let _ = writeln!(s, "|---|---|---|---|---|---|");
    for sc in scenarios {
        for m in &suite.methods {
            let rs: Vec<&Row> = rows
                .iter()
                .filter(|r| r.scenario == sc.name && r.method == *m)
                .collect();
            let Some(first) = rs.first() else { continue };
            let mses: Vec<f64> = rs.iter().filter_map(|r| r.mse).collect();
            let mean = if mses.is_empty() {
                "—".to_string()
            } else {
                format!("{:.4}", mses.iter().sum::<f64>() / mses.len() as f64)
            };
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {mean} |",
                sc.name,
                m.name(),
                first.status,
                if first.features.is_empty() {
                    "∅".into()
                } else {
                    first.features.replace(';', ", ")
                },
                rs.len()
            );
        }
    }
    if !comps.is_empty() {
        let _ = writeln!(s, "\n## Pairwise tests on replicate MSE\n");
        let _ = writeln!(s, "| scenario | a | b | n | mean a | mean b | Welch p | F-test p |");
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
        for c in comps {
            let f: Vec<&str> = c.split(',').collect();
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} | {} |",
                f[0], f[1], f[2], f[3], f[4], f[5], f[7], f[9]
            );
        }
    }
    let _ = writeln!(s, "\n## Wall time (seconds)\n");
    let _ = writeln!(s, "| scenario | method | status | selection | evaluation |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for r in timed {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {:.3} | {:.3} |",
            r.record.scenario, r.record.method, r.record.status, r.select_seconds, r.eval_seconds
        );
    }
    let _ = writeln!(s, "\nData generation:");
    for (sc, (_, secs)) in scenarios.iter().zip(datasets) {
        let _ = writeln!(s, "- {}: {:.3} s", sc.name, secs);
    }
    s
}
