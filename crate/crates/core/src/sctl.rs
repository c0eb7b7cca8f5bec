//! Separating-set search.
//!
//! [`sctl`] discovers the Markov blanket of the target and tests only subsets
//! of it; [`ess`] tests every subset of the non-context variables and serves
//! as the exhaustive baseline. A subset `S` is accepted when
//! `p(C ⊥ T | S) > alpha` for every context `C`; accepted sets are ranked by
//! cross-validated source-domain error.

use std::cmp::Ordering;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admg::{Admg, VertexSet};
use crate::citest::{CiError, CiTest, DataCi, FisherZ, GSquare, OracleCi};
use crate::dataset::{DataError, Dataset};
use crate::mb::{self, MbAlgorithm, MbError, MbOptions, MbResult};
use crate::predict::{self, PredictError, PredictorKind};

pub const DEFAULT_ESS_CAP: usize = 20;
pub const DEFAULT_CV_FOLDS: usize = 5;
/// Source errors within this relative distance of the best count as ties.
pub const RANK_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SctlError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("exhaustive search refused: {variables} candidate variables exceed the budget of {cap}")]
    BudgetExceeded { variables: usize, cap: usize },
    #[error(transparent)]
    Ci(#[from] CiError),
    #[error(transparent)]
    Mb(#[from] MbError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Predict(#[from] PredictError),
}

pub type Result<T> = std::result::Result<T, SctlError>;

/// Which conditional-independence test to run.
#[derive(Debug, Clone)]
pub enum CiMethod {
    /// Fisher-z for continuous pairs, G² for discrete pairs.
    Auto,
    FisherZ,
    GSquare,
    /// Answers from m-separation in a known graph; the data is ignored.
    Oracle(Admg),
}

impl CiMethod {
    pub fn bind<'a>(&'a self, data: &'a Dataset) -> Box<dyn CiTest + 'a> {
        match self {
            CiMethod::Auto => Box::new(DataCi::new(data)),
            CiMethod::FisherZ => Box::new(FisherZ::new(data)),
            CiMethod::GSquare => Box::new(GSquare::new(data)),
            CiMethod::Oracle(g) => Box::new(OracleCi::new(g)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SctlConfig {
    pub alpha: f64,
    pub mb_algorithm: MbAlgorithm,
    pub regressor: PredictorKind,
    pub max_subset_size: Option<usize>,
    pub context_columns: VertexSet,
    pub target_column: String,
    pub max_conditioning: Option<usize>,
    pub cv_folds: usize,
    pub fold_seed: u64,
    pub ess_cap: usize,
}

impl SctlConfig {
    pub fn new(target: impl Into<String>, contexts: VertexSet) -> Self {
        SctlConfig {
            alpha: 0.05,
            mb_algorithm: MbAlgorithm::Iamb,
            regressor: PredictorKind::default(),
            max_subset_size: None,
            context_columns: contexts,
            target_column: target.into(),
            max_conditioning: None,
            cv_folds: DEFAULT_CV_FOLDS,
            fold_seed: 0,
            ess_cap: DEFAULT_ESS_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SctlError::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.context_columns.contains(&self.target_column) {
            return Err(SctlError::Config(format!(
                "target `{}` is also listed as a context",
                self.target_column
            )));
        }
        if self.cv_folds < 2 {
            return Err(SctlError::Config("cross-validation needs at least 2 folds".into()));
        }
        Ok(())
    }

    fn mb_options(&self) -> MbOptions {
        MbOptions {
            alpha: self.alpha,
            max_conditioning: self.max_conditioning,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatingSet {
    pub features: VertexSet,
    /// Minimum over contexts of `p(C ⊥ T | features)`.
    pub min_context_p: f64,
    /// Cross-validated source-domain MSE, or error rate for a discrete target.
    pub source_error: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SearchReport {
    /// Blanket discovery result; `None` for the exhaustive search.
    pub blanket: Option<MbResult>,
    /// The blanket held no context and was returned without subset search.
    pub shortcut: bool,
    pub subsets_tested: usize,
    pub ci_tests: usize,
    /// Subsets above `max_subset_size` were not enumerated.
    pub truncated: bool,
    /// Source and target rows were pooled for the independence tests.
    pub pooled: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Selection {
    /// Sets tied with the lowest source error, smallest and then
    /// lexicographically first leading.
    pub best: Vec<SeparatingSet>,
    /// Every accepted set in rank order; starts with `best`.
    pub ranked: Vec<SeparatingSet>,
    pub report: SearchReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Outcome {
    Selected(Selection),
    /// No candidate subset separates the target from the contexts.
    Abstained(SearchReport),
}

impl Outcome {
    pub fn selection(&self) -> Option<&Selection> {
        match self {
            Outcome::Selected(s) => Some(s),
            Outcome::Abstained(_) => None,
        }
    }

    pub fn is_abstained(&self) -> bool {
        matches!(self, Outcome::Abstained(_))
    }

    pub fn report(&self) -> &SearchReport {
        match self {
            Outcome::Selected(s) => &s.report,
            Outcome::Abstained(r) => r,
        }
    }

    /// Accepted feature sets in rank order (empty on abstention).
    pub fn accepted(&self) -> Vec<VertexSet> {
        self.selection()
            .map(|s| s.ranked.iter().map(|x| x.features.clone()).collect())
            .unwrap_or_default()
    }
}

/// One JSON object per line: `{"features":[…],"min_context_p":…,"source_error":…}`.
pub fn to_json_lines(sets: &[SeparatingSet]) -> String {
    sets.iter()
        .map(|s| serde_json::to_string(s).expect("plain data serializes") + "\n")
        .collect()
}

/// `min over contexts of p(C ⊥ target | subset)`, or 1 with no contexts.
pub fn min_context_p(ci: &dyn CiTest, contexts: &VertexSet, target: &str, subset: &VertexSet) -> Result<f64> {
    let mut min = 1.0f64;
    for c in contexts.iter() {
        min = min.min(ci.test(c, target, subset)?.p_value);
    }
    Ok(min)
}

/// Algorithm: blanket, shortcut when it holds no context, otherwise subsets
/// of the blanket without the contexts.
pub fn sctl(source: &Dataset, target_features: Option<&Dataset>, cfg: &SctlConfig, ci: &CiMethod) -> Result<Outcome> {
    cfg.validate()?;
    let mut report = SearchReport::default();
    let analysis = analysis_data(source, target_features, cfg, &mut report)?;
    let test = ci.bind(&analysis);
    let vars = analysis.names();
    let blanket = mb::discover(
        cfg.mb_algorithm,
        test.as_ref(),
        &vars,
        &cfg.target_column,
        &cfg.mb_options(),
    )?;
    report.ci_tests += blanket.test_count;
    let mb_set = blanket.blanket.clone();
    report.blanket = Some(blanket);

    if mb_set.is_disjoint(&cfg.context_columns) {
        let p = min_context_p(test.as_ref(), &cfg.context_columns, &cfg.target_column, &mb_set)?;
        report.ci_tests += cfg.context_columns.len();
        if p > cfg.alpha {
            report.shortcut = true;
            report.subsets_tested = 1;
            let error = source_error(source, &mb_set, cfg)?;
            let set = SeparatingSet {
                features: mb_set,
                min_context_p: p,
                source_error: error,
            };
            return Ok(Outcome::Selected(Selection {
                best: vec![set.clone()],
                ranked: vec![set],
                report,
            }));
        }
        let msg = format!("blanket holds no context but min context p = {p:.4} <= alpha; searching its subsets");
        warn!("{msg}");
        report.warnings.push(msg);
    }
    let candidates = mb_set.difference(&cfg.context_columns).to_vec();
    search_subsets(source, test.as_ref(), &candidates, cfg, report)
}

/// Exhaustive baseline over all non-context, non-target variables.
pub fn ess(source: &Dataset, target_features: Option<&Dataset>, cfg: &SctlConfig, ci: &CiMethod) -> Result<Outcome> {
    cfg.validate()?;
    let mut report = SearchReport::default();
    let mut candidates = source.names();
    candidates.retain(|v| v != &cfg.target_column && !cfg.context_columns.contains(v));
    candidates.sort();
    if candidates.len() > cfg.ess_cap {
        return Err(SctlError::BudgetExceeded {
            variables: candidates.len(),
            cap: cfg.ess_cap,
        });
    }
    let analysis = analysis_data(source, target_features, cfg, &mut report)?;
    let test = ci.bind(&analysis);
    search_subsets(source, test.as_ref(), &candidates, cfg, report)
}

fn analysis_data(
    source: &Dataset,
    target_features: Option<&Dataset>,
    cfg: &SctlConfig,
    report: &mut SearchReport,
) -> Result<Dataset> {
    source.column(&cfg.target_column)?;
    for c in cfg.context_columns.iter() {
        source.column(c)?;
    }
    let Some(target) = target_features else {
        return Ok(source.clone());
    };
    for c in cfg.context_columns.iter() {
        target.column(c)?;
    }
    if target.has_column(&cfg.target_column) {
        report.pooled = true;
        Ok(source.stack(target, &source.names())?)
    } else {
        let msg = format!(
            "target domain has no `{}` column; independence tests use source rows only",
            cfg.target_column
        );
        warn!("{msg}");
        report.warnings.push(msg);
        Ok(source.clone())
    }
}

/// All subsets of `items` up to `max` elements, by size and then
/// lexicographically (items are sorted).
pub fn subsets_by_size(items: &[String], max: Option<usize>) -> Vec<Vec<String>> {
    let top = max.unwrap_or(items.len()).min(items.len());
    let mut out = Vec::new();
    for k in 0..=top {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(idx.iter().map(|&i| items[i].clone()).collect());
            // advance to the next k-combination in lexicographic order
            let Some(i) = (0..k).rev().find(|&i| idx[i] < items.len() - k + i) else {
                break;
            };
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

fn search_subsets(
    source: &Dataset,
    test: &dyn CiTest,
    candidates: &[String],
    cfg: &SctlConfig,
    mut report: SearchReport,
) -> Result<Outcome> {
    let subsets = subsets_by_size(candidates, cfg.max_subset_size);
    if cfg.max_subset_size.is_some_and(|m| m < candidates.len()) {
        report.truncated = true;
        let msg = format!(
            "{} candidates exceed max_subset_size {}; larger subsets skipped",
            candidates.len(),
            cfg.max_subset_size.unwrap()
        );
        warn!("{msg}");
        report.warnings.push(msg);
    }
    report.subsets_tested = subsets.len();
    report.ci_tests += subsets.len() * cfg.context_columns.len();
    let scored: Vec<(VertexSet, f64)> = subsets
        .into_par_iter()
        .map(|s| {
            let set: VertexSet = s.into_iter().collect();
            let p = min_context_p(test, &cfg.context_columns, &cfg.target_column, &set)?;
            Ok((set, p))
        })
        .collect::<Result<_>>()?;
    let accepted: Vec<(VertexSet, f64)> = scored.into_iter().filter(|(_, p)| *p > cfg.alpha).collect();
    if accepted.is_empty() {
        return Ok(Outcome::Abstained(report));
    }
    let sets: Vec<SeparatingSet> = accepted
        .into_par_iter()
        .map(|(features, p)| {
            let e = source_error(source, &features, cfg)?;
            Ok(SeparatingSet {
                features,
                min_context_p: p,
                source_error: e,
            })
        })
        .collect::<Result<_>>()?;
    let (best, ranked) = rank(sets);
    Ok(Outcome::Selected(Selection { best, ranked, report }))
}

fn by_size_then_names(a: &SeparatingSet, b: &SeparatingSet) -> Ordering {
    a.features
        .len()
        .cmp(&b.features.len())
        .then_with(|| a.features.to_vec().cmp(&b.features.to_vec()))
}

/// Tied-with-best group first (size, then names), the rest by error.
pub fn rank(mut sets: Vec<SeparatingSet>) -> (Vec<SeparatingSet>, Vec<SeparatingSet>) {
    let best = sets.iter().map(|s| s.source_error).fold(f64::INFINITY, f64::min);
    let limit = best + RANK_TOLERANCE * best.abs();
    let (mut tied, mut rest): (Vec<_>, Vec<_>) = sets.drain(..).partition(|s| s.source_error <= limit);
    tied.sort_by(by_size_then_names);
    rest.sort_by(|a, b| {
        a.source_error
            .total_cmp(&b.source_error)
            .then_with(|| by_size_then_names(a, b))
    });
    let group = tied.clone();
    tied.extend(rest);
    (group, tied)
}

/// K-fold cross-validated error of the configured predictor on the source.
pub fn source_error(source: &Dataset, features: &VertexSet, cfg: &SctlConfig) -> Result<f64> {
    let n = source.n_rows();
    let folds = cfg.cv_folds.min(n);
    if folds < 2 {
        return Err(PredictError::InsufficientSample {
            needed: 2,
            available: n,
        }
        .into());
    }
    let continuous = source.column(&cfg.target_column)?.is_continuous();
    let kind = cfg.regressor.for_target(continuous);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.fold_seed));
    let feats = features.to_vec();
    let mut sse = 0.0;
    for f in 0..folds {
        let test_rows: Vec<usize> = order
            .iter()
            .enumerate()
            .filter(|(i, _)| i % folds == f)
            .map(|(_, r)| *r)
            .collect();
        let train_rows: Vec<usize> = order
            .iter()
            .enumerate()
            .filter(|(i, _)| i % folds != f)
            .map(|(_, r)| *r)
            .collect();
        let train = source.take_rows(&train_rows)?;
        let test = source.take_rows(&test_rows)?;
        let model = predict::fit(kind, &train, &feats, &cfg.target_column)?;
        sse += predict::evaluate(&model, &test, &cfg.target_column)?.sse;
    }
    Ok(sse / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasDecomposition {
    pub total: f64,
    pub transfer: f64,
    pub incomplete: f64,
}

/// Splits the bias of a source-fit model over `S` into the domain-shift part
/// and the part lost by restricting to `S`.
pub fn transfer_bias_decomposition(
    t_hat_full_target: f64,
    t_hat_s_source: f64,
    t_hat_s_target: f64,
) -> BiasDecomposition {
    let transfer = t_hat_s_target - t_hat_s_source;
    let incomplete = t_hat_full_target - t_hat_s_target;
    BiasDecomposition {
        total: transfer + incomplete,
        transfer,
        incomplete,
    }
}
