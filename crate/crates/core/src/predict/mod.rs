//! Deterministic predictors and evaluation metrics.
//!
//! kNN models standardize continuous features with statistics from the
//! training data and one-hot encode discrete features. Distance ties are
//! broken by training-row index, so predictions never depend on anything but
//! the data.

mod hypothesis;

use std::fmt;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ColumnValues, DataError, Dataset};
use crate::linalg;

pub use hypothesis::{f_variance_test, welch_t_test};

/// Ridge penalty used when the OLS design is singular.
pub const RIDGE_FALLBACK_LAMBDA: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("insufficient sample: need at least {needed} rows, have {available}")]
    InsufficientSample { needed: usize, available: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, PredictError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PredictorKind {
    KnnRegressor { k: usize },
    Ols,
    KnnClassifier { k: usize },
    Majority,
}

impl PredictorKind {
    pub fn is_regressor(self) -> bool {
        matches!(self, PredictorKind::KnnRegressor { .. } | PredictorKind::Ols)
    }

    /// Same family adapted to the target kind: kNN switches between
    /// regression and classification, OLS and majority pair up.
    pub fn for_target(self, continuous: bool) -> PredictorKind {
        match (self, continuous) {
            (PredictorKind::KnnClassifier { k }, true) => PredictorKind::KnnRegressor { k },
            (PredictorKind::KnnRegressor { k }, false) => PredictorKind::KnnClassifier { k },
            (PredictorKind::Ols, false) => PredictorKind::Majority,
            (PredictorKind::Majority, true) => PredictorKind::Ols,
            (kind, _) => kind,
        }
    }
}

impl Default for PredictorKind {
    fn default() -> Self {
        PredictorKind::KnnRegressor { k: 5 }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictorKind::KnnRegressor { k } => write!(f, "knn{k}"),
            PredictorKind::Ols => write!(f, "ols"),
            PredictorKind::KnnClassifier { k } => write!(f, "knnc{k}"),
            PredictorKind::Majority => write!(f, "majority"),
        }
    }
}

impl FromStr for PredictorKind {
    type Err = String;

    /// Accepts `knn5`, `knnc5`, `ols`, `majority`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        let parse_k = |rest: &str| -> std::result::Result<usize, String> {
            let k: usize = rest.parse().map_err(|_| format!("bad neighbour count in `{s}`"))?;
            if k == 0 {
                return Err("k must be at least 1".into());
            }
            Ok(k)
        };
        match s.as_str() {
            "ols" => Ok(PredictorKind::Ols),
            "majority" => Ok(PredictorKind::Majority),
            _ => {
                if let Some(rest) = s.strip_prefix("knnc") {
                    Ok(PredictorKind::KnnClassifier { k: parse_k(rest)? })
                } else if let Some(rest) = s.strip_prefix("knn") {
                    Ok(PredictorKind::KnnRegressor { k: parse_k(rest)? })
                } else {
                    Err(format!(
                        "unknown predictor `{s}` (expected knnK, knncK, ols or majority)"
                    ))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitOptions {
    pub ridge_fallback: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { ridge_fallback: true }
    }
}

#[derive(Debug, Clone)]
enum FeatureCode {
    Continuous { mean: f64, scale: f64 },
    OneHot { levels: Vec<String> },
}

impl FeatureCode {
    fn width(&self) -> usize {
        match self {
            FeatureCode::Continuous { .. } => 1,
            FeatureCode::OneHot { levels } => levels.len(),
        }
    }
}

#[derive(Debug, Clone)]
struct Encoder {
    features: Vec<String>,
    codes: Vec<FeatureCode>,
}

impl Encoder {
    fn fit(d: &Dataset, features: &[String], standardize: bool) -> Result<Self> {
        let mut codes = Vec::with_capacity(features.len());
        for f in features {
            let col = d.column(f)?;
            codes.push(match &col.values {
                ColumnValues::Continuous(v) => {
                    let n = v.len() as f64;
                    let mean = v.iter().sum::<f64>() / n;
                    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
                    if standardize {
                        let scale = if sd > 0.0 { sd } else { 1.0 };
                        FeatureCode::Continuous { mean, scale }
                    } else {
                        FeatureCode::Continuous { mean: 0.0, scale: 1.0 }
                    }
                }
                ColumnValues::Discrete { levels, .. } => FeatureCode::OneHot { levels: levels.clone() },
            });
        }
        Ok(Encoder {
            features: features.to_vec(),
            codes,
        })
    }

    fn width(&self) -> usize {
        self.codes.iter().map(FeatureCode::width).sum()
    }

    /// Row-major encoded design matrix.
    fn transform(&self, d: &Dataset) -> Result<Vec<f64>> {
        let n = d.n_rows();
        let w = self.width();
        let mut out = vec![0.0; n * w];
        let mut offset = 0;
        for (f, code) in self.features.iter().zip(&self.codes) {
            let col = d.column(f)?;
            match (code, &col.values) {
                (FeatureCode::Continuous { mean, scale }, ColumnValues::Continuous(v)) => {
                    for r in 0..n {
                        out[r * w + offset] = (v[r] - mean) / scale;
                    }
                }
                (FeatureCode::OneHot { levels }, ColumnValues::Discrete { levels: ql, codes }) => {
                    let map: Vec<Option<usize>> = ql.iter().map(|l| levels.iter().position(|t| t == l)).collect();
                    for r in 0..n {
                        if let Some(j) = map[codes[r] as usize] {
                            out[r * w + offset + j] = 1.0;
                        }
                    }
                }
                _ => {
                    return Err(PredictError::InvalidArgument(format!(
                        "feature `{f}` changed kind between fit and predict"
                    )))
                }
            }
            offset += code.width();
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
enum TargetValues {
    Continuous(Vec<f64>),
    Labels { levels: Vec<String>, codes: Vec<u32> },
}

#[derive(Debug, Clone)]
enum Model {
    Knn {
        train: Vec<f64>,
        width: usize,
        k: usize,
        targets: TargetValues,
    },
    Ols {
        coefficients: Vec<f64>,
        intercept: f64,
    },
    Mean(f64),
    Majority {
        levels: Vec<String>,
        label: u32,
    },
}

/// Predictions for a batch of rows.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    Values(Vec<f64>),
    Labels(Vec<String>),
}

/// A fitted, immutable model over a fixed feature list.
#[derive(Debug, Clone)]
pub struct Predictor {
    kind: PredictorKind,
    target: String,
    encoder: Encoder,
    model: Model,
    flags: Vec<String>,
}

pub fn fit(kind: PredictorKind, d: &Dataset, features: &[String], target: &str) -> Result<Predictor> {
    fit_with(kind, d, features, target, FitOptions::default())
}

pub fn fit_with(
    kind: PredictorKind,
    d: &Dataset,
    features: &[String],
    target: &str,
    opts: FitOptions,
) -> Result<Predictor> {
    if features.iter().any(|f| f == target) {
        return Err(PredictError::InvalidArgument(format!(
            "target `{target}` listed as a feature"
        )));
    }
    let tcol = d.column(target)?;
    let targets = match &tcol.values {
        ColumnValues::Continuous(v) => TargetValues::Continuous(v.clone()),
        ColumnValues::Discrete { levels, codes } => TargetValues::Labels {
            levels: levels.clone(),
            codes: codes.clone(),
        },
    };
    match (&targets, kind.is_regressor()) {
        (TargetValues::Labels { .. }, true) => {
            return Err(PredictError::InvalidArgument(format!(
                "{kind} needs a continuous target, `{target}` is discrete"
            )))
        }
        (TargetValues::Continuous(_), false) => {
            return Err(PredictError::InvalidArgument(format!(
                "{kind} needs a discrete target, `{target}` is continuous"
            )))
        }
        _ => {}
    }
    let mut flags = Vec::new();
    let n = d.n_rows();
    if let PredictorKind::KnnRegressor { k } | PredictorKind::KnnClassifier { k } = kind {
        if k == 0 {
            return Err(PredictError::InvalidArgument("k must be at least 1".into()));
        }
        if n < k {
            return Err(PredictError::InsufficientSample {
                needed: k,
                available: n,
            });
        }
    }

    let constant = |targets: &TargetValues| match targets {
        TargetValues::Continuous(v) => Model::Mean(v.iter().sum::<f64>() / v.len() as f64),
        TargetValues::Labels { levels, codes } => Model::Majority {
            levels: levels.clone(),
            label: majority_code(codes, levels.len()),
        },
    };

    let encoder = Encoder::fit(d, features, !matches!(kind, PredictorKind::Ols))?;
    let model = if features.is_empty() || kind == PredictorKind::Majority {
        if features.is_empty() {
            flags.push("empty feature set: constant model".to_string());
        }
        constant(&targets)
    } else {
        match kind {
            PredictorKind::KnnRegressor { k } | PredictorKind::KnnClassifier { k } => Model::Knn {
                train: encoder.transform(d)?,
                width: encoder.width(),
                k,
                targets,
            },
            PredictorKind::Ols => {
                let TargetValues::Continuous(y) = &targets else {
                    unreachable!("checked above")
                };
                fit_ols(&encoder, d, y, opts, &mut flags)?
            }
            PredictorKind::Majority => unreachable!("handled above"),
        }
    };
    for f in &flags {
        warn!("{kind} on `{target}`: {f}");
    }
    Ok(Predictor {
        kind,
        target: target.to_string(),
        encoder,
        model,
        flags,
    })
}

fn majority_code(codes: &[u32], levels: usize) -> u32 {
    let mut counts = vec![0usize; levels];
    for &c in codes {
        counts[c as usize] += 1;
    }
    // first level wins ties
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best as u32
}

/// Least squares on centered columns; the intercept is recovered from the means.
fn fit_ols(encoder: &Encoder, d: &Dataset, y: &[f64], opts: FitOptions, flags: &mut Vec<String>) -> Result<Model> {
    let x = encoder.transform(d)?;
    let n = d.n_rows();
    let w = encoder.width();
    let mut xmean = vec![0.0; w];
    for r in 0..n {
        for j in 0..w {
            xmean[j] += x[r * w + j];
        }
    }
    xmean.iter_mut().for_each(|m| *m /= n as f64);
    let ymean = y.iter().sum::<f64>() / n as f64;
    let mut gram = vec![0.0; w * w];
    let mut rhs = vec![0.0; w];
    let mut row = vec![0.0; w];
    for r in 0..n {
        for j in 0..w {
            row[j] = x[r * w + j] - xmean[j];
        }
        let yc = y[r] - ymean;
        for i in 0..w {
            rhs[i] += row[i] * yc;
            for j in i..w {
                gram[i * w + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..w {
        for j in 0..i {
            gram[i * w + j] = gram[j * w + i];
        }
    }
    let scale = (0..w).map(|i| gram[i * w + i]).fold(0.0f64, f64::max).max(1.0);
    let tol = 1e-12 * scale;
    let coefficients = match linalg::solve(&gram, &rhs, w, tol) {
        Some(b) => b,
        None if opts.ridge_fallback => {
            flags.push(format!(
                "singular design: ridge fallback with lambda={RIDGE_FALLBACK_LAMBDA}"
            ));
            let mut ridge = gram.clone();
            for i in 0..w {
                ridge[i * w + i] += RIDGE_FALLBACK_LAMBDA;
            }
            linalg::solve(&ridge, &rhs, w, 0.0)
                .ok_or_else(|| PredictError::DegenerateData("ridge system singular".into()))?
        }
        None => return Err(PredictError::DegenerateData("singular OLS design".into())),
    };
    let intercept = ymean - coefficients.iter().zip(&xmean).map(|(b, m)| b * m).sum::<f64>();
    Ok(Model::Ols {
        coefficients,
        intercept,
    })
}

impl Predictor {
    pub fn kind(&self) -> PredictorKind {
        self.kind
    }

    pub fn features(&self) -> &[String] {
        &self.encoder.features
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    /// Notes raised while fitting (empty feature set, ridge fallback).
    pub fn flags(&self) -> &[String] {
        &self.flags
    }

    /// OLS coefficients over the encoded features followed by the intercept.
    pub fn ols_coefficients(&self) -> Option<(Vec<f64>, f64)> {
        match &self.model {
            Model::Ols {
                coefficients,
                intercept,
            } => Some((coefficients.clone(), *intercept)),
            _ => None,
        }
    }

    pub fn predict(&self, d: &Dataset) -> Result<Predictions> {
        let n = d.n_rows();
        match &self.model {
            Model::Mean(m) => Ok(Predictions::Values(vec![*m; n])),
            Model::Majority { levels, label } => Ok(Predictions::Labels(vec![levels[*label as usize].clone(); n])),
            Model::Ols {
                coefficients,
                intercept,
            } => {
                let x = self.encoder.transform(d)?;
                let w = coefficients.len();
                Ok(Predictions::Values(
                    (0..n)
                        .map(|r| {
                            intercept
                                + x[r * w..(r + 1) * w]
                                    .iter()
                                    .zip(coefficients)
                                    .map(|(a, b)| a * b)
                                    .sum::<f64>()
                        })
                        .collect(),
                ))
            }
            Model::Knn {
                train,
                width,
                k,
                targets,
            } => {
                let x = self.encoder.transform(d)?;
                let neighbours: Vec<Vec<usize>> = (0..n)
                    .into_par_iter()
                    .map(|r| nearest(train, *width, &x[r * width..(r + 1) * width], *k))
                    .collect();
                Ok(match targets {
                    TargetValues::Continuous(y) => Predictions::Values(
                        neighbours
                            .iter()
                            .map(|nb| nb.iter().map(|&i| y[i]).sum::<f64>() / nb.len() as f64)
                            .collect(),
                    ),
                    TargetValues::Labels { levels, codes } => Predictions::Labels(
                        neighbours
                            .iter()
                            .map(|nb| levels[vote(nb, codes, levels.len()) as usize].clone())
                            .collect(),
                    ),
                })
            }
        }
    }
}

/// Indices of the `k` nearest training rows, closest first; ties go to the lower index.
fn nearest(train: &[f64], width: usize, query: &[f64], k: usize) -> Vec<usize> {
    let rows = if width == 0 { 0 } else { train.len() / width };
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    for i in 0..rows {
        let row = &train[i * width..(i + 1) * width];
        let dist: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.len() == k && dist >= best[k - 1].0 {
            continue;
        }
        let pos = best.partition_point(|&(d, _)| d <= dist);
        best.insert(pos, (dist, i));
        best.truncate(k);
    }
    best.into_iter().map(|(_, i)| i).collect()
}

/// Majority label among neighbours; ties go to the label of the nearer neighbour.
fn vote(neighbours: &[usize], codes: &[u32], levels: usize) -> u32 {
    let mut counts = vec![0usize; levels];
    for &i in neighbours {
        counts[codes[i] as usize] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0);
    neighbours
        .iter()
        .map(|&i| codes[i])
        .find(|&c| counts[c as usize] == top)
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub mse: f64,
    pub sse: f64,
    /// Classification only.
    pub accuracy: Option<f64>,
    /// Classification only: positive-class F1 for two levels, macro-F1 otherwise.
    pub f1: Option<f64>,
    /// Test labels that never occurred in training; counted as errors.
    pub unseen_labels: usize,
}

/// Scores `p` on every row of `d`. For classifiers, `sse` counts
/// misclassifications and `mse` is the error rate.
pub fn evaluate(p: &Predictor, d: &Dataset, target: &str) -> Result<Metrics> {
    let n = d.n_rows();
    let preds = p.predict(d)?;
    let col = d.column(target)?;
    match (preds, &col.values) {
        (Predictions::Values(yhat), ColumnValues::Continuous(y)) => {
            let sse: f64 = y.iter().zip(&yhat).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok(Metrics {
                n,
                mse: sse / n as f64,
                sse,
                accuracy: None,
                f1: None,
                unseen_labels: 0,
            })
        }
        (Predictions::Labels(yhat), ColumnValues::Discrete { levels, codes }) => {
            let truth: Vec<&str> = codes.iter().map(|&c| levels[c as usize].as_str()).collect();
            let train_levels = match &p.model {
                Model::Knn {
                    targets: TargetValues::Labels { levels, .. },
                    ..
                }
                | Model::Majority { levels, .. } => levels.clone(),
                _ => Vec::new(),
            };
            let unseen = truth.iter().filter(|t| !train_levels.iter().any(|l| l == *t)).count();
            if unseen > 0 {
                warn!("{unseen} test labels of `{target}` were not seen in training");
            }
            let wrong = truth.iter().zip(&yhat).filter(|(t, h)| **t != h.as_str()).count();
            let sse = wrong as f64;
            let mse = sse / n as f64;
            Ok(Metrics {
                n,
                mse,
                sse,
                accuracy: Some(1.0 - mse),
                f1: Some(f1_score(&truth, &yhat, &train_levels)),
                unseen_labels: unseen,
            })
        }
        _ => Err(PredictError::InvalidArgument(format!(
            "target `{target}` kind does not match the predictor"
        ))),
    }
}

fn f1_score(truth: &[&str], pred: &[String], train_levels: &[String]) -> f64 {
    let class_f1 = |class: &str| {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fneg = 0usize;
        for (t, p) in truth.iter().zip(pred) {
            match (*t == class, p == class) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fneg += 1,
                _ => {}
            }
        }
        if tp == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
        }
    };
    if train_levels.len() == 2 {
        return class_f1(&train_levels[1]);
    }
    let mut classes: Vec<&str> = train_levels.iter().map(String::as_str).collect();
    for t in truth {
        if !classes.contains(t) {
            classes.push(t);
        }
    }
    let present: Vec<&str> = classes
        .into_iter()
        .filter(|c| truth.contains(c) || pred.iter().any(|p| p == c))
        .collect();
    if present.is_empty() {
        return 0.0;
    }
    present.iter().map(|c| class_f1(c)).sum::<f64>() / present.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Column;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.37 - 2.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        let d = Dataset::new(vec![Column::continuous("x", x), Column::continuous("y", y)]).unwrap();
        let p = fit(PredictorKind::Ols, &d, &strings(&["x"]), "y").unwrap();
        let (b, c) = p.ols_coefficients().unwrap();
        assert!((b[0] - 3.0).abs() < 1e-9 && (c - 1.0).abs() < 1e-9);
        assert!(evaluate(&p, &d, "y").unwrap().mse < 1e-18);
    }

    #[test]
    fn ols_singular_design() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let d = Dataset::new(vec![
            Column::continuous("a", x.clone()),
            Column::continuous("b", x),
            Column::continuous("y", y),
        ])
        .unwrap();
        let feats = strings(&["a", "b"]);
        let p = fit(PredictorKind::Ols, &d, &feats, "y").unwrap();
        assert!(p.flags().iter().any(|f| f.contains("ridge")));
        assert!(evaluate(&p, &d, "y").unwrap().mse < 1e-6);
        assert!(matches!(
            fit_with(
                PredictorKind::Ols,
                &d,
                &feats,
                "y",
                FitOptions { ridge_fallback: false }
            ),
            Err(PredictError::DegenerateData(_))
        ));
    }

    #[test]
    fn one_nn_has_zero_training_error() {
        let d = Dataset::new(vec![
            Column::continuous("x", vec![0.0, 1.0, 2.5, 4.0]),
            Column::continuous("y", vec![3.0, -1.0, 7.0, 0.5]),
        ])
        .unwrap();
        let p = fit(PredictorKind::KnnRegressor { k: 1 }, &d, &strings(&["x"]), "y").unwrap();
        assert_eq!(evaluate(&p, &d, "y").unwrap().sse, 0.0);
        assert!(matches!(
            fit(PredictorKind::KnnRegressor { k: 5 }, &d, &strings(&["x"]), "y"),
            Err(PredictError::InsufficientSample {
                needed: 5,
                available: 4
            })
        ));
    }

    #[test]
    fn knn_ties_go_to_lower_row_index() {
        let d = Dataset::new(vec![
            Column::continuous("x", vec![1.0, -1.0, 1.0, -1.0]),
            Column::continuous("y", vec![10.0, 20.0, 30.0, 40.0]),
        ])
        .unwrap();
        let q = Dataset::new(vec![
            Column::continuous("x", vec![0.0]),
            Column::continuous("y", vec![0.0]),
        ])
        .unwrap();
        let p = fit(PredictorKind::KnnRegressor { k: 1 }, &d, &strings(&["x"]), "y").unwrap();
        assert_eq!(p.predict(&q).unwrap(), Predictions::Values(vec![10.0]));
    }

    #[test]
    fn empty_feature_set_is_a_flagged_constant_model() {
        let d = Dataset::new(vec![Column::continuous("y", vec![1.0, 2.0, 6.0])]).unwrap();
        let p = fit(PredictorKind::KnnRegressor { k: 2 }, &d, &[], "y").unwrap();
        assert!(!p.flags().is_empty());
        assert_eq!(p.predict(&d).unwrap(), Predictions::Values(vec![3.0; 3]));
    }

    #[test]
    fn metrics_examples() {
        let y = vec![1.0, 2.0, 3.0];
        let d = Dataset::new(vec![Column::continuous("x", y.clone()), Column::continuous("y", y)]).unwrap();
        let p = fit(PredictorKind::Ols, &d, &strings(&["x"]), "y").unwrap();
        let m = evaluate(&p, &d, "y").unwrap();
        assert!(m.mse < 1e-20 && m.accuracy.is_none());

        // residuals (1, -1, 2)
        let truth = Dataset::new(vec![Column::continuous("y", vec![1.0, -1.0, 2.0])]).unwrap();
        let zero = Dataset::new(vec![Column::continuous("y", vec![0.0, 0.0, 0.0])]).unwrap();
        let p = fit(PredictorKind::Ols, &zero, &[], "y").unwrap();
        let m = evaluate(&p, &truth, "y").unwrap();
        assert_eq!(m.sse, 6.0);
        assert_eq!(m.mse, 2.0);
    }

    #[test]
    fn classification_metrics() {
        let lv = strings(&["0", "1"]);
        let d = Dataset::new(vec![
            Column::continuous("x", vec![0.0, 0.1, 5.0, 5.1]),
            Column::discrete("y", lv.clone(), vec![0, 0, 1, 1]),
        ])
        .unwrap();
        let p = fit(PredictorKind::KnnClassifier { k: 1 }, &d, &strings(&["x"]), "y").unwrap();
        let m = evaluate(&p, &d, "y").unwrap();
        assert_eq!((m.accuracy, m.f1, m.mse), (Some(1.0), Some(1.0), 0.0));

        let p = fit(PredictorKind::Majority, &d, &[], "y").unwrap();
        let m = evaluate(&p, &d, "y").unwrap();
        assert_eq!(m.accuracy, Some(0.5));
    }

    #[test]
    fn unseen_test_label_is_an_error() {
        let train = Dataset::new(vec![Column::discrete("y", strings(&["a", "b"]), vec![0, 0, 1])]).unwrap();
        let test = Dataset::new(vec![Column::discrete("y", strings(&["a", "c"]), vec![0, 1])]).unwrap();
        let p = fit(PredictorKind::Majority, &train, &[], "y").unwrap();
        let m = evaluate(&p, &test, "y").unwrap();
        assert_eq!(m.unseen_labels, 1);
        assert_eq!(m.sse, 1.0);
    }

    #[test]
    fn kind_names_round_trip() {
        for s in ["knn5", "knnc3", "ols", "majority"] {
            assert_eq!(s.parse::<PredictorKind>().unwrap().to_string(), s);
        }
        assert!("knn0".parse::<PredictorKind>().is_err());
        assert!("forest".parse::<PredictorKind>().is_err());
    }
}
