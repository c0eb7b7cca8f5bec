//! Markov-blanket discovery: GSMB and the IAMB family.
//!
//! All algorithms take any [`CiTest`], so they run equally against data or
//! against a known graph. Each run records a trace of admissions and removals
//! that replays to the returned blanket.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admg::VertexSet;
use crate::citest::{CiError, CiTest};

#[derive(Debug, Error)]
pub enum MbError {
    #[error(transparent)]
    Ci(#[from] CiError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, MbError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MbAlgorithm {
    Gsmb,
    Iamb,
    InterIamb,
    FastIamb,
    FdrIamb,
}

impl MbAlgorithm {
    pub const ALL: [MbAlgorithm; 5] = [
        MbAlgorithm::Gsmb,
        MbAlgorithm::Iamb,
        MbAlgorithm::InterIamb,
        MbAlgorithm::FastIamb,
        MbAlgorithm::FdrIamb,
    ];
}

impl fmt::Display for MbAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MbAlgorithm::Gsmb => "gsmb",
            MbAlgorithm::Iamb => "iamb",
            MbAlgorithm::InterIamb => "inter_iamb",
            MbAlgorithm::FastIamb => "fast_iamb",
            MbAlgorithm::FdrIamb => "fdr_iamb",
        };
        f.write_str(s)
    }
}

impl FromStr for MbAlgorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-'))
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "gs" | "gsmb" => Ok(MbAlgorithm::Gsmb),
            "iamb" => Ok(MbAlgorithm::Iamb),
            "interiamb" | "iiamb" => Ok(MbAlgorithm::InterIamb),
            "fastiamb" => Ok(MbAlgorithm::FastIamb),
            "fdriamb" | "iambfdr" => Ok(MbAlgorithm::FdrIamb),
            _ => Err(format!(
                "unknown blanket algorithm `{s}` (expected gsmb, iamb, inter_iamb, fast_iamb or fdr_iamb)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MbOptions {
    pub alpha: f64,
    /// Tests whose conditioning set would exceed this size are skipped and
    /// treated as independent.
    pub max_conditioning: Option<usize>,
}

impl Default for MbOptions {
    fn default() -> Self {
        MbOptions {
            alpha: 0.05,
            max_conditioning: None,
        }
    }
}

/// Admissions per pass in fast-IAMB.
pub const FAST_IAMB_BATCH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Grow,
    Shrink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Admitted,
    Removed,
    /// Conditioning set over the configured limit; treated as independent.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub phase: Phase,
    pub candidate: String,
    pub p_value: f64,
    pub action: Action,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let phase = match self.phase {
            Phase::Grow => "grow",
            Phase::Shrink => "shrink",
        };
        let action = match self.action {
            Action::Admitted => "admitted",
            Action::Removed => "removed",
            Action::Skipped => "skipped",
        };
        write!(f, "{phase} {} p={:.4} {action}", self.candidate, self.p_value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbResult {
    pub blanket: VertexSet,
    pub test_count: usize,
    pub trace: Vec<TraceEntry>,
}

impl MbResult {
    /// Rebuilds the blanket from the trace alone.
    pub fn replay(&self) -> VertexSet {
        let mut s = VertexSet::new();
        for e in &self.trace {
            match e.action {
                Action::Admitted => {
                    s.insert(e.candidate.clone());
                }
                Action::Removed => {
                    s.remove(&e.candidate);
                }
                Action::Skipped => {}
            }
        }
        s
    }

    /// One line per trace entry, e.g. `grow X p=0.0031 admitted`.
    pub fn trace_text(&self) -> String {
        self.trace.iter().map(|e| format!("{e}\n")).collect()
    }
}

pub fn discover(
    algorithm: MbAlgorithm,
    ci: &dyn CiTest,
    vars: &[String],
    target: &str,
    opts: &MbOptions,
) -> Result<MbResult> {
    let mut search = Search::new(ci, vars, target, opts)?;
    match algorithm {
        MbAlgorithm::Gsmb => search.run_gsmb()?,
        MbAlgorithm::Iamb => search.run_iamb()?,
        MbAlgorithm::InterIamb => search.run_inter_iamb()?,
        MbAlgorithm::FastIamb => search.run_fast_iamb()?,
        MbAlgorithm::FdrIamb => search.run_fdr_iamb()?,
    }
    Ok(search.finish())
}

pub fn gsmb(ci: &dyn CiTest, vars: &[String], target: &str, opts: &MbOptions) -> Result<MbResult> {
    discover(MbAlgorithm::Gsmb, ci, vars, target, opts)
}

pub fn iamb(ci: &dyn CiTest, vars: &[String], target: &str, opts: &MbOptions) -> Result<MbResult> {
    discover(MbAlgorithm::Iamb, ci, vars, target, opts)
}

pub fn inter_iamb(ci: &dyn CiTest, vars: &[String], target: &str, opts: &MbOptions) -> Result<MbResult> {
    discover(MbAlgorithm::InterIamb, ci, vars, target, opts)
}

pub fn fast_iamb(ci: &dyn CiTest, vars: &[String], target: &str, opts: &MbOptions) -> Result<MbResult> {
    discover(MbAlgorithm::FastIamb, ci, vars, target, opts)
}

pub fn fdr_iamb(ci: &dyn CiTest, vars: &[String], target: &str, opts: &MbOptions) -> Result<MbResult> {
    discover(MbAlgorithm::FdrIamb, ci, vars, target, opts)
}

/// Benjamini-Hochberg step-up: number of hypotheses rejected at level `q`.
pub fn benjamini_hochberg_rejections(p_values: &[f64], q: f64) -> usize {
    let mut sorted = p_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .filter(|(i, &p)| p <= (*i as f64 + 1.0) / m * q)
        .map(|(i, _)| i + 1)
        .max()
        .unwrap_or(0)
}

enum Probe {
    Tested(f64),
    Skipped,
}

struct Search<'a> {
    ci: &'a dyn CiTest,
    candidates: Vec<String>,
    target: &'a str,
    opts: &'a MbOptions,
    current: VertexSet,
    tests: usize,
    trace: Vec<TraceEntry>,
}

impl<'a> Search<'a> {
    fn new(ci: &'a dyn CiTest, vars: &[String], target: &'a str, opts: &'a MbOptions) -> Result<Self> {
        if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
            return Err(MbError::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {}",
                opts.alpha
            )));
        }
        if !vars.iter().any(|v| v == target) {
            return Err(MbError::InvalidArgument(format!(
                "target `{target}` is not among the variables"
            )));
        }
        let mut candidates: Vec<String> = vars.iter().filter(|v| *v != target).cloned().collect();
        candidates.sort();
        candidates.dedup();
        Ok(Search {
            ci,
            candidates,
            target,
            opts,
            current: VertexSet::new(),
            tests: 0,
            trace: Vec::new(),
        })
    }

    fn finish(self) -> MbResult {
        MbResult {
            blanket: self.current,
            test_count: self.tests,
            trace: self.trace,
        }
    }

    fn probe(&self, x: &str, cond: &VertexSet) -> std::result::Result<Probe, CiError> {
        if self.opts.max_conditioning.is_some_and(|m| cond.len() > m) {
            return Ok(Probe::Skipped);
        }
        Ok(Probe::Tested(self.ci.test(x, self.target, cond)?.p_value))
    }

    /// p-value of `x ⊥ target | cond`; skipped tests count as independent.
    fn p_value(&mut self, phase: Phase, x: &str, cond: &VertexSet) -> Result<f64> {
        self.tests += 1;
        match self.probe(x, cond)? {
            Probe::Tested(p) => Ok(p),
            Probe::Skipped => {
                self.log(phase, x, 1.0, Action::Skipped);
                Ok(1.0)
            }
        }
    }

    /// p-values for every remaining candidate given the current set, in
    /// lexicographic candidate order.
    fn grow_pass(&mut self) -> Result<Vec<(String, f64)>> {
        let remaining: Vec<String> = self
            .candidates
            .iter()
            .filter(|c| !self.current.contains(c))
            .cloned()
            .collect();
        let cond = self.current.clone();
        let probes: Vec<std::result::Result<Probe, CiError>> =
            remaining.par_iter().map(|c| self.probe(c, &cond)).collect();
        let mut out = Vec::with_capacity(remaining.len());
        for (c, probe) in remaining.into_iter().zip(probes) {
            self.tests += 1;
            let p = match probe? {
                Probe::Tested(p) => p,
                Probe::Skipped => {
                    self.log(Phase::Grow, &c, 1.0, Action::Skipped);
                    1.0
                }
            };
            out.push((c, p));
        }
        Ok(out)
    }

    fn log(&mut self, phase: Phase, candidate: &str, p_value: f64, action: Action) {
        self.trace.push(TraceEntry {
            phase,
            candidate: candidate.to_string(),
            p_value,
            action,
        });
    }

    fn admit(&mut self, x: &str, p: f64) {
        self.current.insert(x.to_string());
        self.log(Phase::Grow, x, p, Action::Admitted);
    }

    /// Removes, one at a time in lexicographic scan order, members that are
    /// independent of the target given the rest. Returns whether anything was removed.
    fn shrink(&mut self) -> Result<bool> {
        let mut any = false;
        loop {
            let mut removed = None;
            for x in self.current.to_vec() {
                let mut rest = self.current.clone();
                rest.remove(&x);
                let p = self.p_value(Phase::Shrink, &x, &rest)?;
                if p > self.opts.alpha {
                    removed = Some((x, p));
                    break;
                }
            }
            match removed {
                Some((x, p)) => {
                    self.current.remove(&x);
                    self.log(Phase::Shrink, &x, p, Action::Removed);
                    any = true;
                }
                None => return Ok(any),
            }
        }
    }

    fn run_gsmb(&mut self) -> Result<()> {
        loop {
            let mut admitted = false;
            for x in self.candidates.clone() {
                if self.current.contains(&x) {
                    continue;
                }
                let cond = self.current.clone();
                let p = self.p_value(Phase::Grow, &x, &cond)?;
                if p <= self.opts.alpha {
                    self.admit(&x, p);
                    admitted = true;
                }
            }
            if !admitted {
                break;
            }
        }
        self.shrink()?;
        Ok(())
    }

    /// Most strongly associated remaining candidate: smallest p, then name.
    fn strongest(pass: &[(String, f64)]) -> Option<(String, f64)> {
        pass.iter()
            .fold(None::<&(String, f64)>, |best, cur| match best {
                Some(b) if b.1 <= cur.1 => Some(b),
                _ => Some(cur),
            })
            .cloned()
    }

    fn run_iamb(&mut self) -> Result<()> {
        loop {
            let pass = self.grow_pass()?;
            match Self::strongest(&pass) {
                Some((x, p)) if p <= self.opts.alpha => self.admit(&x, p),
                _ => break,
            }
        }
        self.shrink()?;
        Ok(())
    }

    fn run_inter_iamb(&mut self) -> Result<()> {
        let mut seen = HashSet::new();
        loop {
            let pass = self.grow_pass()?;
            match Self::strongest(&pass) {
                Some((x, p)) if p <= self.opts.alpha => {
                    self.admit(&x, p);
                    self.shrink()?;
                    if !seen.insert(self.current.clone()) {
                        break;
                    }
                }
                _ => break,
            }
        }
        self.shrink()?;
        Ok(())
    }

    fn run_fast_iamb(&mut self) -> Result<()> {
        let mut seen = HashSet::new();
        loop {
            let mut dependent: Vec<(String, f64)> = self
                .grow_pass()?
                .into_iter()
                .filter(|(_, p)| *p <= self.opts.alpha)
                .collect();
            if dependent.is_empty() {
                break;
            }
            dependent.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
            for (x, p) in dependent.into_iter().take(FAST_IAMB_BATCH) {
                self.admit(&x, p);
            }
            self.shrink()?;
            if !seen.insert(self.current.clone()) {
                break;
            }
        }
        self.shrink()?;
        Ok(())
    }

    fn run_fdr_iamb(&mut self) -> Result<()> {
        loop {
            let pass = self.grow_pass()?;
            let ps: Vec<f64> = pass.iter().map(|(_, p)| *p).collect();
            if benjamini_hochberg_rejections(&ps, self.opts.alpha) == 0 {
                break;
            }
            match Self::strongest(&pass) {
                Some((x, p)) => self.admit(&x, p),
                None => break,
            }
        }
        self.shrink()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admg::Admg;
    use crate::citest::OracleCi;
    use crate::fixtures::{remark_graph, smallg_graph};
    use crate::vset;

    fn vars(g: &Admg) -> Vec<String> {
        g.vertices().to_vec()
    }

    #[test]
    fn oracle_runs_on_reference_graphs() {
        let remark = remark_graph();
        let small = smallg_graph();
        for algo in MbAlgorithm::ALL {
            let r = discover(
                algo,
                &OracleCi::new(&remark),
                &vars(&remark),
                "T",
                &MbOptions::default(),
            )
            .unwrap();
            assert_eq!(r.blanket, vset!["C1", "X", "Y"], "{algo} on remark graph");
            let r = discover(algo, &OracleCi::new(&small), &vars(&small), "T", &MbOptions::default()).unwrap();
            assert_eq!(r.blanket, vset!["C1", "P", "X", "Y"], "{algo} on smallg");
            assert_eq!(r.replay(), r.blanket);
            assert!(r.test_count >= r.trace.len());
        }
    }

    #[test]
    fn isolated_target_and_lone_variable() {
        let g = Admg::builder().node("T").directed("A", "B").build().unwrap();
        let only_t = vec!["T".to_string()];
        for algo in MbAlgorithm::ALL {
            let r = discover(algo, &OracleCi::new(&g), &vars(&g), "T", &MbOptions::default()).unwrap();
            assert!(r.blanket.is_empty());
            let r = discover(algo, &OracleCi::new(&g), &only_t, "T", &MbOptions::default()).unwrap();
            assert!(r.blanket.is_empty());
            assert_eq!(r.test_count, 0);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = remark_graph();
        let ci = OracleCi::new(&g);
        let bad_alpha = MbOptions {
            alpha: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            iamb(&ci, &vars(&g), "T", &bad_alpha),
            Err(MbError::InvalidArgument(_))
        ));
        assert!(matches!(
            iamb(&ci, &["X".to_string()], "T", &MbOptions::default()),
            Err(MbError::InvalidArgument(_))
        ));
    }

    #[test]
    fn conditioning_limit_skips_tests() {
        let g = smallg_graph();
        let opts = MbOptions {
            alpha: 0.05,
            max_conditioning: Some(0),
        };
        let r = iamb(&OracleCi::new(&g), &vars(&g), "T", &opts).unwrap();
        assert!(r.trace.iter().any(|e| e.action == Action::Skipped));
        assert_eq!(r.replay(), r.blanket);
    }

    #[test]
    fn trace_lines() {
        let e = TraceEntry {
            phase: Phase::Grow,
            candidate: "X".into(),
            p_value: 0.0031,
            action: Action::Admitted,
        };
        assert_eq!(e.to_string(), "grow X p=0.0031 admitted");
    }

    #[test]
    fn bh_reduces_to_threshold_on_binary_p_values() {
        assert_eq!(benjamini_hochberg_rejections(&[1.0, 0.0, 1.0], 0.05), 1);
        assert_eq!(benjamini_hochberg_rejections(&[1.0, 1.0], 0.05), 0);
        assert_eq!(benjamini_hochberg_rejections(&[], 0.05), 0);
        assert_eq!(benjamini_hochberg_rejections(&[0.01, 0.04, 0.03, 0.5], 0.05), 1);
        assert_eq!(benjamini_hochberg_rejections(&[0.01, 0.03, 0.02, 0.5], 0.05), 3);
    }

    #[test]
    fn algorithm_names_parse() {
        for algo in MbAlgorithm::ALL {
            assert_eq!(algo.to_string().parse::<MbAlgorithm>().unwrap(), algo);
        }
        assert_eq!("interIAMB".parse::<MbAlgorithm>().unwrap(), MbAlgorithm::InterIamb);
        assert!("mmmb".parse::<MbAlgorithm>().is_err());
    }
}
