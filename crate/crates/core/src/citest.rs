//! Conditional-independence tests.
//!
//! Every test answers "is `x` independent of `y` given `s`?" with a p-value;
//! small p-values indicate dependence. Three implementations share the
//! [`CiTest`] trait:
//!
//! - [`FisherZ`]: partial correlation with Fisher's z-transform (continuous data)
//! - [`GSquare`]: the G² likelihood-ratio / mutual-information test (discrete data)
//! - [`OracleCi`]: m-separation in a known graph, p ∈ {0, 1}
//!
//! [`DataCi`] picks Fisher-z or G² from the column kinds and refuses mixed tests.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::admg::{Admg, GraphError, VertexSet};
use crate::dataset::{DataError, Dataset};
use crate::linalg;

/// Partial correlations are clamped to this magnitude so Fisher's z stays finite.
pub const CORRELATION_CLAMP: f64 = 0.999_999;

/// Smallest pivot accepted when inverting a correlation submatrix.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CiError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("insufficient sample: need at least {needed} rows, have {available}")]
    InsufficientSample { needed: usize, available: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, CiError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiResult {
    pub statistic: f64,
    /// χ² degrees of freedom, or the effective sample size for Fisher-z.
    pub dof_or_n: f64,
    pub p_value: f64,
}

pub trait CiTest: Send + Sync {
    fn test(&self, x: &str, y: &str, s: &VertexSet) -> Result<CiResult>;

    fn name(&self) -> &'static str;
}

fn check_arguments(x: &str, y: &str, s: &VertexSet) -> Result<()> {
    if x == y {
        return Err(CiError::InvalidArgument(format!("`{x}` tested against itself")));
    }
    if s.contains(x) || s.contains(y) {
        return Err(CiError::InvalidArgument(
            "tested variables must not be in the conditioning set".into(),
        ));
    }
    Ok(())
}

/// Fisher-z test over a dataset's continuous columns.
///
/// Centered, unit-norm copies of columns and pairwise correlations are cached,
/// so repeated tests over wide datasets only pay for the columns they touch.
pub struct FisherZ<'a> {
    data: &'a Dataset,
    unit: Vec<OnceLock<Option<Vec<f64>>>>,
    corr: RwLock<HashMap<(usize, usize), f64>>,
}

impl<'a> FisherZ<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        FisherZ {
            data,
            unit: (0..data.n_cols()).map(|_| OnceLock::new()).collect(),
            corr: RwLock::new(HashMap::new()),
        }
    }

    fn unit_column(&self, j: usize) -> Result<&[f64]> {
        let name = &self.data.columns()[j].name;
        let cell = self.unit[j].get_or_init(|| {
            let v = self.data.continuous(name).ok()?;
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let centered: Vec<f64> = v.iter().map(|x| x - mean).collect();
            let norm = centered.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                return None;
            }
            Some(centered.into_iter().map(|x| x / norm).collect())
        });
        match cell {
            Some(v) => Ok(v),
            None => {
                // distinguish wrong kind from zero variance
                self.data.continuous(name)?;
                Err(CiError::DegenerateData(format!("column `{name}` has zero variance")))
            }
        }
    }

    fn correlation(&self, a: usize, b: usize) -> Result<f64> {
        if a == b {
            self.unit_column(a)?;
            return Ok(1.0);
        }
        let key = (a.min(b), a.max(b));
        if let Some(&r) = self.corr.read().expect("cache lock").get(&key) {
            return Ok(r);
        }
        let (u, v) = (self.unit_column(a)?, self.unit_column(b)?);
        let r = u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>().clamp(-1.0, 1.0);
        self.corr.write().expect("cache lock").insert(key, r);
        Ok(r)
    }

    /// Sample partial correlation of `x` and `y` given `s`, clamped to
    /// ±[`CORRELATION_CLAMP`].
    pub fn partial_correlation(&self, x: &str, y: &str, s: &VertexSet) -> Result<f64> {
        check_arguments(x, y, s)?;
        let needed = s.len() + 4;
        if self.data.n_rows() < needed {
            return Err(CiError::InsufficientSample {
                needed,
                available: self.data.n_rows(),
            });
        }
        let mut idx = vec![self.data.column_index(x)?, self.data.column_index(y)?];
        for v in s.iter() {
            idx.push(self.data.column_index(v)?);
        }
        let r = if s.is_empty() {
            self.correlation(idx[0], idx[1])?
        } else {
            let k = idx.len();
            let mut m = vec![0.0; k * k];
            for i in 0..k {
                for j in i..k {
                    let c = self.correlation(idx[i], idx[j])?;
                    m[i * k + j] = c;
                    m[j * k + i] = c;
                }
            }
            let p = linalg::invert(&m, k, PIVOT_TOLERANCE).ok_or_else(|| {
                CiError::DegenerateData(format!("correlation matrix of {{{x}, {y}}} ∪ {s} is singular"))
            })?;
            let denom = (p[0] * p[k + 1]).sqrt();
            if !(denom > 0.0) {
                return Err(CiError::DegenerateData("non-positive precision diagonal".into()));
            }
            -p[1] / denom
        };
        Ok(r.clamp(-CORRELATION_CLAMP, CORRELATION_CLAMP))
    }
}

impl CiTest for FisherZ<'_> {
    fn test(&self, x: &str, y: &str, s: &VertexSet) -> Result<CiResult> {
        let r = self.partial_correlation(x, y, s)?;
        Ok(fisher_z_from_r(r, self.data.n_rows(), s.len()))
    }

    fn name(&self) -> &'static str {
        "fisher-z"
    }
}

/// Fisher-z statistic and two-sided normal p-value for a partial correlation
/// `r` from `n` rows with `cond` conditioning variables.
pub fn fisher_z_from_r(r: f64, n: usize, cond: usize) -> CiResult {
    let n_eff = n as f64 - cond as f64 - 3.0;
    let z = 0.5 * ((1.0 + r) / (1.0 - r)).ln();
    let statistic = n_eff.sqrt() * z.abs();
    let p_value = erfc(statistic / std::f64::consts::SQRT_2).clamp(0.0, 1.0);
    CiResult {
        statistic,
        dof_or_n: n_eff,
        p_value,
    }
}

pub fn partial_correlation(d: &Dataset, x: &str, y: &str, s: &VertexSet) -> Result<f64> {
    FisherZ::new(d).partial_correlation(x, y, s)
}

pub fn fisher_z_test(d: &Dataset, x: &str, y: &str, s: &VertexSet) -> Result<CiResult> {
    FisherZ::new(d).test(x, y, s)
}

/// G² test over discrete columns.
pub struct GSquare<'a> {
    data: &'a Dataset,
}

impl<'a> GSquare<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        GSquare { data }
    }

    /// Conditional mutual information `I(x; y | s)` in nats.
    pub fn mutual_information(&self, x: &str, y: &str, s: &VertexSet) -> Result<f64> {
        let table = self.contingency(x, y, s)?;
        Ok(table.g2() / (2.0 * table.total as f64))
    }

    fn contingency(&self, x: &str, y: &str, s: &VertexSet) -> Result<Contingency> {
        check_arguments(x, y, s)?;
        let (lx, cx) = self.data.discrete(x)?;
        let (ly, cy) = self.data.discrete(y)?;
        let mut strata_cols = Vec::with_capacity(s.len());
        for v in s.iter() {
            let (lv, cv) = self.data.discrete(v)?;
            strata_cols.push((lv.len() as u64, cv));
        }
        let (nx, ny) = (lx.len(), ly.len());
        let mut cells: HashMap<u64, Vec<u64>> = HashMap::new();
        for row in 0..self.data.n_rows() {
            let mut key = 0u64;
            for (card, codes) in &strata_cols {
                key = key * card + codes[row] as u64;
            }
            let t = cells.entry(key).or_insert_with(|| vec![0; nx * ny]);
            t[cx[row] as usize * ny + cy[row] as usize] += 1;
        }
        let total: u64 = cells.values().flat_map(|t| t.iter()).sum();
        if total == 0 {
            return Err(CiError::InsufficientSample {
                needed: 1,
                available: 0,
            });
        }
        Ok(Contingency {
            nx,
            ny,
            strata: cells.into_values().collect(),
            total,
        })
    }
}

struct Contingency {
    nx: usize,
    ny: usize,
    /// Nonempty strata only.
    strata: Vec<Vec<u64>>,
    total: u64,
}

impl Contingency {
    fn g2(&self) -> f64 {
        let (nx, ny) = (self.nx, self.ny);
        let mut g2 = 0.0;
        for t in &self.strata {
            let nz: u64 = t.iter().sum();
            let row: Vec<u64> = (0..nx).map(|i| t[i * ny..(i + 1) * ny].iter().sum()).collect();
            let col: Vec<u64> = (0..ny).map(|j| (0..nx).map(|i| t[i * ny + j]).sum()).collect();
            for i in 0..nx {
                for j in 0..ny {
                    let n = t[i * ny + j];
                    if n == 0 {
                        continue;
                    }
                    let ratio = (n as f64 * nz as f64) / (row[i] as f64 * col[j] as f64);
                    g2 += 2.0 * n as f64 * ratio.ln();
                }
            }
        }
        g2.max(0.0)
    }

    /// `(|x|-1)(|y|-1)` per nonempty stratum, at least 1.
    fn dof(&self) -> f64 {
        let per = (self.nx.saturating_sub(1) * self.ny.saturating_sub(1)) as f64;
        (per * self.strata.len() as f64).max(1.0)
    }
}

impl CiTest for GSquare<'_> {
    fn test(&self, x: &str, y: &str, s: &VertexSet) -> Result<CiResult> {
        let table = self.contingency(x, y, s)?;
        let g2 = table.g2();
        let dof = table.dof();
        let p_value = if g2 <= 0.0 {
            1.0
        } else {
            ChiSquared::new(dof)
                .map_err(|e| CiError::DegenerateData(e.to_string()))?
                .sf(g2)
                .clamp(0.0, 1.0)
        };
        Ok(CiResult {
            statistic: g2,
            dof_or_n: dof,
            p_value,
        })
    }

    fn name(&self) -> &'static str {
        "g2"
    }
}

pub fn g2_mi_test(d: &Dataset, x: &str, y: &str, s: &VertexSet) -> Result<CiResult> {
    GSquare::new(d).test(x, y, s)
}

/// Graph-backed test: p = 1 when m-separated, 0 otherwise.
pub struct OracleCi<'a> {
    graph: &'a Admg,
}

impl<'a> OracleCi<'a> {
    pub fn new(graph: &'a Admg) -> Self {
        OracleCi { graph }
    }
}

impl CiTest for OracleCi<'_> {
    fn test(&self, x: &str, y: &str, s: &VertexSet) -> Result<CiResult> {
        check_arguments(x, y, s)?;
        let separated = self.graph.m_separated_pair(x, y, s)?;
        Ok(if separated {
            CiResult {
                statistic: 0.0,
                dof_or_n: 0.0,
                p_value: 1.0,
            }
        } else {
            CiResult {
                statistic: 1.0,
                dof_or_n: 0.0,
                p_value: 0.0,
            }
        })
    }

    fn name(&self) -> &'static str {
        "oracle"
    }
}

pub fn oracle_ci_test(g: &Admg, x: &str, y: &str, s: &VertexSet) -> Result<CiResult> {
    OracleCi::new(g).test(x, y, s)
}

/// Chooses Fisher-z for all-continuous and G² for all-discrete variable sets.
pub struct DataCi<'a> {
    data: &'a Dataset,
    fisher: FisherZ<'a>,
    g2: GSquare<'a>,
}

impl<'a> DataCi<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        DataCi {
            data,
            fisher: FisherZ::new(data),
            g2: GSquare::new(data),
        }
    }
}

impl CiTest for DataCi<'_> {
    fn test(&self, x: &str, y: &str, s: &VertexSet) -> Result<CiResult> {
        let mut continuous = 0usize;
        let mut total = 0usize;
        for v in [x, y].into_iter().chain(s.iter()) {
            total += 1;
            if self.data.column(v)?.is_continuous() {
                continuous += 1;
            }
        }
        if continuous == total {
            self.fisher.test(x, y, s)
        } else if continuous == 0 {
            self.g2.test(x, y, s)
        } else {
            Err(CiError::InvalidArgument(format!(
                "mixed continuous and discrete columns in test of `{x}` vs `{y}` given {s}"
            )))
        }
    }

    fn name(&self) -> &'static str {
        "auto"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Column;
    use crate::fixtures::remark_graph;
    use crate::vset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn exact_copy_is_clamped() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = gaussian(&mut rng, 50);
        let d = Dataset::new(vec![Column::continuous("x", x.clone()), Column::continuous("y", x)]).unwrap();
        let r = partial_correlation(&d, "x", "y", &VertexSet::new()).unwrap();
        assert_eq!(r, CORRELATION_CLAMP);
        let res = fisher_z_test(&d, "x", "y", &VertexSet::new()).unwrap();
        assert!(res.p_value < 1e-12);
    }

    #[test]
    fn independent_noise_and_markov_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000;
        let x = gaussian(&mut rng, n);
        let noise = gaussian(&mut rng, n);
        let z: Vec<f64> = x.iter().zip(&noise).map(|(a, e)| 0.8 * a + e).collect();
        let noise2 = gaussian(&mut rng, n);
        let y: Vec<f64> = z.iter().zip(&noise2).map(|(a, e)| -1.2 * a + e).collect();
        let w = gaussian(&mut rng, n);
        let d = Dataset::new(vec![
            Column::continuous("x", x),
            Column::continuous("y", y),
            Column::continuous("z", z),
            Column::continuous("w", w),
        ])
        .unwrap();
        assert!(partial_correlation(&d, "x", "w", &VertexSet::new()).unwrap().abs() < 0.05);
        assert!(partial_correlation(&d, "x", "y", &VertexSet::new()).unwrap().abs() > 0.3);
        assert!(partial_correlation(&d, "x", "y", &vset!["z"]).unwrap().abs() < 0.05);
    }

    #[test]
    fn null_correlation_gives_unit_p() {
        let r = fisher_z_from_r(0.0, 100, 1);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.dof_or_n, 96.0);
    }

    #[test]
    fn singular_conditioning_set_is_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = gaussian(&mut rng, 40);
        let b = gaussian(&mut rng, 40);
        let d = Dataset::new(vec![
            Column::continuous("a", a.clone()),
            Column::continuous("b", b),
            Column::continuous("c", a.clone()),
            Column::continuous("k", vec![2.0; 40]),
        ])
        .unwrap();
        assert!(matches!(
            fisher_z_test(&d, "a", "b", &vset!["c"]),
            Err(CiError::DegenerateData(_))
        ));
        assert!(matches!(
            fisher_z_test(&d, "a", "k", &VertexSet::new()),
            Err(CiError::DegenerateData(_))
        ));
    }

    #[test]
    fn too_few_rows() {
        let d = Dataset::new(vec![
            Column::continuous("a", vec![1.0, 2.0, 3.0, 4.0]),
            Column::continuous("b", vec![1.0, 3.0, 2.0, 5.0]),
            Column::continuous("c", vec![0.0, 1.0, 0.0, 1.0]),
        ])
        .unwrap();
        assert!(fisher_z_test(&d, "a", "b", &VertexSet::new()).is_ok());
        assert!(matches!(
            fisher_z_test(&d, "a", "b", &vset!["c"]),
            Err(CiError::InsufficientSample {
                needed: 5,
                available: 4
            })
        ));
    }

    fn binary_table(cells: [[usize; 2]; 2]) -> Dataset {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                for _ in 0..cells[i][j] {
                    x.push(i as u32);
                    y.push(j as u32);
                }
            }
        }
        let lv = vec!["0".to_string(), "1".to_string()];
        Dataset::new(vec![Column::discrete("x", lv.clone(), x), Column::discrete("y", lv, y)]).unwrap()
    }

    #[test]
    fn g2_independent_product_table() {
        let d = binary_table([[10, 20], [30, 60]]);
        let res = g2_mi_test(&d, "x", "y", &VertexSet::new()).unwrap();
        assert!(res.statistic.abs() < 1e-12);
        assert_eq!(res.p_value, 1.0);
        assert!(
            GSquare::new(&d)
                .mutual_information("x", "y", &VertexSet::new())
                .unwrap()
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn g2_identical_binary_variables() {
        let d = binary_table([[50, 0], [0, 50]]);
        let mi = GSquare::new(&d)
            .mutual_information("x", "y", &VertexSet::new())
            .unwrap();
        assert!((mi - std::f64::consts::LN_2).abs() < 1e-12);
        let res = g2_mi_test(&d, "x", "y", &VertexSet::new()).unwrap();
        assert!((res.statistic - 200.0 * std::f64::consts::LN_2).abs() < 1e-9);
        assert!(res.p_value < 1e-15);
        assert_eq!(res.dof_or_n, 1.0);
    }

    #[test]
    fn g2_empty_strata_reduce_dof() {
        // z has three levels but only two occur
        let lv = |k: usize| (0..k).map(|i| i.to_string()).collect::<Vec<_>>();
        let d = Dataset::new(vec![
            Column::discrete("x", lv(2), vec![0, 1, 0, 1, 0, 1, 1, 0]),
            Column::discrete("y", lv(2), vec![0, 1, 1, 0, 0, 0, 1, 1]),
            Column::discrete("z", lv(3), vec![0, 0, 0, 0, 2, 2, 2, 2]),
        ])
        .unwrap();
        let res = g2_mi_test(&d, "x", "y", &vset!["z"]).unwrap();
        assert_eq!(res.dof_or_n, 2.0);
    }

    #[test]
    fn mixed_kinds_rejected() {
        let d = Dataset::new(vec![
            Column::continuous("a", vec![1.0, 2.0, 3.0, 4.0, 5.0]),
            Column::discrete("g", vec!["u".into(), "v".into()], vec![0, 1, 0, 1, 1]),
        ])
        .unwrap();
        assert!(matches!(
            DataCi::new(&d).test("a", "g", &VertexSet::new()),
            Err(CiError::InvalidArgument(_))
        ));
    }

    #[test]
    fn oracle_examples() {
        let g = remark_graph();
        assert_eq!(oracle_ci_test(&g, "T", "C1", &vset!["X"]).unwrap().p_value, 1.0);
        assert_eq!(oracle_ci_test(&g, "T", "C1", &VertexSet::new()).unwrap().p_value, 0.0);
        for s in [VertexSet::new(), vset!["C2"], vset!["C2", "Y"]] {
            assert_eq!(oracle_ci_test(&g, "X", "T", &s).unwrap().p_value, 0.0);
        }
        assert!(matches!(
            oracle_ci_test(&g, "T", "nope", &VertexSet::new()),
            Err(CiError::Graph(GraphError::UnknownVertex(_)))
        ));
    }
}
