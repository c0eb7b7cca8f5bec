//! Causally invariant feature selection for domain adaptation under
//! covariate shift.
//!
//! The crate finds feature sets `S` for which a target `T` is independent of
//! every context variable given `S`. It discovers the Markov blanket of `T`
//! and searches only subsets of that blanket, which keeps the number of
//! conditional-independence tests exponential in the blanket size rather than
//! in the number of variables.
//!
//! Modules:
//!
//! - [`admg`]: mixed graphs, m-separation and graphical Markov blankets
//! - [`dataset`]: typed tabular data with CSV input and output
//! - [`citest`]: Fisher-z, G² and graph-oracle conditional-independence tests
//! - [`mb`]: GSMB and the IAMB family
//! - [`sctl`]: the separating-set search, the exhaustive baseline and the bias decomposition
//! - [`synth`]: ground-truth scenarios and shifted target domains
//! - [`predict`]: deterministic predictors, metrics and two-sample tests

pub mod admg;
pub mod citest;
pub mod dataset;
pub mod fixtures;
pub mod gen;
mod linalg;
pub mod mb;
pub mod predict;
pub mod sctl;
pub mod synth;

pub use admg::{Admg, GraphError, VertexSet};
pub use citest::{CiResult, CiTest};
pub use dataset::Dataset;
