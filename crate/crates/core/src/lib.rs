//! Hypothesis tests for one- and two-way factorial designs.
//!
//! The crate covers the classical ANOVA F-test, Welch's heteroscedastic
//! one-way test, the Wald-type (WTS) and ANOVA-type (ATS) statistics, their
//! rank-based counterparts built on unweighted nonparametric relative
//! effects, the Kruskal-Wallis and van der Waerden tests, and permutation
//! versions (WTPS, rWTPS, permutation Kruskal-Wallis). The [`simulate`]
//! module drives a Monte Carlo study of type-I error rates over a fixed
//! registry of null scenarios.
//!
//! ```
//! use factest_core::{Dataset, Design, procedures};
//!
//! let design = Design::one_way(vec![3, 3]).unwrap();
//! let data = Dataset::new(design, vec![vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]]).unwrap();
//! let contrast = data.design().default_hypothesis().unwrap();
//! let wts = procedures::wts(&data, contrast.contrast()).unwrap();
//! assert!((wts.statistic - 1.5).abs() < 1e-12);
//! ```

pub mod dataset;
pub mod design;
pub mod distfn;
pub mod distgen;
pub mod error;
pub mod linalg;
pub mod permute;
pub mod procedures;
pub mod ranks;
pub mod simulate;

pub use dataset::Dataset;
pub use design::{Design, Hypothesis, HypothesisKind};
pub use distfn::RefDistribution;
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use permute::{PermutationMode, PermutationPlan};
pub use procedures::{HypothesisScale, Method, TestResult};
