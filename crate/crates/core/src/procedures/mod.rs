//! The test procedures.
//!
//! Every procedure returns a [`TestResult`] holding the statistic, its
//! reference distribution and the upper-tail p-value. Mean-based procedures
//! (F, Welch, WTS, ATS, WTPS) target `C mu = 0`; rank-based procedures
//! target `C F = 0` on the distribution functions.

use std::fmt;
use std::str::FromStr;

use crate::dataset::Dataset;
use crate::distfn::RefDistribution;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::permute::{self, PermutationPlan};

mod parametric;
mod quadratic;
mod rank;

pub use parametric::{anova_f, anova_f_with, ats, welch_oneway, wts};
pub use quadratic::{anova_type, wald_type, AtsStatistic, QuadraticForm, WaldStatistic};
pub use rank::{kruskal_wallis, kruskal_wallis_with, rank_ats, rank_wts, van_der_waerden};

pub(crate) use parametric::wts_statistic;
pub(crate) use rank::{kruskal_wallis_statistic, kw_from, kw_variance, rank_wald_from, rank_wts_statistic};

/// The procedures, in the order used for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    AnovaF,
    Welch,
    Ats,
    Wts,
    Wtps,
    KruskalWallis,
    KruskalWallisExact,
    VanDerWaerden,
    RankAts,
    RankWts,
    RankWtps,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::AnovaF,
        Method::Welch,
        Method::Ats,
        Method::Wts,
        Method::Wtps,
        Method::KruskalWallis,
        Method::KruskalWallisExact,
        Method::VanDerWaerden,
        Method::RankAts,
        Method::RankWts,
        Method::RankWtps,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::AnovaF => "F",
            Method::Welch => "Welch",
            Method::Ats => "ATS",
            Method::Wts => "WTS",
            Method::Wtps => "WTPS",
            Method::KruskalWallis => "KW",
            Method::KruskalWallisExact => "KW-exact",
            Method::VanDerWaerden => "VDW",
            Method::RankAts => "rATS",
            Method::RankWts => "rWTS",
            Method::RankWtps => "rWTPS",
        }
    }

    /// The null hypothesis the procedure was built for.
    pub fn scale(self) -> HypothesisScale {
        match self {
            Method::AnovaF | Method::Welch | Method::Ats | Method::Wts | Method::Wtps => {
                HypothesisScale::Mean
            }
            _ => HypothesisScale::Distribution,
        }
    }

    /// Welch, Kruskal-Wallis and van der Waerden exist for one-way layouts only.
    pub fn one_way_only(self) -> bool {
        matches!(
            self,
            Method::Welch
                | Method::KruskalWallis
                | Method::KruskalWallisExact
                | Method::VanDerWaerden
        )
    }

    pub fn is_permutation(self) -> bool {
        matches!(
            self,
            Method::Wtps | Method::RankWtps | Method::KruskalWallisExact
        )
    }

    pub fn applies_to(self, one_way: bool) -> bool {
        one_way || !self.one_way_only()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let tags: Vec<_> = Method::ALL.iter().map(|m| m.tag()).collect();
                Error::Config(format!("unknown method '{s}', expected one of {}", tags.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HypothesisScale {
    /// `C mu = 0`
    Mean,
    /// `C F = 0`
    Distribution,
}

impl fmt::Display for HypothesisScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HypothesisScale::Mean => "mean",
            HypothesisScale::Distribution => "distribution",
        })
    }
}

/// Where the p-value came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Distribution(RefDistribution),
    /// Permutation distribution over `replicates` resamples, or over all
    /// arrangements when `exact`.
    Permutation { replicates: u64, exact: bool },
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reference::Distribution(RefDistribution::Normal) => write!(f, "normal"),
            Reference::Distribution(RefDistribution::ChiSquare { df }) => write!(f, "chi-square({df})"),
            Reference::Distribution(RefDistribution::F { df1, df2 }) => write!(f, "F({df1}, {df2})"),
            Reference::Permutation { replicates, exact: true } => {
                write!(f, "permutation(exact, {replicates} arrangements)")
            }
            Reference::Permutation { replicates, exact: false } => write!(f, "permutation(B={replicates})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub method: Method,
    pub statistic: f64,
    pub reference: Reference,
    pub p_value: f64,
    pub scale: HypothesisScale,
}

impl TestResult {
    pub(crate) fn asymptotic(method: Method, statistic: f64, dist: RefDistribution) -> Result<Self> {
        if !statistic.is_finite() {
            return Err(Error::Numeric(format!("{method} statistic is not finite")));
        }
        let p_value = dist.survival(statistic)?;
        Ok(Self {
            method,
            statistic,
            reference: Reference::Distribution(dist),
            p_value,
            scale: method.scale(),
        })
    }

    /// Degrees of freedom of an asymptotic reference distribution.
    pub fn df(&self) -> Option<(f64, Option<f64>)> {
        match self.reference {
            Reference::Distribution(d) => d.degrees_of_freedom(),
            Reference::Permutation { .. } => None,
        }
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

/// Which variant of a formula to evaluate where the printed textbook form and
/// the classical form differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convention {
    /// ANOVA F with the within-cell sum of squares in the denominator;
    /// Kruskal-Wallis variance `Σ (R - (N+1)/2)² / (N - 1)`.
    #[default]
    Classical,
    /// ANOVA F with the total sum of squares in the denominator;
    /// Kruskal-Wallis variance carrying an extra `1/N²`.
    AsPrinted,
}

/// Cell means and variances with the derived covariance estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub means: Vec<f64>,
    /// Unbiased sample variances.
    pub variances: Vec<f64>,
    /// `Ŝ_N = N diag(σ̂²_i / n_i)`.
    pub s_n: Matrix,
    /// `Λ = diag(1 / (n_i - 1))`.
    pub lambda: Matrix,
}

impl MomentSummary {
    pub fn compute(data: &Dataset) -> Result<Self> {
        data.require_min_cell_size(2, "variance estimation")?;
        let (means, variances) = cell_moments(data);
        let n_total = data.total() as f64;
        let sizes = data.design().cell_sizes();
        let s_diag: Vec<f64> = variances
            .iter()
            .zip(sizes)
            .map(|(v, &n)| n_total * v / n as f64)
            .collect();
        let lambda: Vec<f64> = sizes.iter().map(|&n| 1.0 / (n as f64 - 1.0)).collect();
        Ok(Self {
            means,
            variances,
            s_n: Matrix::from_diagonal(&s_diag),
            lambda: Matrix::from_diagonal(&lambda),
        })
    }
}

/// Cell means and unbiased variances (variance 0 for a single observation).
pub(crate) fn cell_moments(data: &Dataset) -> (Vec<f64>, Vec<f64>) {
    data.cells()
        .map(|cell| {
            let n = cell.len() as f64;
            let mean = cell.iter().sum::<f64>() / n;
            let ss: f64 = cell.iter().map(|x| (x - mean) * (x - mean)).sum();
            let var = if cell.len() > 1 { ss / (n - 1.0) } else { 0.0 };
            (mean, var)
        })
        .unzip()
}

pub(crate) fn lambda_of(data: &Dataset) -> Matrix {
    let lambda: Vec<f64> = data
        .design()
        .cell_sizes()
        .iter()
        .map(|&n| 1.0 / (n as f64 - 1.0))
        .collect();
    Matrix::from_diagonal(&lambda)
}

/// Runs `method` on `data`. The contrast is ignored by the one-way-only
/// procedures, which always test overall equality; `plan` is used only by
/// the permutation procedures.
pub fn run(method: Method, data: &Dataset, contrast: &Matrix, plan: &PermutationPlan) -> Result<TestResult> {
    if !method.applies_to(data.design().is_one_way()) {
        return Err(Error::Config(format!("{method} is defined for one-way layouts only")));
    }
    match method {
        Method::AnovaF => anova_f(data, contrast),
        Method::Welch => welch_oneway(data),
        Method::Ats => ats(data, contrast),
        Method::Wts => wts(data, contrast),
        Method::Wtps => permute::wtps(data, contrast, plan),
        Method::KruskalWallis => kruskal_wallis(data),
        Method::KruskalWallisExact => permute::kruskal_wallis_exact(data, plan),
        Method::VanDerWaerden => van_der_waerden(data),
        Method::RankAts => rank_ats(data, contrast),
        Method::RankWts => rank_wts(data, contrast),
        Method::RankWtps => permute::rank_wtps(data, contrast, plan),
    }
}
