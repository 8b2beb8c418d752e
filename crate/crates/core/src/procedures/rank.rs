use crate::dataset::Dataset;
use crate::distfn::{normal_quantile, RefDistribution};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::ranks::{cell_labels_of, midranks, pseudo_effects, rank_variances, CellRanks, TieBlocks};

use super::quadratic::{anova_type, QuadraticForm};
use super::{lambda_of, Convention, Method, TestResult};

/// Kruskal-Wallis test with tie-corrected variance, chi-square(d - 1) reference.
pub fn kruskal_wallis(data: &Dataset) -> Result<TestResult> {
    kruskal_wallis_with(data, Convention::Classical)
}

pub fn kruskal_wallis_with(data: &Dataset, convention: Convention) -> Result<TestResult> {
    let k = kruskal_wallis_statistic(data, convention)?;
    let df = (data.n_cells() - 1) as f64;
    TestResult::asymptotic(Method::KruskalWallis, k, RefDistribution::chi_square(df)?)
}

pub(crate) fn kruskal_wallis_statistic(data: &Dataset, convention: Convention) -> Result<f64> {
    data.require_one_way("Kruskal-Wallis")?;
    let ties = TieBlocks::new(data.pooled());
    let sizes = data.design().cell_sizes();
    let mut cells = CellRanks::default();
    ties.summarize(&cell_labels_of(sizes), sizes, &mut cells);
    let variance = kw_variance(&ties, data.total(), convention)?;
    Ok(kw_from(&cells, sizes, variance))
}

pub(crate) fn kw_variance(ties: &TieBlocks, n_total: usize, convention: Convention) -> Result<f64> {
    let n = n_total as f64;
    let ss = ties.centred_rank_ss();
    let variance = match convention {
        Convention::Classical => ss / (n - 1.0),
        Convention::AsPrinted => ss / (n * n * (n - 1.0)),
    };
    if variance > 0.0 {
        Ok(variance)
    } else {
        Err(Error::degenerate("all observations are tied"))
    }
}

/// `Σ n_i (R̄_i - (N+1)/2)² / variance`.
pub(crate) fn kw_from(cells: &CellRanks, sizes: &[usize], variance: f64) -> f64 {
    let n: usize = sizes.iter().sum();
    let centre = (n as f64 + 1.0) / 2.0;
    let between: f64 = sizes
        .iter()
        .zip(&cells.rank_sums)
        .map(|(&ni, s)| {
            let ni = ni as f64;
            let mean = s / ni;
            ni * (mean - centre) * (mean - centre)
        })
        .sum();
    between / variance
}

/// Van der Waerden normal-scores test, chi-square(d - 1) reference.
pub fn van_der_waerden(data: &Dataset) -> Result<TestResult> {
    data.require_one_way("van der Waerden")?;
    let ranks = midranks(data.pooled());
    let n = data.total() as f64;
    let scores = ranks
        .iter()
        .map(|r| normal_quantile(r / (n + 1.0)))
        .collect::<Result<Vec<_>>>()?;
    let s2 = scores.iter().map(|a| a * a).sum::<f64>() / (n - 1.0);
    if !(s2 > 0.0) {
        return Err(Error::degenerate("all observations are tied"));
    }
    let design = data.design();
    let between: f64 = (0..data.n_cells())
        .map(|i| {
            let a = &scores[design.cell_range(i)];
            let mean = a.iter().sum::<f64>() / a.len() as f64;
            a.len() as f64 * mean * mean
        })
        .sum();
    let df = (data.n_cells() - 1) as f64;
    TestResult::asymptotic(Method::VanDerWaerden, between / s2, RefDistribution::chi_square(df)?)
}

fn rank_wald(data: &Dataset, form: &QuadraticForm) -> Result<(f64, usize)> {
    data.require_min_cell_size(2, "rank variance")?;
    let sizes = data.design().cell_sizes();
    let mut cells = CellRanks::default();
    TieBlocks::new(data.pooled()).summarize(&cell_labels_of(sizes), sizes, &mut cells);
    rank_wald_from(&cells, sizes, form)
}

/// `N p̂' C' (C V̂ C')⁺ C p̂` from per-cell rank quantities.
pub(crate) fn rank_wald_from(cells: &CellRanks, sizes: &[usize], form: &QuadraticForm) -> Result<(f64, usize)> {
    let weights = cells.v_diagonal(sizes);
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::degenerate("every cell is internally tied; rank covariance is zero"));
    }
    let (q, rank) = form.evaluate(&cells.effects, &weights)?;
    let n: usize = sizes.iter().sum();
    Ok((n as f64 * q, rank))
}

/// Rank-based Wald-type statistic on the unweighted relative effects.
pub fn rank_wts(data: &Dataset, contrast: &Matrix) -> Result<TestResult> {
    let form = QuadraticForm::new(contrast)?;
    let (q, rank) = rank_wald(data, &form)?;
    if rank == 0 {
        return Err(Error::degenerate("zero-rank covariance in rank WTS"));
    }
    TestResult::asymptotic(Method::RankWts, q, RefDistribution::chi_square(rank as f64)?)
}

pub(crate) fn rank_wts_statistic(data: &Dataset, form: &QuadraticForm) -> Result<f64> {
    rank_wald(data, form).map(|(q, _)| q)
}

/// Rank-based ANOVA-type statistic with Box-type F approximation.
pub fn rank_ats(data: &Dataset, contrast: &Matrix) -> Result<TestResult> {
    let effects = pseudo_effects(data)?;
    let (_, v) = rank_variances(data)?;
    let a = anova_type(&effects, &v, &lambda_of(data), contrast, data.total())?;
    TestResult::asymptotic(Method::RankAts, a.statistic, RefDistribution::f(a.df1, a.df2)?)
}
