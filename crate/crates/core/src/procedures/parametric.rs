use crate::dataset::Dataset;
use crate::distfn::RefDistribution;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::quadratic::{anova_type, QuadraticForm};
use super::{cell_moments, Convention, Method, MomentSummary, TestResult};

/// Classical ANOVA F-test of `C mu = 0` under homoscedastic normal errors.
///
/// For a one-way layout with `C = P_d` this is the textbook between/within
/// mean-square ratio; for other contrasts it is the general linear
/// hypothesis F built from the cell means, with numerator
/// `(C x̄)' (C diag(1/n_i) C')⁺ (C x̄) / rank` and the pooled within-cell mean
/// square in the denominator.
pub fn anova_f(data: &Dataset, contrast: &Matrix) -> Result<TestResult> {
    anova_f_with(data, contrast, Convention::Classical)
}

pub fn anova_f_with(data: &Dataset, contrast: &Matrix, convention: Convention) -> Result<TestResult> {
    let n_total = data.total();
    let d = data.n_cells();
    if n_total <= d {
        return Err(Error::domain("ANOVA F needs N > d"));
    }
    let (means, _) = cell_moments(data);
    let denominator_ss: f64 = match convention {
        Convention::Classical => data
            .cells()
            .zip(&means)
            .map(|(cell, m)| cell.iter().map(|x| (x - m) * (x - m)).sum::<f64>())
            .sum(),
        Convention::AsPrinted => {
            let grand = data.pooled().iter().sum::<f64>() / n_total as f64;
            data.pooled().iter().map(|x| (x - grand) * (x - grand)).sum()
        }
    };
    let mse = denominator_ss / (n_total - d) as f64;
    if !(mse > 0.0) {
        return Err(Error::degenerate("zero within-cell variance"));
    }
    let inv_n: Vec<f64> = data.design().cell_sizes().iter().map(|&n| 1.0 / n as f64).collect();
    let form = QuadraticForm::new(contrast)?;
    let (ss_hyp, rank) = form.evaluate(&means, &inv_n)?;
    let rank = rank.max(form.contrast_rank());
    let statistic = ss_hyp / rank as f64 / mse;
    TestResult::asymptotic(
        Method::AnovaF,
        statistic,
        RefDistribution::f(rank as f64, (n_total - d) as f64)?,
    )
}

/// Welch's heteroscedastic one-way test.
pub fn welch_oneway(data: &Dataset) -> Result<TestResult> {
    data.require_one_way("Welch's test")?;
    data.require_min_cell_size(2, "Welch's test")?;
    let (means, variances) = cell_moments(data);
    if let Some(i) = variances.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::degenerate(format!("cell {} has zero variance", i + 1)));
    }
    let d = data.n_cells() as f64;
    let sizes = data.design().cell_sizes();
    let weights: Vec<f64> = sizes.iter().zip(&variances).map(|(&n, v)| n as f64 / v).collect();
    let total_weight: f64 = weights.iter().sum();
    let weighted_mean = weights.iter().zip(&means).map(|(w, m)| w * m).sum::<f64>() / total_weight;
    let between = weights
        .iter()
        .zip(&means)
        .map(|(w, m)| w * (m - weighted_mean) * (m - weighted_mean))
        .sum::<f64>()
        / (d - 1.0);
    let lack: f64 = weights
        .iter()
        .zip(sizes)
        .map(|(w, &n)| (1.0 - w / total_weight).powi(2) / (n as f64 - 1.0))
        .sum();
    let correction = 1.0 + 2.0 * (d - 2.0) / (d * d - 1.0) * lack;
    let statistic = between / correction;
    let df2 = (d * d - 1.0) / (3.0 * lack);
    TestResult::asymptotic(Method::Welch, statistic, RefDistribution::f(d - 1.0, df2)?)
}

/// Wald-type statistic on cell means, referred to chi-square(rank).
pub fn wts(data: &Dataset, contrast: &Matrix) -> Result<TestResult> {
    let form = QuadraticForm::new(contrast)?;
    let (q, rank) = wald_on_means(data, &form)?;
    if rank == 0 {
        return Err(Error::degenerate("zero-rank covariance in WTS"));
    }
    TestResult::asymptotic(Method::Wts, q, RefDistribution::chi_square(rank as f64)?)
}

/// ANOVA-type statistic on cell means with Box-type F approximation.
pub fn ats(data: &Dataset, contrast: &Matrix) -> Result<TestResult> {
    let moments = MomentSummary::compute(data)?;
    let a = anova_type(&moments.means, &moments.s_n, &moments.lambda, contrast, data.total())?;
    TestResult::asymptotic(Method::Ats, a.statistic, RefDistribution::f(a.df1, a.df2)?)
}

fn wald_on_means(data: &Dataset, form: &QuadraticForm) -> Result<(f64, usize)> {
    data.require_min_cell_size(2, "WTS")?;
    let (means, variances) = cell_moments(data);
    let n_total = data.total() as f64;
    let weights: Vec<f64> = variances
        .iter()
        .zip(data.design().cell_sizes())
        .map(|(v, &n)| n_total * v / n as f64)
        .collect();
    let (q, rank) = form.evaluate(&means, &weights)?;
    Ok((n_total * q, rank))
}

/// WTS value alone, for resampling.
pub(crate) fn wts_statistic(data: &Dataset, form: &QuadraticForm) -> Result<f64> {
    wald_on_means(data, form).map(|(q, _)| q)
}
