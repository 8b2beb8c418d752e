//! Permutation inference.
//!
//! The pooled observations are reassigned to the cells with the cell sizes
//! held fixed and the statistic is recomputed for every arrangement. Rank
//! statistics reuse the pooled tie structure, which no arrangement changes. Each Monte Carlo replicate draws
//! from its own random stream keyed by `(seed, replicate)`, which makes the
//! p-value independent of how the replicates are scheduled.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::distgen::RngStream;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::procedures::{
    kruskal_wallis_statistic, kw_from, kw_variance, rank_wald_from, rank_wts_statistic, wts_statistic,
    Convention, Method, QuadraticForm, Reference, TestResult,
};
use crate::ranks::{cell_labels_of, CellRanks, TieBlocks};

pub const DEFAULT_ENUMERATION_CAP: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermutationMode {
    MonteCarlo,
    FullEnumeration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermutationPlan {
    pub replicates: u64,
    pub mode: PermutationMode,
    pub seed: u64,
    /// Largest number of arrangements full enumeration may visit.
    pub enumeration_cap: u64,
}

impl PermutationPlan {
    pub fn monte_carlo(replicates: u64, seed: u64) -> Self {
        Self {
            replicates,
            mode: PermutationMode::MonteCarlo,
            seed,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn full_enumeration() -> Self {
        Self {
            replicates: 0,
            mode: PermutationMode::FullEnumeration,
            seed: 0,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.mode == PermutationMode::MonteCarlo && self.replicates == 0 {
            return Err(Error::Plan("Monte Carlo permutation needs at least one replicate".into()));
        }
        Ok(())
    }

    /// Smallest attainable Monte Carlo p-value, `1/(B+1)`.
    pub fn resolution(&self) -> f64 {
        1.0 / (self.replicates as f64 + 1.0)
    }

    /// Warns and returns false when `1/(B+1) > alpha`.
    pub fn check_resolution(&self, alpha: f64) -> bool {
        if self.mode == PermutationMode::MonteCarlo && self.resolution() > alpha {
            log::warn!(
                "permutation resolution 1/{} exceeds alpha = {alpha}; the test cannot reject",
                self.replicates + 1
            );
            return false;
        }
        true
    }
}

impl Default for PermutationPlan {
    fn default() -> Self {
        Self::monte_carlo(1_999, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationOutcome {
    pub p_value: f64,
    pub observed: f64,
    /// Replicates drawn, or arrangements visited when `exact`.
    pub replicates: u64,
    pub exact: bool,
}

/// Number of distinct assignments of `N` labelled observations to cells of
/// the given sizes, `N! / Π n_i!`, or `None` if it exceeds `u64`.
pub fn arrangement_count(sizes: &[usize]) -> Option<u64> {
    let mut total: u64 = 1;
    let mut placed: u64 = 0;
    for &n in sizes {
        // Multiply by C(placed + n, n) one factor at a time; each partial
        // product is itself a binomial coefficient, so division is exact and
        // never exceeds the final count.
        let mut binom: u128 = 1;
        for k in 1..=n as u64 {
            binom = binom.checked_mul((placed + k) as u128)? / k as u128;
        }
        placed += n as u64;
        total = u64::try_from((total as u128).checked_mul(binom)?).ok()?;
    }
    Some(total)
}

fn at_least(value: f64, observed: f64) -> bool {
    value >= observed - (1e-10 * observed.abs()).max(1e-12)
}

/// Permutation p-value of `statistic` on `data`.
///
/// Monte Carlo mode returns `(1 + #{Q* >= Q}) / (B + 1)`; full enumeration
/// returns the share of all arrangements with `Q* >= Q`. Values within a
/// relative `1e-10` of the observed statistic count as ties.
pub fn permutation_pvalue<F>(statistic: F, data: &Dataset, plan: &PermutationPlan) -> Result<PermutationOutcome>
where
    F: Fn(&Dataset) -> Result<f64> + Sync,
{
    let observed = statistic(data)?;
    resample(
        data.design().cell_sizes(),
        observed,
        plan,
        || data.clone(),
        |scratch: &mut Dataset, perm: &[usize]| {
            for (slot, &source) in scratch.pooled_mut().iter_mut().zip(perm) {
                *slot = data.pooled()[source];
            }
            statistic(scratch)
        },
    )
}

/// Runs the resampling loop. `eval` receives an arrangement `perm`, where
/// slot `s` of the pooled sample holds original observation `perm[s]`.
fn resample<S, I, E>(sizes: &[usize], observed: f64, plan: &PermutationPlan, init: I, eval: E) -> Result<PermutationOutcome>
where
    S: Send,
    I: Fn() -> S + Sync + Send,
    E: Fn(&mut S, &[usize]) -> Result<f64> + Sync + Send,
{
    plan.validate()?;
    let n: usize = sizes.iter().sum();
    match plan.mode {
        PermutationMode::MonteCarlo => {
            let hits = (0..plan.replicates)
                .into_par_iter()
                .map_init(
                    || (init(), vec![0usize; n]),
                    |(scratch, perm), b| {
                        for (i, p) in perm.iter_mut().enumerate() {
                            *p = i;
                        }
                        perm.shuffle(&mut RngStream::new(plan.seed, b).rng());
                        eval(scratch, perm).map(|q| at_least(q, observed) as u64)
                    },
                )
                .try_reduce(|| 0, |a, b| Ok(a + b))?;
            Ok(PermutationOutcome {
                p_value: (1 + hits) as f64 / (plan.replicates + 1) as f64,
                observed,
                replicates: plan.replicates,
                exact: false,
            })
        }
        PermutationMode::FullEnumeration => {
            let count = arrangement_count(sizes);
            match count {
                Some(c) if c <= plan.enumeration_cap => {}
                _ => {
                    return Err(Error::Plan(format!(
                        "full enumeration needs {} arrangements, cap is {}",
                        count.map_or_else(|| "more than 2^64".to_string(), |c| c.to_string()),
                        plan.enumeration_cap
                    )))
                }
            }
            let mut scratch = init();
            let mut assignment = vec![0usize; n];
            let mut used = vec![false; n];
            let mut hits = 0u64;
            let mut visited = 0u64;
            let mut visit = |assignment: &[usize]| -> Result<()> {
                if at_least(eval(&mut scratch, assignment)?, observed) {
                    hits += 1;
                }
                visited += 1;
                Ok(())
            };
            fill_cells(sizes, 0, 0, 0, &mut assignment, &mut used, &mut visit)?;
            debug_assert_eq!(Some(visited), count);
            Ok(PermutationOutcome {
                p_value: hits as f64 / visited as f64,
                observed,
                replicates: visited,
                exact: true,
            })
        }
    }
}

/// Recursively chooses, for each cell in turn, an increasing set of source
/// indices among those not yet used.
fn fill_cells(
    sizes: &[usize],
    cell: usize,
    slot: usize,
    min_source: usize,
    assignment: &mut [usize],
    used: &mut [bool],
    visit: &mut dyn FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if cell == sizes.len() {
        return visit(assignment);
    }
    let cell_start: usize = sizes[..cell].iter().sum();
    if slot == cell_start + sizes[cell] {
        return fill_cells(sizes, cell + 1, slot, 0, assignment, used, visit);
    }
    for source in min_source..assignment.len() {
        if used[source] {
            continue;
        }
        used[source] = true;
        assignment[slot] = source;
        fill_cells(sizes, cell, slot + 1, source + 1, assignment, used, visit)?;
        used[source] = false;
    }
    Ok(())
}

/// Resamples a rank statistic without re-sorting. The pooled tie structure
/// does not depend on the arrangement, so only the cell label of each
/// observation changes between resamples.
fn rank_resample<F>(data: &Dataset, observed: f64, plan: &PermutationPlan, statistic: F) -> Result<PermutationOutcome>
where
    F: Fn(&CellRanks) -> Result<f64> + Sync + Send,
{
    let sizes = data.design().cell_sizes();
    let ties = TieBlocks::new(data.pooled());
    let slot_label = cell_labels_of(sizes);
    resample(
        sizes,
        observed,
        plan,
        || (CellRanks::default(), vec![0usize; slot_label.len()]),
        |(cells, labels): &mut (CellRanks, Vec<usize>), perm: &[usize]| {
            for (s, &source) in perm.iter().enumerate() {
                labels[source] = slot_label[s];
            }
            ties.summarize(labels, sizes, cells);
            statistic(cells)
        },
    )
}

fn permutation_result(method: Method, outcome: PermutationOutcome) -> Result<TestResult> {
    if !outcome.observed.is_finite() {
        return Err(Error::Numeric(format!("{method} statistic is not finite")));
    }
    Ok(TestResult {
        method,
        statistic: outcome.observed,
        reference: Reference::Permutation {
            replicates: outcome.replicates,
            exact: outcome.exact,
        },
        p_value: outcome.p_value,
        scale: method.scale(),
    })
}

/// Resamples whose covariance collapses entirely give an infinite Wald
/// statistic; they count as at least as extreme as anything observed.
fn lenient(q: Result<f64>) -> Result<f64> {
    match q {
        Err(Error::Degenerate(_)) => Ok(f64::INFINITY),
        other => other,
    }
}

/// Permutation version of the Wald-type statistic on cell means.
pub fn wtps(data: &Dataset, contrast: &Matrix, plan: &PermutationPlan) -> Result<TestResult> {
    let form = QuadraticForm::new(contrast)?;
    wts_statistic(data, &form)?;
    let outcome = permutation_pvalue(|d| lenient(wts_statistic(d, &form)), data, plan)?;
    permutation_result(Method::Wtps, outcome)
}

/// Permutation version of the rank-based Wald-type statistic.
pub fn rank_wtps(data: &Dataset, contrast: &Matrix, plan: &PermutationPlan) -> Result<TestResult> {
    let form = QuadraticForm::new(contrast)?;
    let observed = rank_wts_statistic(data, &form)?;
    let sizes = data.design().cell_sizes();
    let outcome = rank_resample(data, observed, plan, |cells| {
        lenient(rank_wald_from(cells, sizes, &form).map(|(q, _)| q))
    })?;
    permutation_result(Method::RankWtps, outcome)
}

/// Kruskal-Wallis test against its permutation distribution: all
/// arrangements when there are at most `plan.enumeration_cap` of them,
/// otherwise `plan.replicates` Monte Carlo resamples.
pub fn kruskal_wallis_exact(data: &Dataset, plan: &PermutationPlan) -> Result<TestResult> {
    let observed = kruskal_wallis_statistic(data, Convention::Classical)?;
    let sizes = data.design().cell_sizes();
    let variance = kw_variance(&TieBlocks::new(data.pooled()), data.total(), Convention::Classical)?;
    let enumerable = arrangement_count(sizes).is_some_and(|c| c <= plan.enumeration_cap);
    let plan = PermutationPlan {
        mode: if enumerable {
            PermutationMode::FullEnumeration
        } else {
            PermutationMode::MonteCarlo
        },
        ..*plan
    };
    let outcome = rank_resample(data, observed, &plan, |cells| Ok(kw_from(cells, sizes, variance)))?;
    permutation_result(Method::KruskalWallisExact, outcome)
}
