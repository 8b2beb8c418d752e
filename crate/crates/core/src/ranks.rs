//! Midranks, unweighted relative effects and rank-based variances.
//!
//! The relative effect of cell `i` is `p_i = ∫ G dF_i` where `G` is the
//! unweighted mean of the cell distribution functions, so every cell enters
//! `G` with weight `1/d` regardless of its sample size. Empirical
//! distribution functions use the normalized (midrank) convention
//! `F(x) = (F(x-) + F(x+)) / 2`.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Rank summaries of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct RankSummary {
    /// Midranks among all `N` observations, cell-major like the data.
    pub overall_midranks: Vec<f64>,
    /// Estimated relative effects `p̂`.
    pub effects: Vec<f64>,
    /// `ŝ²_i` on the rank scale.
    pub rank_variances: Vec<f64>,
    /// `V̂_N = N diag(ŝ²_i / n_i)`.
    pub v_n: Matrix,
}

impl RankSummary {
    pub fn compute(data: &Dataset) -> Result<Self> {
        let overall_midranks = midranks(data.pooled());
        let effects = pseudo_effects(data)?;
        let (rank_variances, v_n) = rank_variances_from(data, &overall_midranks)?;
        Ok(Self {
            overall_midranks,
            effects,
            rank_variances,
            v_n,
        })
    }
}

/// Positions `0..n` sorted by value.
fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

/// Calls `f(block)` for every run of tied values in `order`.
fn for_each_tie_block(values: &[f64], order: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let mut start = 0;
    while start < order.len() {
        let v = values[order[start]];
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == v {
            end += 1;
        }
        f(start, &order[start..end]);
        start = end;
    }
}

/// Midranks: ties receive the mean of the positions they occupy (1-based).
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let order = sorted_order(values);
    let mut ranks = vec![0.0; values.len()];
    for_each_tie_block(values, &order, |start, block| {
        let r = start as f64 + (block.len() as f64 + 1.0) / 2.0;
        for &i in block {
            ranks[i] = r;
        }
    });
    ranks
}

fn cell_labels(data: &Dataset) -> Vec<usize> {
    cell_labels_of(data.design().cell_sizes())
}

/// Unweighted relative effects `p̂_i = (1/n_i) Σ_k Ĝ(X_ik)`, where `Ĝ` at a
/// tied value is the mean over cells of the normalized edfs.
pub fn pseudo_effects(data: &Dataset) -> Result<Vec<f64>> {
    let sizes = data.design().cell_sizes();
    if sizes.contains(&0) {
        return Err(Error::domain("relative effects of an empty cell"));
    }
    let mut out = CellRanks::default();
    TieBlocks::new(data.pooled()).summarize(&cell_labels(data), sizes, &mut out);
    Ok(out.effects)
}

/// `ŝ²_i = Σ_k (R_ik - R̄_i)² / (N² (n_i - 1))` from overall midranks, and
/// `V̂_N = N diag(ŝ²_i / n_i)`.
pub fn rank_variances(data: &Dataset) -> Result<(Vec<f64>, Matrix)> {
    rank_variances_from(data, &midranks(data.pooled()))
}

fn rank_variances_from(data: &Dataset, ranks: &[f64]) -> Result<(Vec<f64>, Matrix)> {
    data.require_min_cell_size(2, "rank variance")?;
    let n_total = data.total() as f64;
    let design = data.design();
    let mut s2 = Vec::with_capacity(data.n_cells());
    let mut v = Vec::with_capacity(data.n_cells());
    for i in 0..data.n_cells() {
        let r = &ranks[design.cell_range(i)];
        let n = r.len() as f64;
        let mean = r.iter().sum::<f64>() / n;
        let ss: f64 = r.iter().map(|x| (x - mean) * (x - mean)).sum();
        let var = ss / (n_total * n_total * (n - 1.0));
        s2.push(var);
        v.push(n_total * var / n);
    }
    Ok((s2, Matrix::from_diagonal(&v)))
}

/// Tie structure of a pooled sample. Reassigning observations to cells
/// leaves the pooled order and the midranks unchanged, so one sort serves
/// every relabelling of the same values.
#[derive(Debug, Clone)]
pub(crate) struct TieBlocks {
    order: Vec<usize>,
    /// `(start, end)` ranges of `order` holding equal values.
    blocks: Vec<(usize, usize)>,
    midranks: Vec<f64>,
}

/// Per-cell rank quantities for one labelling.
#[derive(Debug, Clone, Default)]
pub(crate) struct CellRanks {
    pub effects: Vec<f64>,
    pub rank_sums: Vec<f64>,
    pub rank_squares: Vec<f64>,
    inv_sizes: Vec<f64>,
}

impl TieBlocks {
    pub(crate) fn new(values: &[f64]) -> Self {
        let order = sorted_order(values);
        let mut blocks = Vec::new();
        let mut midranks = Vec::new();
        for_each_tie_block(values, &order, |start, block| {
            blocks.push((start, start + block.len()));
            midranks.push(start as f64 + (block.len() as f64 + 1.0) / 2.0);
        });
        Self { order, blocks, midranks }
    }

    /// Sum of squared deviations of all midranks from `(N + 1) / 2`.
    pub(crate) fn centred_rank_ss(&self) -> f64 {
        let centre = (self.order.len() as f64 + 1.0) / 2.0;
        self.blocks
            .iter()
            .zip(&self.midranks)
            .map(|(&(s, e), r)| (e - s) as f64 * (r - centre) * (r - centre))
            .sum()
    }

    /// Fills `out` for observation `j` sitting in cell `labels[j]`.
    pub(crate) fn summarize(&self, labels: &[usize], sizes: &[usize], out: &mut CellRanks) {
        let d = sizes.len();
        for v in [&mut out.effects, &mut out.rank_sums, &mut out.rank_squares] {
            v.clear();
            v.resize(d, 0.0);
        }
        out.inv_sizes.clear();
        out.inv_sizes.extend(sizes.iter().map(|&n| 1.0 / n as f64));
        // Running value of d * G at the start of the current block.
        let mut below = 0.0;
        for (&(start, end), &r) in self.blocks.iter().zip(&self.midranks) {
            let block = &self.order[start..end];
            let tied: f64 = block.iter().map(|&j| out.inv_sizes[labels[j]]).sum();
            let g = (below + 0.5 * tied) / d as f64;
            for &j in block {
                let c = labels[j];
                out.effects[c] += g;
                out.rank_sums[c] += r;
                out.rank_squares[c] += r * r;
            }
            below += tied;
        }
        for (p, inv) in out.effects.iter_mut().zip(&out.inv_sizes) {
            *p *= inv;
        }
    }
}

impl CellRanks {
    /// Diagonal of `V̂_N`.
    pub(crate) fn v_diagonal(&self, sizes: &[usize]) -> Vec<f64> {
        let n_total: usize = sizes.iter().sum();
        let n_total = n_total as f64;
        sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let n = n as f64;
                let ss = (self.rank_squares[i] - self.rank_sums[i] * self.rank_sums[i] / n).max(0.0);
                ss / (n_total * (n - 1.0) * n)
            })
            .collect()
    }
}

pub(crate) fn cell_labels_of(sizes: &[usize]) -> Vec<usize> {
    let mut labels = Vec::with_capacity(sizes.iter().sum());
    for (i, &n) in sizes.iter().enumerate() {
        labels.extend(std::iter::repeat_n(i, n));
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::Design;
    use proptest::prelude::*;

    fn two_groups() -> Dataset {
        Dataset::one_way(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap()
    }

    /// Pairwise-rank form: p̂_i = (1/d) Σ_r (1/n_r)(R̄_i^(i+r) - (n_i+1)/2),
    /// with the r = i term fixed at 1/2.
    fn pairwise_effects(data: &Dataset) -> Vec<f64> {
        let d = data.n_cells();
        (0..d)
            .map(|i| {
                let xi = data.cell(i);
                let ni = xi.len() as f64;
                let sum: f64 = (0..d)
                    .map(|r| {
                        if r == i {
                            return 0.5;
                        }
                        let xr = data.cell(r);
                        let joint: Vec<f64> = xi.iter().chain(xr).copied().collect();
                        let ranks = midranks(&joint);
                        let mean_i = ranks[..xi.len()].iter().sum::<f64>() / ni;
                        (mean_i - (ni + 1.0) / 2.0) / xr.len() as f64
                    })
                    .sum();
                sum / d as f64
            })
            .collect()
    }

    /// Direct O(N²) evaluation of ∫ Ĝ dF̂_i by counting.
    fn brute_effects(data: &Dataset, weighted: bool) -> Vec<f64> {
        let d = data.n_cells();
        let n_total = data.total() as f64;
        let edf = |r: usize, x: f64| {
            let cell = data.cell(r);
            let below = cell.iter().filter(|&&y| y < x).count() as f64;
            let eq = cell.iter().filter(|&&y| y == x).count() as f64;
            (below + 0.5 * eq) / cell.len() as f64
        };
        (0..d)
            .map(|i| {
                let cell = data.cell(i);
                cell.iter()
                    .map(|&x| {
                        (0..d)
                            .map(|r| {
                                let w = if weighted {
                                    data.cell(r).len() as f64 / n_total
                                } else {
                                    1.0 / d as f64
                                };
                                w * edf(r, x)
                            })
                            .sum::<f64>()
                    })
                    .sum::<f64>()
                    / cell.len() as f64
            })
            .collect()
    }

    #[test]
    fn midrank_examples() {
        assert_eq!(midranks(&[1.0, 1.0, 2.0, 3.0]), vec![1.5, 1.5, 3.0, 4.0]);
        assert_eq!(midranks(&[5.0]), vec![1.0]);
        assert_eq!(midranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
        assert_eq!(midranks(&[2.0, 2.0, 2.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn effects_examples() {
        assert_eq!(pseudo_effects(&two_groups()).unwrap(), vec![0.25, 0.75]);
        let same = Dataset::one_way(vec![vec![1.0, 5.0, 2.0], vec![5.0, 2.0, 1.0], vec![2.0, 1.0, 5.0]])
            .unwrap();
        assert_eq!(pseudo_effects(&same).unwrap(), vec![0.5; 3]);
    }

    #[test]
    fn variance_examples() {
        let (s2, v) = rank_variances(&two_groups()).unwrap();
        assert_eq!(s2, vec![1.0 / 32.0, 1.0 / 32.0]);
        assert_eq!(v, Matrix::from_diagonal(&[1.0 / 16.0, 1.0 / 16.0]));

        let flat = Dataset::one_way(vec![vec![7.0, 7.0, 7.0], vec![1.0, 9.0]]).unwrap();
        assert_eq!(rank_variances(&flat).unwrap().0[0], 0.0);

        let single = Dataset::one_way(vec![vec![1.0], vec![2.0, 3.0]]).unwrap();
        assert!(matches!(rank_variances(&single), Err(Error::Domain(_))));
    }

    #[test]
    fn summary_is_consistent() {
        let data = Dataset::one_way(vec![vec![1.0, 2.0, 2.0], vec![2.0, 3.0], vec![0.5, 9.0, 3.0]]).unwrap();
        let s = RankSummary::compute(&data).unwrap();
        let n = data.total() as f64;
        assert_eq!(s.overall_midranks.iter().sum::<f64>(), n * (n + 1.0) / 2.0);
        assert_eq!(s.effects, pseudo_effects(&data).unwrap());
        for (i, &size) in data.design().cell_sizes().iter().enumerate() {
            assert!((s.v_n.get(i, i) - n * s.rank_variances[i] / size as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn unweighted_differs_from_weighted_on_unbalanced_data() {
        let data = Dataset::one_way(vec![vec![1.0, 4.0], vec![2.0, 3.0, 5.0, 6.0, 7.0, 8.0], vec![0.0, 9.0, 4.5]])
            .unwrap();
        let unweighted = pseudo_effects(&data).unwrap();
        let weighted = brute_effects(&data, true);
        assert!(unweighted.iter().zip(&weighted).any(|(a, b)| (a - b).abs() > 1e-3));
        let direct = brute_effects(&data, false);
        for (a, b) in unweighted.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        prop::collection::vec(prop::collection::vec(0i32..6, 1..6), 2..5).prop_filter_map(
            "need N >= d + 1",
            |cells| {
                let cells: Vec<Vec<f64>> =
                    cells.into_iter().map(|c| c.into_iter().map(f64::from).collect()).collect();
                Dataset::one_way(cells).ok()
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn pairwise_and_direct_effects_agree(data in arb_dataset()) {
            let fast = pseudo_effects(&data).unwrap();
            let pairwise = pairwise_effects(&data);
            let brute = brute_effects(&data, false);
            for i in 0..fast.len() {
                prop_assert!((fast[i] - pairwise[i]).abs() < 1e-12);
                prop_assert!((fast[i] - brute[i]).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&fast[i]));
            }
            let mean = fast.iter().sum::<f64>() / fast.len() as f64;
            prop_assert!((mean - 0.5).abs() < 1e-12);
        }

        #[test]
        fn rank_sum_identity(values in prop::collection::vec(-3i32..3, 1..40)) {
            let v: Vec<f64> = values.into_iter().map(f64::from).collect();
            let n = v.len() as f64;
            prop_assert_eq!(midranks(&v).iter().sum::<f64>(), n * (n + 1.0) / 2.0);
        }

        #[test]
        fn monotone_transforms_leave_ranks_unchanged(data in arb_dataset()) {
            prop_assume!(data.design().cell_sizes().iter().all(|&n| n >= 2));
            let t = data.map(|x| (0.3 * x).exp() + x.powi(3)).unwrap();
            prop_assert_eq!(pseudo_effects(&data).unwrap(), pseudo_effects(&t).unwrap());
            prop_assert_eq!(rank_variances(&data).unwrap(), rank_variances(&t).unwrap());
        }
    }

    #[test]
    fn effects_need_nonempty_cells() {
        assert!(Design::one_way(vec![0, 2]).is_err());
    }
}
