//! Factorial layouts and their hypothesis contrasts.
//!
//! Cells of a two-way `a x b` design are ordered row-major in `(i, j)`, with
//! factor A varying slowest; this is the order in which Kronecker products of
//! the per-factor matrices index the cell mean vector.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Group structure of a factorial layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    factors: Vec<usize>,
    cell_sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl Design {
    pub fn new(factors: Vec<usize>, cell_sizes: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.iter().any(|&l| l < 2) {
            return Err(Error::domain(format!(
                "every factor needs at least two levels, got {factors:?}"
            )));
        }
        let cells: usize = factors.iter().product();
        if cell_sizes.len() != cells {
            return Err(Error::domain(format!(
                "{cells} cells but {} cell sizes",
                cell_sizes.len()
            )));
        }
        if let Some(i) = cell_sizes.iter().position(|&n| n == 0) {
            return Err(Error::domain(format!("cell {} is empty", i + 1)));
        }
        let mut offsets = Vec::with_capacity(cells + 1);
        let mut acc = 0;
        offsets.push(0);
        for &n in &cell_sizes {
            acc += n;
            offsets.push(acc);
        }
        Ok(Self {
            factors,
            cell_sizes,
            offsets,
        })
    }

    pub fn one_way(cell_sizes: Vec<usize>) -> Result<Self> {
        Self::new(vec![cell_sizes.len()], cell_sizes)
    }

    /// `a x b` layout; `cell_sizes` in A-major order.
    pub fn two_way(a: usize, b: usize, cell_sizes: Vec<usize>) -> Result<Self> {
        Self::new(vec![a, b], cell_sizes)
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn cell_sizes(&self) -> &[usize] {
        &self.cell_sizes
    }

    pub fn n_cells(&self) -> usize {
        self.cell_sizes.len()
    }

    pub fn total(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn is_one_way(&self) -> bool {
        self.factors.len() == 1
    }

    /// Range of cell `i` in the pooled, cell-major observation vector.
    pub fn cell_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Same layout, different cell sizes.
    pub fn with_sizes(&self, cell_sizes: Vec<usize>) -> Result<Self> {
        Self::new(self.factors.clone(), cell_sizes)
    }

    pub fn hypothesis(&self, kind: HypothesisKind) -> Result<Hypothesis> {
        let contrast = match (kind, self.factors.as_slice()) {
            (HypothesisKind::Overall, _) => centering_matrix(self.n_cells())?,
            (HypothesisKind::MainA, &[a, b]) => contrasts_two_way(a, b)?.a,
            (HypothesisKind::MainB, &[a, b]) => contrasts_two_way(a, b)?.b,
            (HypothesisKind::Interaction, &[a, b]) => contrasts_two_way(a, b)?.ab,
            (HypothesisKind::Custom, _) => {
                return Err(Error::domain("custom hypotheses are built with Hypothesis::custom"))
            }
            (kind, _) => {
                return Err(Error::domain(format!(
                    "hypothesis {kind} needs a two-way layout, design has factors {:?}",
                    self.factors
                )))
            }
        };
        Ok(Hypothesis { kind, contrast })
    }

    /// The overall hypothesis for a one-way layout, the interaction for a two-way layout.
    pub fn default_hypothesis(&self) -> Result<Hypothesis> {
        if self.factors.len() == 2 {
            self.hypothesis(HypothesisKind::Interaction)
        } else {
            self.hypothesis(HypothesisKind::Overall)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HypothesisKind {
    Overall,
    MainA,
    MainB,
    Interaction,
    Custom,
}

impl fmt::Display for HypothesisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HypothesisKind::Overall => "overall",
            HypothesisKind::MainA => "A",
            HypothesisKind::MainB => "B",
            HypothesisKind::Interaction => "AB",
            HypothesisKind::Custom => "custom",
        })
    }
}

/// A linear hypothesis `C mu = 0` (or `C F = 0` for the rank procedures).
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    kind: HypothesisKind,
    contrast: Matrix,
}

impl Hypothesis {
    pub fn custom(contrast: Matrix) -> Result<Self> {
        if contrast.max_abs() == 0.0 {
            return Err(Error::domain("contrast matrix is zero"));
        }
        Ok(Self {
            kind: HypothesisKind::Custom,
            contrast,
        })
    }

    pub fn kind(&self) -> HypothesisKind {
        self.kind
    }

    pub fn contrast(&self) -> &Matrix {
        &self.contrast
    }
}

/// `P_d = I_d - J_d / d`.
pub fn centering_matrix(d: usize) -> Result<Matrix> {
    if d < 2 {
        return Err(Error::domain(format!("centering matrix needs d >= 2, got {d}")));
    }
    Ok(&Matrix::identity(d) - &Matrix::ones(d, d).scale(1.0 / d as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoWayContrasts {
    pub a: Matrix,
    pub b: Matrix,
    pub ab: Matrix,
}

/// Main-effect and interaction contrasts of an `a x b` layout.
pub fn contrasts_two_way(a: usize, b: usize) -> Result<TwoWayContrasts> {
    if a < 2 || b < 2 {
        return Err(Error::domain(format!("two-way contrasts need a, b >= 2, got {a}, {b}")));
    }
    let pa = centering_matrix(a)?;
    let pb = centering_matrix(b)?;
    let mean_a = Matrix::ones(1, a).scale(1.0 / a as f64);
    let mean_b = Matrix::ones(1, b).scale(1.0 / b as f64);
    Ok(TwoWayContrasts {
        a: pa.kronecker(&mean_b),
        b: mean_a.kronecker(&pb),
        ab: pa.kronecker(&pb),
    })
}

/// Projector onto the row space of `C`: `M = C'(CC')^+ C`, and `D_M = diag(M)`.
pub fn projection(contrast: &Matrix) -> Result<(Matrix, Matrix)> {
    if contrast.max_abs() == 0.0 {
        return Err(Error::domain("projection of a zero contrast"));
    }
    let ct = contrast.transpose();
    let gram = contrast * &ct;
    let m = &(&ct * &gram.moore_penrose(0.0)?) * contrast;
    let dm = m.diagonal_part();
    Ok((m, dm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frac(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn centering_examples() {
        assert_eq!(centering_matrix(2).unwrap(), frac(&[&[0.5, -0.5], &[-0.5, 0.5]]));
        let p3 = centering_matrix(3).unwrap();
        let (t, h) = (2.0 / 3.0, -1.0 / 3.0);
        assert!(p3.max_abs_diff(&frac(&[&[t, h, h], &[h, t, h], &[h, h, t]])) < 1e-15);
        for d in 2..=10 {
            let p = centering_matrix(d).unwrap();
            assert!(p.mul_vec(&vec![1.0; d]).iter().all(|v| v.abs() < 1e-14));
            assert!((&p * &p).max_abs_diff(&p) < 1e-14);
            assert!((p.trace() - (d - 1) as f64).abs() < 1e-12);
        }
        assert!(centering_matrix(1).is_err());
    }

    #[test]
    fn two_way_examples() {
        let c = contrasts_two_way(2, 2).unwrap();
        let expected = frac(&[&[0.25, 0.25, -0.25, -0.25], &[-0.25, -0.25, 0.25, 0.25]]);
        assert!(c.a.max_abs_diff(&expected) < 1e-15);
        assert!(c.ab.mul_vec(&[1.0; 4]).iter().all(|v| v.abs() < 1e-15));

        let c = contrasts_two_way(2, 3).unwrap();
        assert_eq!((c.a.rows(), c.a.cols()), (2, 6));
        assert_eq!((c.b.rows(), c.b.cols()), (3, 6));
        assert_eq!((c.ab.rows(), c.ab.cols()), (6, 6));
        for m in [&c.a, &c.b, &c.ab] {
            assert!(m.mul_vec(&[3.7; 6]).iter().all(|v| v.abs() < 1e-14));
        }
        assert!(contrasts_two_way(1, 3).is_err());
        assert!(contrasts_two_way(2, 1).is_err());
    }

    #[test]
    fn interaction_contrast_ignores_additive_means() {
        let c = contrasts_two_way(2, 3).unwrap();
        // mu_ij = alpha_i + beta_j
        let mu: Vec<f64> = [1.0, -1.0]
            .iter()
            .flat_map(|a| [0.5, 2.0, -2.5].iter().map(move |b| a + b))
            .collect();
        assert!(c.ab.mul_vec(&mu).iter().all(|v| v.abs() < 1e-14));
        assert!(c.a.mul_vec(&mu).iter().any(|v| v.abs() > 0.1));
    }

    #[test]
    fn projection_examples() {
        let p2 = centering_matrix(2).unwrap();
        let (m, dm) = projection(&p2).unwrap();
        assert!(m.max_abs_diff(&p2) < 1e-14);
        assert!(dm.max_abs_diff(&Matrix::from_diagonal(&[0.5, 0.5])) < 1e-14);

        let (m, _) = projection(&Matrix::row_vector(&[1.0, -1.0])).unwrap();
        assert!(m.max_abs_diff(&p2) < 1e-14);

        let ab = contrasts_two_way(2, 2).unwrap().ab;
        let (m, _) = projection(&ab).unwrap();
        assert!((&m * &m).max_abs_diff(&m) < 1e-12);
        assert!((m.trace() - 1.0).abs() < 1e-12);

        assert!(projection(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn projectors_are_idempotent_with_trace_rank() {
        for (a, b) in [(2, 2), (2, 5), (3, 4)] {
            let c = contrasts_two_way(a, b).unwrap();
            let cases = [
                (c.a, a - 1),
                (c.b, b - 1),
                (c.ab, (a - 1) * (b - 1)),
                (centering_matrix(a * b).unwrap(), a * b - 1),
            ];
            for (contrast, rank) in cases {
                let (m, _) = projection(&contrast).unwrap();
                assert!((&m * &m).max_abs_diff(&m) < 1e-12);
                assert!(m.max_abs_diff(&m.transpose()) < 1e-12);
                assert!((m.trace() - rank as f64).abs() < 1e-10);
                assert_eq!(contrast.rank().unwrap(), rank);
            }
        }
    }

    #[test]
    fn two_way_projectors_are_mutually_orthogonal() {
        for (a, b) in [(2, 2), (2, 5), (3, 4)] {
            let c = contrasts_two_way(a, b).unwrap();
            let ma = projection(&c.a).unwrap().0;
            let mb = projection(&c.b).unwrap().0;
            let mab = projection(&c.ab).unwrap().0;
            let zero = Matrix::zeros(a * b, a * b);
            assert!((&ma * &mb).max_abs_diff(&zero) < 1e-12);
            assert!((&ma * &mab).max_abs_diff(&zero) < 1e-12);
            assert!((&mb * &mab).max_abs_diff(&zero) < 1e-12);
        }
    }

    #[test]
    fn design_validation() {
        assert!(Design::one_way(vec![3]).is_err());
        assert!(Design::one_way(vec![3, 0]).is_err());
        assert!(Design::two_way(2, 2, vec![1, 1, 1]).is_err());
        let d = Design::two_way(2, 3, vec![1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(d.total(), 21);
        assert_eq!(d.cell_range(2), 3..6);
        assert!(Design::one_way(vec![2, 2]).unwrap().hypothesis(HypothesisKind::MainA).is_err());
        assert_eq!(d.default_hypothesis().unwrap().kind(), HypothesisKind::Interaction);
    }

    proptest! {
        #[test]
        fn projection_depends_only_on_row_space(
            scales in prop::collection::vec(0.2f64..5.0, 3),
            signs in prop::collection::vec(prop::bool::ANY, 3),
            swap in 0usize..3,
        ) {
            let c = contrasts_two_way(2, 4).unwrap().b; // 4 x 8, rank 3
            let (m, _) = projection(&c).unwrap();
            let mut rows: Vec<Vec<f64>> = (0..c.rows()).map(|i| c.row(i).to_vec()).collect();
            for (i, row) in rows.iter_mut().take(3).enumerate() {
                let s = if signs[i] { scales[i] } else { -scales[i] };
                row.iter_mut().for_each(|v| *v *= s);
            }
            rows.swap(swap, 3);
            let (m2, _) = projection(&Matrix::from_rows(&rows).unwrap()).unwrap();
            prop_assert!(m.max_abs_diff(&m2) < 1e-10);
        }
    }
}
