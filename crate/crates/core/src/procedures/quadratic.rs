//! Wald-type and ANOVA-type quadratic forms.

use crate::design::projection;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldStatistic {
    pub statistic: f64,
    /// `rank(C Ŝ C')`, the chi-square degrees of freedom.
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtsStatistic {
    pub statistic: f64,
    pub df1: f64,
    pub df2: f64,
}

fn check_shapes(estimate: &[f64], cov: &Matrix, contrast: &Matrix) -> Result<()> {
    let d = estimate.len();
    if !cov.is_square() || cov.rows() != d || contrast.cols() != d {
        return Err(Error::domain(format!(
            "shape mismatch: estimate {d}, covariance {}x{}, contrast {}x{}",
            cov.rows(),
            cov.cols(),
            contrast.rows(),
            contrast.cols()
        )));
    }
    Ok(())
}

fn negligible(v: &[f64], scale: f64) -> bool {
    v.iter().all(|x| x.abs() <= 1e-12 * scale.max(1.0))
}

/// `Q = N x' C' (C Ŝ C')⁺ C x`.
pub fn wald_type(estimate: &[f64], cov: &Matrix, contrast: &Matrix, n: usize) -> Result<WaldStatistic> {
    check_shapes(estimate, cov, contrast)?;
    let cx = contrast.mul_vec(estimate);
    let middle = &(contrast * cov) * &contrast.transpose();
    let rank = middle.rank()?;
    if middle.max_abs() == 0.0 && !negligible(&cx, estimate.iter().fold(0.0, |m, v| m.max(v.abs()))) {
        return Err(Error::degenerate("infinite Wald statistic: zero covariance with non-zero contrast"));
    }
    let q = n as f64 * middle.moore_penrose(0.0)?.quadratic_form(&cx);
    Ok(WaldStatistic {
        statistic: q.max(0.0),
        rank,
    })
}

/// `F = N x' M x / tr(D_M Ŝ)` with Box-type degrees of freedom
/// `f = tr(D_M Ŝ)² / tr(M Ŝ M Ŝ)` and `f0 = tr(D_M Ŝ)² / tr(D_M² Ŝ² Λ)`.
pub fn anova_type(
    estimate: &[f64],
    cov: &Matrix,
    lambda: &Matrix,
    contrast: &Matrix,
    n: usize,
) -> Result<AtsStatistic> {
    check_shapes(estimate, cov, contrast)?;
    if lambda.rows() != estimate.len() || !lambda.is_square() {
        return Err(Error::domain("lambda must be d x d"));
    }
    let (m, dm) = projection(contrast)?;
    let trace_ds = (&dm * cov).trace();
    if !(trace_ds > 0.0) {
        return Err(Error::degenerate("tr(D_M S) is zero"));
    }
    let ms = &m * cov;
    let trace_msms = (&ms * &ms).trace();
    let dms = &dm * cov;
    let trace_d2s2l = (&(&dms * &dms) * lambda).trace();
    if !(trace_msms > 0.0 && trace_d2s2l > 0.0) {
        return Err(Error::degenerate("ANOVA-type degrees of freedom are undefined"));
    }
    let statistic = (n as f64 * m.quadratic_form(estimate) / trace_ds).max(0.0);
    Ok(AtsStatistic {
        statistic,
        df1: trace_ds * trace_ds / trace_msms,
        df2: trace_ds * trace_ds / trace_d2s2l,
    })
}

/// A contrast prepared for repeated evaluation of `x' C' (C diag(w) C')⁺ C x`
/// with diagonal weights, as needed inside resampling loops.
///
/// When the weights are positive and not wildly different in size, the form
/// equals `y' (K diag(w) K')⁻¹ y` with `y = K x` for any orthonormal basis `K`
/// of the row space of `C`, which reduces the work to a small Cholesky
/// solve. Otherwise the pseudoinverse of `C diag(w) C'` is used directly.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    contrast: Matrix,
    basis: Matrix,
}

impl QuadraticForm {
    pub fn new(contrast: &Matrix) -> Result<Self> {
        if contrast.max_abs() == 0.0 {
            return Err(Error::domain("zero contrast matrix"));
        }
        let svd = contrast.svd()?;
        let cut = f64::EPSILON * contrast.rows().max(contrast.cols()) as f64 * svd.max_singular_value();
        let d = contrast.cols();
        let mut rows = Vec::new();
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s > cut {
                rows.extend((0..d).map(|i| svd.v.get(i, k)));
            }
        }
        let r = rows.len() / d;
        Ok(Self {
            contrast: contrast.clone(),
            basis: Matrix::new(r, d, rows)?,
        })
    }

    pub fn contrast(&self) -> &Matrix {
        &self.contrast
    }

    pub fn contrast_rank(&self) -> usize {
        self.basis.rows()
    }

    /// Returns the form and `rank(C diag(weights) C')`.
    pub fn evaluate(&self, x: &[f64], weights: &[f64]) -> Result<(f64, usize)> {
        let d = self.contrast.cols();
        if x.len() != d || weights.len() != d {
            return Err(Error::domain("quadratic form dimension mismatch"));
        }
        let (wmin, wmax) = weights
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &w| (lo.min(w), hi.max(w)));
        if wmin > 1e-10 * wmax {
            if let Some(q) = self.reduced(x, weights) {
                return Ok((q.max(0.0), self.basis.rows()));
            }
        }
        self.general(x, weights)
    }

    fn reduced(&self, x: &[f64], w: &[f64]) -> Option<f64> {
        let r = self.basis.rows();
        let y = self.basis.mul_vec(x);
        // A = K diag(w) K', lower triangle only.
        let mut a = vec![0.0; r * r];
        for i in 0..r {
            let ki = self.basis.row(i);
            for j in 0..=i {
                let kj = self.basis.row(j);
                a[i * r + j] = ki.iter().zip(kj).zip(w).map(|((p, q), s)| p * q * s).sum();
            }
        }
        // In-place Cholesky A = L L'.
        for j in 0..r {
            let mut diag = a[j * r + j];
            for k in 0..j {
                diag -= a[j * r + k] * a[j * r + k];
            }
            if !(diag > 0.0) {
                return None;
            }
            let l = diag.sqrt();
            a[j * r + j] = l;
            for i in j + 1..r {
                let mut s = a[i * r + j];
                for k in 0..j {
                    s -= a[i * r + k] * a[j * r + k];
                }
                a[i * r + j] = s / l;
            }
        }
        // q = |L⁻¹ y|²
        let mut z = vec![0.0; r];
        let mut q = 0.0;
        for i in 0..r {
            let mut s = y[i];
            for k in 0..i {
                s -= a[i * r + k] * z[k];
            }
            z[i] = s / a[i * r + i];
            q += z[i] * z[i];
        }
        Some(q)
    }

    fn general(&self, x: &[f64], w: &[f64]) -> Result<(f64, usize)> {
        let cov = Matrix::from_diagonal(w);
        let c = &self.contrast;
        let cx = c.mul_vec(x);
        let middle = &(c * &cov) * &c.transpose();
        if middle.max_abs() == 0.0 {
            if negligible(&cx, x.iter().fold(0.0, |m, v| m.max(v.abs()))) {
                return Ok((0.0, 0));
            }
            return Err(Error::degenerate("infinite Wald statistic: zero covariance with non-zero contrast"));
        }
        let q = middle.moore_penrose(0.0)?.quadratic_form(&cx);
        Ok((q.max(0.0), middle.rank()?))
    }
}
