//! Small dense real matrices.
//!
//! Every matrix in this crate is at most a few dozen entries on a side, so
//! storage is a flat row-major `Vec<f64>` and all operations return fresh
//! values. The singular value decomposition uses one-sided Jacobi rotations,
//! which is accurate to working precision for matrices of this size.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    /// Builds a matrix from row-major entries. Rejects a length mismatch and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::domain(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite matrix entry {bad}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::domain("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Matrix of ones, `J` when square.
    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![1.0; rows * cols],
        }
    }

    /// Square diagonal matrix with the given diagonal.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// A `1 x n` row vector.
    pub fn row_vector(values: &[f64]) -> Self {
        Self {
            rows: 1,
            cols: values.len(),
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Diagonal entries (of the leading square block).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    /// `diag(A)` as a matrix: the diagonal kept, everything else zeroed.
    pub fn diagonal_part(&self) -> Self {
        Self::from_diagonal(&self.diagonal())
    }

    /// # Panics
    /// Panics if the matrix is not square.
    pub fn trace(&self) -> f64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        self.diagonal().iter().sum()
    }

    /// # Panics
    /// Panics if `x.len() != self.cols()`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `x' A x` for square `A`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn kronecker(&self, other: &Matrix) -> Matrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.data[(i * other.rows + k) * cols + j * other.cols + l] =
                            a * other.get(k, l);
                    }
                }
            }
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max-norm of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn svd(&self) -> Result<Svd> {
        Svd::compute(self)
    }

    /// Moore-Penrose pseudoinverse. Singular values at or below `tol` are
    /// treated as zero; `tol == 0` selects `eps * max(rows, cols) * sigma_max`.
    pub fn moore_penrose(&self, tol: f64) -> Result<Matrix> {
        if tol < 0.0 || !tol.is_finite() {
            return Err(Error::domain(format!("pseudoinverse tolerance {tol}")));
        }
        let svd = self.svd()?;
        let cut = svd.threshold(tol);
        let mut out = Self::zeros(self.cols, self.rows);
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s <= cut {
                continue;
            }
            let inv = 1.0 / s;
            for i in 0..self.cols {
                let vik = svd.v.get(i, k) * inv;
                if vik == 0.0 {
                    continue;
                }
                for j in 0..self.rows {
                    out.data[i * self.rows + j] += vik * svd.u.get(j, k);
                }
            }
        }
        Ok(out)
    }

    /// Numerical rank with the same default threshold as [`Matrix::moore_penrose`].
    pub fn rank(&self) -> Result<usize> {
        let svd = self.svd()?;
        let cut = svd.threshold(0.0);
        Ok(svd.singular_values.iter().filter(|&&s| s > cut).count())
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    /// # Panics
    /// Panics on a dimension mismatch.
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(rhs.row(k)) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Thin singular value decomposition `A = U diag(s) V'` with `k = min(rows, cols)`
/// singular values in no particular order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    fn compute(a: &Matrix) -> Result<Self> {
        if a.rows >= a.cols {
            one_sided_jacobi(a)
        } else {
            let t = one_sided_jacobi(&a.transpose())?;
            Ok(Svd {
                u: t.v,
                singular_values: t.singular_values,
                v: t.u,
            })
        }
    }

    pub fn max_singular_value(&self) -> f64 {
        self.singular_values.iter().fold(0.0, |m, &s| m.max(s))
    }

    fn threshold(&self, tol: f64) -> f64 {
        if tol > 0.0 {
            tol
        } else {
            let dim = self.u.rows.max(self.v.rows) as f64;
            f64::EPSILON * dim * self.max_singular_value()
        }
    }
}

/// Hestenes one-sided Jacobi for `rows >= cols`: orthogonalise the columns of
/// `A` by plane rotations accumulated into `V`.
fn one_sided_jacobi(a: &Matrix) -> Result<Svd> {
    let (m, n) = (a.rows, a.cols);
    // Column-major working copy so each column is contiguous.
    let mut w: Vec<f64> = a.transpose().data;
    let mut v = Matrix::identity(n);
    let mut converged = n < 2;
    // Columns this small are rounding noise of a rank-deficient input;
    // orthogonalizing them against each other would never settle.
    let negligible = f64::EPSILON * f64::EPSILON * w.iter().map(|x| x * x).sum::<f64>();
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (cp, cq) = (&w[p * m..(p + 1) * m], &w[q * m..(q + 1) * m]);
                let alpha: f64 = cp.iter().map(|x| x * x).sum();
                let beta: f64 = cq.iter().map(|x| x * x).sum();
                let gamma: f64 = cp.iter().zip(cq).map(|(x, y)| x * y).sum();
                if gamma == 0.0
                    || alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (w[p * m + i], w[q * m + i]);
                    w[p * m + i] = c * x - s * y;
                    w[q * m + i] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v.data[i * n + p], v.data[i * n + q]);
                    v.data[i * n + p] = c * x - s * y;
                    v.data[i * n + q] = s * x + c * y;
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "singular value decomposition did not converge in {MAX_SWEEPS} sweeps"
        )));
    }
    let mut u = Matrix::zeros(m, n);
    let mut singular_values = Vec::with_capacity(n);
    for k in 0..n {
        let col = &w[k * m..(k + 1) * m];
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        singular_values.push(norm);
        if norm > 0.0 {
            for i in 0..m {
                u.data[i * n + k] = col[i] / norm;
            }
        }
    }
    Ok(Svd {
        u,
        singular_values,
        v,
    })
}
