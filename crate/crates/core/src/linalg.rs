//! Small dense matrices, thin SVD and the Moore-Penrose pseudoinverse.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFiniteInput { row: usize, col: usize },
    #[error("rows have unequal lengths (row {row} has {found}, expected {expected})")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("singular value decomposition did not converge")]
    NoConvergence,
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(LinalgError::Ragged { row: i, found: row.len(), expected: cols });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    /// Builds a matrix from a row-major buffer. Panics if the length is not `rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length does not match shape");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, factor: S) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * factor).collect() }
    }

    pub fn frobenius_norm(&self) -> S {
        self.data.iter().map(|&x| x * x).sum::<S>().sqrt()
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data.iter().position(|x| !x.is_finite()).map(|p| (p / self.cols, p % self.cols))
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == S::zero() {
                    continue;
                }
                let src = rhs.row(k);
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d = *d + a * b;
                }
            }
        }
        out
    }

    /// Row vector times matrix.
    pub fn left_mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.rows, "vector length differs from row count");
        let mut out = vec![S::zero(); self.cols];
        for (i, &w) in v.iter().enumerate() {
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o = *o + w * x;
            }
        }
        out
    }

    /// Matrix times column vector.
    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.cols, "vector length differs from column count");
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum()).collect()
    }

    /// Largest elementwise difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> S {
        assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).fold(S::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    pub fn cast<T: Scalar>(&self) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| T::lit(x.to_f64_lossy())).collect() }
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;

    fn index(&self, (i, j): (usize, usize)) -> &S {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Scalar> Mul for &Matrix<S> {
    type Output = Matrix<S>;

    fn mul(self, rhs: Self) -> Matrix<S> {
        self.matmul(rhs)
    }
}

impl<S: Scalar> Add for &Matrix<S> {
    type Output = Matrix<S>;

    fn add(self, rhs: Self) -> Matrix<S> {
        assert_eq!(self.shape(), rhs.shape(), "shapes differ");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<S: Scalar> Sub for &Matrix<S> {
    type Output = Matrix<S>;

    fn sub(self, rhs: Self) -> Matrix<S> {
        assert_eq!(self.shape(), rhs.shape(), "shapes differ");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<S: fmt::Debug> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

/// Thin singular value decomposition `X = U diag(sigma) Vᵀ`.
///
/// `sigma` is sorted in descending order and may contain (numerical) zeros;
/// the rank cutoff is applied by the consumer.
#[derive(Debug, Clone)]
pub struct Svd<S> {
    pub u: Matrix<S>,
    pub sigma: Vec<S>,
    pub v: Matrix<S>,
}

impl<S: Scalar> Svd<S> {
    /// Numerical rank with the given relative cutoff.
    pub fn rank(&self, relative_tol: S) -> usize {
        let max = self.sigma.first().copied().unwrap_or_else(S::zero);
        self.sigma.iter().filter(|&&s| s > relative_tol * max && s > S::zero()).count()
    }
}

/// Thin SVD with singular values sorted in descending order.
pub fn svd<S: Scalar>(x: &Matrix<S>) -> Result<Svd<S>, LinalgError> {
    if let Some((row, col)) = x.first_non_finite() {
        return Err(LinalgError::NonFiniteInput { row, col });
    }
    let (m, n) = x.shape();
    let r = m.min(n);
    if r == 0 {
        return Ok(Svd { u: Matrix::zeros(m, 0), sigma: Vec::new(), v: Matrix::zeros(n, 0) });
    }
    let raw = S::thin_svd(m, n, x.as_slice()).ok_or(LinalgError::NoConvergence)?;
    let mut order: Vec<usize> = (0..r).collect();
    order
        .sort_by(|&a, &b| raw.sigma[b].partial_cmp(&raw.sigma[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let u = Matrix::from_fn(m, r, |i, k| raw.u[i * r + order[k]]);
    let v = Matrix::from_fn(n, r, |i, k| raw.v_t[order[k] * n + i]);
    let sigma = order.iter().map(|&k| raw.sigma[k]).collect();
    Ok(Svd { u, sigma, v })
}

/// Moore-Penrose pseudoinverse `X⁺ = V Σ⁻¹ Uᵀ` over the numerically nonzero
/// singular values (those above `S::rank_tolerance()` times the largest).
pub fn pseudoinverse<S: Scalar>(x: &Matrix<S>) -> Result<Matrix<S>, LinalgError> {
    pseudoinverse_with_tolerance(x, S::rank_tolerance())
}

pub fn pseudoinverse_with_tolerance<S: Scalar>(x: &Matrix<S>, relative_tol: S) -> Result<Matrix<S>, LinalgError> {
    let dec = svd(x)?;
    let r = dec.rank(relative_tol);
    let (m, n) = x.shape();
    let mut out = Matrix::zeros(n, m);
    for k in 0..r {
        let inv = S::one() / dec.sigma[k];
        for i in 0..n {
            let vik = dec.v[(i, k)] * inv;
            if vik == S::zero() {
                continue;
            }
            for j in 0..m {
                out[(i, j)] = out[(i, j)] + vik * dec.u[(j, k)];
            }
        }
    }
    Ok(out)
}
