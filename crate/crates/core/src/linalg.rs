//! Dense small-matrix routines: LU determinants and solves, symmetric
//! eigendecomposition (cyclic Jacobi), scatter matrices and their inverse
//! square roots.

use std::ops::{Index, IndexMut};

use crate::error::{OjaError, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major buffer has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(l, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &a| m.max(a.abs()))
    }

    pub fn det(&self) -> T {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        det_in_place(&mut self.data.clone(), self.rows)
    }

    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let lu = Lu::factor(self.data.clone(), n)?;
        let mut inv = Self::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let col = lu.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Some(inv)
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorisation with partial pivoting of a row-major `n×n` buffer.
pub(crate) struct Lu<T> {
    lu: Vec<T>,
    perm: Vec<usize>,
    n: usize,
}

impl<T: Scalar> Lu<T> {
    /// Returns `None` when a pivot is exactly zero.
    pub(crate) fn factor(mut a: Vec<T>, n: usize) -> Option<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (p, pmax) = (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == T::zero() {
                return None;
            }
            if p != col {
                for j in 0..n {
                    a.swap(p * n + j, col * n + j);
                }
                perm.swap(p, col);
            }
            let pivot = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / pivot;
                a[r * n + col] = f;
                if f != T::zero() {
                    for j in col + 1..n {
                        a[r * n + j] = a[r * n + j] - f * a[col * n + j];
                    }
                }
            }
        }
        Some(Self { lu: a, perm, n })
    }

    pub(crate) fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s = s - self.lu[i * n + j] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s = s - self.lu[i * n + j] * y[j];
            }
            y[i] = s / self.lu[i * n + i];
        }
        y
    }
}

/// Determinant of a row-major `n×n` buffer by LU with partial pivoting.
/// The buffer is overwritten.
pub fn det_in_place<T: Scalar>(a: &mut [T], n: usize) -> T {
    if n == 0 {
        return T::one();
    }
    let mut det = T::one();
    for col in 0..n {
        let mut p = col;
        let mut pmax = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > pmax {
                pmax = v;
                p = r;
            }
        }
        if pmax == T::zero() {
            return T::zero();
        }
        if p != col {
            for j in 0..n {
                a.swap(p * n + j, col * n + j);
            }
            det = -det;
        }
        let pivot = a[col * n + col];
        det = det * pivot;
        for r in col + 1..n {
            let f = a[r * n + col] / pivot;
            if f != T::zero() {
                for j in col + 1..n {
                    a[r * n + j] = a[r * n + j] - f * a[col * n + j];
                }
            }
        }
    }
    det
}

/// Solves `A x = b` for a row-major `n×n` matrix; `None` if singular.
pub fn solve<T: Scalar>(a: &[T], b: &[T], n: usize) -> Option<Vec<T>> {
    let lu = Lu::factor(a.to_vec(), n)?;
    let x = lu.solve(b);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// the columns of the second matrix.
pub fn symmetric_eigen<T: Scalar>(s: &Matrix<T>) -> (Vec<T>, Matrix<T>) {
    let n = s.rows();
    assert_eq!(n, s.cols(), "eigendecomposition of a non-square matrix");
    let mut a = s.clone();
    let mut v = Matrix::identity(n);
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in 0..i {
                off = off + a[(i, j)] * a[(i, j)];
            }
        }
        let diag: T = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
        if off <= eps * eps * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.sgn_or_one() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, new)] = v[(r, old)];
        }
    }
    (values, vectors)
}

trait SgnOrOne {
    fn sgn_or_one(self) -> Self;
}

impl<T: Scalar> SgnOrOne for T {
    fn sgn_or_one(self) -> Self {
        if self < T::zero() {
            -T::one()
        } else {
            T::one()
        }
    }
}

/// `V diag(f(λ)) Vᵀ` for a symmetric matrix.
fn spectral_map<T: Scalar>(values: &[T], vectors: &Matrix<T>, f: impl Fn(T) -> T) -> Matrix<T> {
    let n = values.len();
    let mut out = Matrix::zeros(n, n);
    for (l, &lam) in values.iter().enumerate() {
        let w = f(lam);
        if w == T::zero() {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = out[(i, j)] + w * vectors[(i, l)] * vectors[(j, l)];
            }
        }
    }
    out
}

/// Sample covariance (divisor `n − 1`) of the rows of `rows`.
pub fn covariance_matrix<T: Scalar>(rows: &[Vec<T>]) -> Matrix<T> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    let mean = column_means(rows);
    let mut cov = Matrix::zeros(k, k);
    for r in rows {
        for i in 0..k {
            let di = r[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] = cov[(i, j)] + di * (r[j] - mean[j]);
            }
        }
    }
    let denom = T::from_usize_lossy(n.saturating_sub(1).max(1));
    for i in 0..k {
        for j in 0..=i {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

pub fn column_means<T: Scalar>(rows: &[Vec<T>]) -> Vec<T> {
    let k = rows.first().map_or(0, Vec::len);
    let n = T::from_usize_lossy(rows.len().max(1));
    let mut mean = vec![T::zero(); k];
    for r in rows {
        for (m, &x) in mean.iter_mut().zip(r) {
            *m = *m + x;
        }
    }
    mean.iter_mut().for_each(|m| *m = *m / n);
    mean
}

/// Symmetric `R` with `R S R = I`.
pub fn inverse_sqrt_psd<T: Scalar>(s: &Matrix<T>) -> Result<Matrix<T>> {
    let (values, vectors) = symmetric_eigen(s);
    let largest = values.last().copied().unwrap_or_else(T::zero);
    let smallest = values.first().copied().unwrap_or_else(T::zero);
    if largest <= T::zero() || smallest <= T::lit(1e-12) * largest {
        let ratio = if largest > T::zero() { (smallest / largest).to_f64_lossy() } else { 0.0 };
        return Err(OjaError::SingularScatter { ratio });
    }
    Ok(spectral_map(&values, &vectors, |l| T::one() / l.sqrt()))
}

/// Symmetric square root of a positive definite matrix.
pub fn sqrt_psd<T: Scalar>(s: &Matrix<T>) -> Matrix<T> {
    let (values, vectors) = symmetric_eigen(s);
    spectral_map(&values, &vectors, |l| l.max(T::zero()).sqrt())
}

/// Moore–Penrose pseudo-inverse of a symmetric PSD matrix on the subspace of
/// eigenvalues above `rel_tol · λ_max`. Also returns the numerical rank.
pub fn pseudo_inverse_psd<T: Scalar>(s: &Matrix<T>, rel_tol: T) -> (Matrix<T>, usize) {
    let (values, vectors) = symmetric_eigen(s);
    let largest = values.iter().fold(T::zero(), |m, &v| m.max(v));
    if largest <= T::zero() {
        return (Matrix::zeros(s.rows(), s.cols()), 0);
    }
    let cut = rel_tol * largest;
    let rank = values.iter().filter(|&&v| v > cut).count();
    let inv = spectral_map(&values, &vectors, |l| if l > cut { T::one() / l } else { T::zero() });
    (inv, rank)
}
