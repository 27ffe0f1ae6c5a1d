use crate::error::{OjaError, Result};
use crate::geometry::hyperplane_from_indices;
use crate::linalg::{column_means, Matrix};
use crate::scalar::Scalar;
use crate::subsets::{binomial, SubsetCursor};

/// `n` observations of dimension `k`, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix<T> {
    rows: Vec<Vec<T>>,
    k: usize,
}

impl<T: Scalar> DataMatrix<T> {
    /// Validates shape and finiteness. Requires `n ≥ 1` and `k ≥ 1`.
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let k = rows.first().map(Vec::len).ok_or_else(|| OjaError::InvalidInput("no observations".into()))?;
        if k == 0 {
            return Err(OjaError::InvalidInput("dimension must be at least 1".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(OjaError::InvalidInput(format!(
                    "row {} has {} values, expected {k}",
                    i + 1,
                    r.len()
                )));
            }
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(OjaError::InvalidInput(format!("non-finite value at row {}, column {}", i + 1, j + 1)));
            }
        }
        Ok(Self { rows, k })
    }

    pub fn from_f64_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| r.iter().map(|&v| T::lit(v)).collect()).collect())
    }

    /// Univariate sample as an `n×1` matrix.
    pub fn univariate(values: &[T]) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect())
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn mean(&self) -> Vec<T> {
        column_means(&self.rows)
    }

    /// Fails unless `n > k`, the size the median algorithms need.
    pub fn require_median_size(&self) -> Result<()> {
        if self.n() <= self.k {
            return Err(OjaError::TooFewObservations { n: self.n(), k: self.k });
        }
        Ok(())
    }

    pub fn check_point(&self, x: &[T]) -> Result<()> {
        if x.len() != self.k {
            return Err(OjaError::DimensionMismatch { expected: self.k, got: x.len() });
        }
        Ok(())
    }

    /// Per-coordinate `(min, max)`.
    pub fn coordinate_ranges(&self) -> Vec<(T, T)> {
        (0..self.k)
            .map(|j| {
                self.rows.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])))
            })
            .collect()
    }

    /// Largest coordinate range, or 1 for a single repeated point.
    pub fn scale(&self) -> T {
        let s = self.coordinate_ranges().iter().fold(T::zero(), |m, &(lo, hi)| m.max(hi - lo));
        if s > T::zero() {
            s
        } else {
            T::one()
        }
    }

    /// Rows mapped through `x ↦ A x + b`.
    pub fn affine(&self, a: &Matrix<T>, b: &[T]) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| a.matvec(r).iter().zip(b).map(|(&v, &s)| v + s).collect())
            .collect();
        Self { rows, k: self.k }
    }

    pub fn translate(&self, b: &[T]) -> Self {
        let rows = self.rows.iter().map(|r| r.iter().zip(b).map(|(&v, &s)| v + s).collect()).collect();
        Self { rows, k: self.k }
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self { rows: idx.iter().map(|&i| self.rows[i].clone()).collect(), k: self.k }
    }

    /// Counts degenerate spanning `k`-tuples; `None` when `C(n, k)` exceeds `cap`.
    pub fn general_position(&self, cap: u64) -> Option<GeneralPosition> {
        let total = binomial(self.n(), self.k);
        if total > cap as u128 {
            return None;
        }
        let mut cur = SubsetCursor::new(self.n(), self.k);
        let mut degenerate = 0usize;
        while let Some(t) = cur.advance() {
            if hyperplane_from_indices(self, t).is_degenerate() {
                degenerate += 1;
            }
        }
        Some(GeneralPosition { tuples: total as usize, degenerate_tuples: degenerate })
    }
}

/// Diagnostics on how far the sample is from general position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneralPosition {
    pub tuples: usize,
    pub degenerate_tuples: usize,
}

impl GeneralPosition {
    pub fn is_general(&self) -> bool {
        self.degenerate_tuples == 0
    }
}
