//! Bordered determinants: hyperplanes spanned by `k` points, simplex
//! volumes, and gradients of absolute determinants.
//!
//! For spanning points `p_1, …, p_k ∈ ℝ^k` the bordered matrix
//!
//! ```text
//!     | 1    1   …  1    1 |
//!     | p_1  p_2 …  p_k  x |
//! ```
//!
//! has a determinant that is affine in `x`. Its coefficients are read off by
//! cofactor expansion along the last column; every minor is an LU determinant.

use crate::data::DataMatrix;
use crate::linalg::det_in_place;
use crate::scalar::{dot, factorial, Scalar};
use crate::subsets::IndexTuple;

/// Relative degeneracy threshold for spanning sets.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Where a hyperplane came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// Spanned by the listed observations.
    Tuple(IndexTuple),
    /// Not spanned by data, e.g. a bound of a search region.
    Synthetic,
}

/// Affine functional `x ↦ offset + normal · x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane<T> {
    pub offset: T,
    pub normal: Vec<T>,
    pub source: Source,
}

impl<T: Scalar> Hyperplane<T> {
    pub fn synthetic(offset: T, normal: Vec<T>) -> Self {
        Self { offset, normal, source: Source::Synthetic }
    }

    pub fn zero(k: usize) -> Self {
        Self { offset: T::zero(), normal: vec![T::zero(); k], source: Source::Synthetic }
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn signed_eval(&self, x: &[T]) -> T {
        self.offset + dot(&self.normal, x)
    }

    pub fn is_degenerate(&self) -> bool {
        self.normal.iter().all(|&c| c == T::zero())
    }

    /// `sgn(signed_eval(x))`, with values inside the rounding envelope
    /// `|offset| + Σ |c_j x_j|` treated as zero.
    pub fn side(&self, x: &[T]) -> T {
        side_of(self.offset, &self.normal, x)
    }

    /// Euclidean distance of `x` to the hyperplane (infinite when degenerate).
    pub fn distance(&self, x: &[T]) -> T {
        let nn = dot(&self.normal, &self.normal).sqrt();
        if nn == T::zero() {
            return T::infinity();
        }
        self.signed_eval(x).abs() / nn
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = source;
        self
    }
}

pub(crate) fn zero_tol<T: Scalar>() -> T {
    T::epsilon() * T::lit(1e4)
}

pub(crate) fn side_of<T: Scalar>(offset: T, normal: &[T], x: &[T]) -> T {
    let mut v = offset;
    let mut mag = offset.abs();
    for (&c, &xi) in normal.iter().zip(x) {
        let t = c * xi;
        v = v + t;
        mag = mag + t.abs();
    }
    if v.abs() <= zero_tol::<T>() * mag {
        T::zero()
    } else {
        v.sgn()
    }
}

/// Hyperplane through `k` points of dimension `k`. Degenerate spanning sets
/// give the zero hyperplane.
pub fn hyperplane_from_points<T: Scalar>(points: &[&[T]]) -> Hyperplane<T> {
    let k = points.len();
    assert!(k >= 1, "need at least one spanning point");
    assert!(points.iter().all(|p| p.len() == k), "spanning points must have dimension k");

    // scale of the spanning set, translation invariant
    let mut s = T::zero();
    for p in &points[1..] {
        for (a, b) in p.iter().zip(points[0]) {
            s = s.max((*a - *b).abs());
        }
    }
    if k >= 2 && s == T::zero() {
        return Hyperplane::zero(k);
    }

    // Minor r removes row r of the (k+1)×k matrix with rows (1,…,1) and the
    // k coordinate rows of the spanning points.
    let mut buf = vec![T::zero(); k * k];
    let mut minor = |skip: usize| {
        let mut row = 0;
        for r in 0..=k {
            if r == skip {
                continue;
            }
            for (j, p) in points.iter().enumerate() {
                buf[row * k + j] = if r == 0 { T::one() } else { p[r - 1] };
            }
            row += 1;
        }
        det_in_place(&mut buf, k)
    };
    let sign = |r: usize| if (r + k) % 2 == 0 { T::one() } else { -T::one() };

    let offset = sign(0) * minor(0);
    let normal: Vec<T> = (1..=k).map(|r| sign(r) * minor(r)).collect();

    let scale = s.powi(k as i32 - 1);
    let biggest = normal.iter().fold(T::zero(), |m, &c| m.max(c.abs()));
    if biggest <= T::lit(DEGENERACY_TOL) * scale {
        return Hyperplane::zero(k);
    }
    Hyperplane { offset, normal, source: Source::Synthetic }
}

/// Hyperplane spanned by the observations of `tuple` (0-based indices).
pub fn hyperplane_from_indices<T: Scalar>(x: &DataMatrix<T>, tuple: &[usize]) -> Hyperplane<T> {
    let pts: Vec<&[T]> = tuple.iter().map(|&i| x.row(i)).collect();
    hyperplane_from_points(&pts).with_source(Source::Tuple(IndexTuple(tuple.to_vec())))
}

/// Volume of the simplex with the given `k + 1` vertices in `ℝ^k`.
pub fn simplex_volume<T: Scalar>(points: &[&[T]]) -> T {
    let m = points.len();
    let k = m.saturating_sub(1);
    assert!(m >= 2 && points.iter().all(|p| p.len() == k), "need k+1 points of dimension k");
    let mut buf = vec![T::zero(); m * m];
    for (j, p) in points.iter().enumerate() {
        buf[j] = T::one();
        for r in 0..k {
            buf[(r + 1) * m + j] = p[r];
        }
    }
    det_in_place(&mut buf, m).abs() / factorial::<T>(k)
}

/// Gradient of `x ↦ |h(x)|`, with the derivative of `|·|` taken as zero at 0.
pub fn abs_det_gradient<T: Scalar>(h: &Hyperplane<T>, x: &[T]) -> Vec<T> {
    let s = h.side(x);
    h.normal.iter().map(|&c| s * c).collect()
}

/// Direction of the line `{x : n_1·x = c_1, …, n_{k-1}·x = c_{k-1}}` given the
/// `k − 1` normals, as the vector of signed cofactors. Zero when the normals
/// are linearly dependent.
pub fn cross_direction<T: Scalar>(normals: &[&[T]], k: usize) -> Vec<T> {
    assert_eq!(normals.len() + 1, k, "need k-1 normals");
    if k == 1 {
        return vec![T::one()];
    }
    let m = k - 1;
    let mut buf = vec![T::zero(); m * m];
    (0..k)
        .map(|skip| {
            for (r, n) in normals.iter().enumerate() {
                let mut c = 0;
                for (j, &v) in n.iter().enumerate() {
                    if j != skip {
                        buf[r * m + c] = v;
                        c += 1;
                    }
                }
            }
            let d = det_in_place(&mut buf, m);
            if (skip + m) % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect()
}
