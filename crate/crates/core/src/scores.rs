//! Oja signs, ranks and signed ranks, their marginal and spatial
//! counterparts, and the sign/rank covariance matrices built from them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::DataMatrix;
use crate::error::{OjaError, Result};
use crate::geometry::hyperplane_from_points;
use crate::linalg::Matrix;
use crate::median::{compute_median, Algorithm, MedianConfig};
use crate::objective::Objective;
use crate::reference::{marginal_median, spatial_median};
use crate::scalar::{norm, Scalar};
use crate::subsets::{binomial, check_enumeration, enumeration_cap, SubsetCursor};

/// Seed of the evolutionary run used when a center defaults to the Oja median.
pub const DEFAULT_CENTER_SEED: u64 = 20_150_701;

/// Largest dimension accepted by [`oja_signed_rank`].
pub const MAX_SIGNED_RANK_DIM: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    Sign,
    Rank,
    SignedRank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreFamily {
    Oja,
    Marginal,
    Spatial,
}

/// Location that scores are computed with respect to.
#[derive(Debug, Clone, PartialEq)]
pub enum CenterSpec<T> {
    OjaMedian(Algorithm),
    /// Coordinatewise (marginal) median.
    CompMedian,
    SpatialMedian,
    Mean,
    Explicit(Vec<T>),
}

impl<T> Default for CenterSpec<T> {
    fn default() -> Self {
        CenterSpec::OjaMedian(Algorithm::Evolutionary)
    }
}

/// Evaluates a center specification on `X`.
pub fn resolve_center<T: Scalar>(x: &DataMatrix<T>, center: &CenterSpec<T>) -> Result<Vec<T>> {
    match center {
        CenterSpec::Explicit(v) => {
            x.check_point(v)?;
            Ok(v.clone())
        }
        CenterSpec::Mean => Ok(x.mean()),
        CenterSpec::CompMedian => marginal_median(x),
        CenterSpec::SpatialMedian => Ok(spatial_median(x, T::lit(1e-10), 1000)?.point),
        CenterSpec::OjaMedian(alg) => {
            let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_CENTER_SEED);
            Ok(compute_median(x, *alg, &MedianConfig::default(), &mut rng)?.point)
        }
    }
}

/// One score vector per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix<T> {
    pub scores: Vec<Vec<T>>,
    pub kind: ScoreKind,
    pub family: ScoreFamily,
    /// Center used, `None` for ranks, which need none.
    pub center: Option<Vec<T>>,
}

impl<T: Scalar> ScoreMatrix<T> {
    pub fn n(&self) -> usize {
        self.scores.len()
    }

    pub fn column_sums(&self) -> Vec<T> {
        let k = self.scores.first().map_or(0, Vec::len);
        let mut s = vec![T::zero(); k];
        for r in &self.scores {
            for (a, &b) in s.iter_mut().zip(r) {
                *a = *a + b;
            }
        }
        s
    }
}

/// Oja sign of `x` with respect to `X` and the center `m`.
pub fn oja_sign<T: Scalar>(x_data: &DataMatrix<T>, x: &[T], m: &[T]) -> Result<Vec<T>> {
    x_data.check_point(x)?;
    x_data.check_point(m)?;
    Ok(oja_signs_at(x_data, std::slice::from_ref(&x.to_vec()), m)?.remove(0))
}

/// Oja signs of several points sharing one center; each `(k−1)`-tuple
/// hyperplane is built once.
fn oja_signs_at<T: Scalar>(x_data: &DataMatrix<T>, points: &[Vec<T>], m: &[T]) -> Result<Vec<Vec<T>>> {
    let (n, k) = (x_data.n(), x_data.k());
    let count = check_enumeration(n, k - 1, enumeration_cap())?;
    let mut out = vec![vec![T::zero(); k]; points.len()];
    let mut spanning: Vec<&[T]> = Vec::with_capacity(k);
    let mut cur = SubsetCursor::new(n, k - 1);
    while let Some(t) = cur.advance() {
        spanning.clear();
        spanning.push(m);
        spanning.extend(t.iter().map(|&i| x_data.row(i)));
        let h = hyperplane_from_points(&spanning);
        if h.is_degenerate() {
            continue;
        }
        for (acc, p) in out.iter_mut().zip(points) {
            let s = h.side(p);
            if s != T::zero() {
                for (a, &c) in acc.iter_mut().zip(&h.normal) {
                    *a = *a + s * c;
                }
            }
        }
    }
    let c = T::from_u128(count).unwrap_or_else(T::infinity);
    for acc in &mut out {
        acc.iter_mut().for_each(|a| *a = *a / c);
    }
    Ok(out)
}

/// Oja sign of every observation with respect to a resolved center.
pub fn oja_sign_matrix<T: Scalar>(x_data: &DataMatrix<T>, center: &CenterSpec<T>) -> Result<ScoreMatrix<T>> {
    let m = resolve_center(x_data, center)?;
    let scores = oja_signs_at(x_data, x_data.rows(), &m)?;
    Ok(ScoreMatrix { scores, kind: ScoreKind::Sign, family: ScoreFamily::Oja, center: Some(m) })
}

/// Oja rank of `x`: the average gradient over all data hyperplanes.
pub fn oja_rank<T: Scalar>(x_data: &DataMatrix<T>, x: &[T]) -> Result<Vec<T>> {
    x_data.check_point(x)?;
    x_data.require_median_size()?;
    let obj = Objective::all(x_data)?;
    Ok(rank_with(&obj, x_data, x))
}

fn rank_with<T: Scalar>(obj: &Objective<T>, x_data: &DataMatrix<T>, x: &[T]) -> Vec<T> {
    let c = T::from_u128(binomial(x_data.n(), x_data.k())).unwrap_or_else(T::infinity);
    obj.gradient_sum(x).into_iter().map(|g| g / c).collect()
}

/// Oja rank through the sign route, `(1/(n−k+1)) Σ_i osgn(x; x_i)`.
pub fn oja_rank_from_signs<T: Scalar>(x_data: &DataMatrix<T>, x: &[T]) -> Result<Vec<T>> {
    x_data.check_point(x)?;
    x_data.require_median_size()?;
    let k = x_data.k();
    let mut acc = vec![T::zero(); k];
    for i in 0..x_data.n() {
        let s = oja_sign(x_data, x, x_data.row(i))?;
        for (a, v) in acc.iter_mut().zip(s) {
            *a = *a + v;
        }
    }
    let d = T::from_usize_lossy(x_data.n() - k + 1);
    Ok(acc.into_iter().map(|a| a / d).collect())
}

/// Oja rank of every observation.
pub fn oja_rank_matrix<T: Scalar>(x_data: &DataMatrix<T>) -> Result<ScoreMatrix<T>> {
    x_data.require_median_size()?;
    let obj = Objective::all(x_data)?;
    let scores = x_data.rows().iter().map(|r| rank_with(&obj, x_data, r)).collect();
    Ok(ScoreMatrix { scores, kind: ScoreKind::Rank, family: ScoreFamily::Oja, center: None })
}

/// Oja signed rank of `x`: the average gradient over all hyperplanes through
/// `(a_1 x_{i_1}, …, a_k x_{i_k})`, `a ∈ {±1}^k`.
pub fn oja_signed_rank<T: Scalar>(x_data: &DataMatrix<T>, x: &[T]) -> Result<Vec<T>> {
    x_data.check_point(x)?;
    Ok(oja_signed_ranks_at(x_data, std::slice::from_ref(&x.to_vec()))?.remove(0))
}

fn oja_signed_ranks_at<T: Scalar>(x_data: &DataMatrix<T>, points: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let (n, k) = (x_data.n(), x_data.k());
    if k > MAX_SIGNED_RANK_DIM {
        return Err(OjaError::InvalidInput(format!(
            "signed ranks need 2^k sign patterns per tuple; k = {k} exceeds {MAX_SIGNED_RANK_DIM}"
        )));
    }
    if n < k {
        return Err(OjaError::TooFewObservations { n, k });
    }
    let flips = 1usize << k;
    let cap = enumeration_cap() / flips as u64;
    let count = check_enumeration(n, k, cap)?;
    let mut out = vec![vec![T::zero(); k]; points.len()];
    let mut scaled = vec![vec![T::zero(); k]; k];
    let mut cur = SubsetCursor::new(n, k);
    while let Some(t) = cur.advance() {
        for mask in 0..flips {
            for (j, &i) in t.iter().enumerate() {
                let a = if mask >> j & 1 == 1 { -T::one() } else { T::one() };
                for (s, &v) in scaled[j].iter_mut().zip(x_data.row(i)) {
                    *s = a * v;
                }
            }
            let refs: Vec<&[T]> = scaled.iter().map(Vec::as_slice).collect();
            let h = hyperplane_from_points(&refs);
            if h.is_degenerate() {
                continue;
            }
            for (acc, p) in out.iter_mut().zip(points) {
                let s = h.side(p);
                if s != T::zero() {
                    for (a, &c) in acc.iter_mut().zip(&h.normal) {
                        *a = *a + s * c;
                    }
                }
            }
        }
    }
    let c = T::from_u128(count * flips as u128).unwrap_or_else(T::infinity);
    for acc in &mut out {
        acc.iter_mut().for_each(|a| *a = *a / c);
    }
    Ok(out)
}

/// Oja signed ranks of the observations after centering the sample at `center`.
pub fn oja_signed_rank_matrix<T: Scalar>(x_data: &DataMatrix<T>, center: &CenterSpec<T>) -> Result<ScoreMatrix<T>> {
    let m = resolve_center(x_data, center)?;
    let neg: Vec<T> = m.iter().map(|&v| -v).collect();
    let shifted = x_data.translate(&neg);
    let scores = oja_signed_ranks_at(&shifted, shifted.rows())?;
    Ok(ScoreMatrix { scores, kind: ScoreKind::SignedRank, family: ScoreFamily::Oja, center: Some(m) })
}

/// `(1/n) Σ_i s_i s_iᵀ`.
pub fn score_cov<T: Scalar>(s: &ScoreMatrix<T>) -> Matrix<T> {
    gram(&s.scores)
}

pub(crate) fn gram<T: Scalar>(rows: &[Vec<T>]) -> Matrix<T> {
    let k = rows.first().map_or(0, Vec::len);
    let mut m = Matrix::zeros(k, k);
    for r in rows {
        for i in 0..k {
            for j in 0..=i {
                m[(i, j)] = m[(i, j)] + r[i] * r[j];
            }
        }
    }
    let n = T::from_usize_lossy(rows.len().max(1));
    for i in 0..k {
        for j in 0..=i {
            let v = m[(i, j)] / n;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Oja sign covariance matrix.
pub fn oja_scm<T: Scalar>(x_data: &DataMatrix<T>, center: &CenterSpec<T>) -> Result<Matrix<T>> {
    Ok(score_cov(&oja_sign_matrix(x_data, center)?))
}

/// Oja rank covariance matrix.
pub fn oja_rcm<T: Scalar>(x_data: &DataMatrix<T>) -> Result<Matrix<T>> {
    Ok(score_cov(&oja_rank_matrix(x_data)?))
}

fn msgn<T: Scalar>(v: &[T]) -> Vec<T> {
    v.iter().map(|&a| a.sgn()).collect()
}

/// Spatial sign `v / ‖v‖`, zero at the origin.
pub fn spatial_sign<T: Scalar>(v: &[T]) -> Vec<T> {
    let n = norm(v);
    if n == T::zero() {
        vec![T::zero(); v.len()]
    } else {
        v.iter().map(|&a| a / n).collect()
    }
}

fn diff<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

fn average_over_data<T: Scalar>(x: &DataMatrix<T>, f: impl Fn(&[T], &[T]) -> Vec<T>) -> Vec<Vec<T>> {
    let n = T::from_usize_lossy(x.n());
    x.rows()
        .iter()
        .map(|xi| {
            let mut acc = vec![T::zero(); x.k()];
            for xj in x.rows() {
                for (a, v) in acc.iter_mut().zip(f(xi, xj)) {
                    *a = *a + v;
                }
            }
            acc.into_iter().map(|a| a / n).collect()
        })
        .collect()
}

/// Marginal signs (w.r.t. a center) or marginal ranks.
pub fn marginal_scores<T: Scalar>(x: &DataMatrix<T>, kind: ScoreKind, center: &CenterSpec<T>) -> Result<ScoreMatrix<T>> {
    let (scores, center) = match kind {
        ScoreKind::Sign => {
            let c = resolve_center(x, center)?;
            (x.rows().iter().map(|r| msgn(&diff(r, &c))).collect(), Some(c))
        }
        ScoreKind::Rank => (average_over_data(x, |a, b| msgn(&diff(a, b))), None),
        ScoreKind::SignedRank => {
            return Err(OjaError::InvalidInput("marginal signed ranks are not provided".into()))
        }
    };
    Ok(ScoreMatrix { scores, kind, family: ScoreFamily::Marginal, center })
}

/// Spatial signs, ranks, or signed ranks (the latter after centering).
pub fn spatial_scores<T: Scalar>(x: &DataMatrix<T>, kind: ScoreKind, center: &CenterSpec<T>) -> Result<ScoreMatrix<T>> {
    let (scores, center) = match kind {
        ScoreKind::Sign => {
            let c = resolve_center(x, center)?;
            (x.rows().iter().map(|r| spatial_sign(&diff(r, &c))).collect(), Some(c))
        }
        ScoreKind::Rank => (average_over_data(x, |a, b| spatial_sign(&diff(a, b))), None),
        ScoreKind::SignedRank => {
            let c = resolve_center(x, center)?;
            let neg: Vec<T> = c.iter().map(|&v| -v).collect();
            let y = x.translate(&neg);
            let half = T::lit(0.5);
            let s = average_over_data(&y, |a, b| {
                let plus: Vec<T> = a.iter().zip(b).map(|(&p, &q)| p + q).collect();
                spatial_sign(&diff(a, b)).into_iter().zip(spatial_sign(&plus)).map(|(u, v)| half * (u + v)).collect()
            });
            (s, Some(c))
        }
    };
    Ok(ScoreMatrix { scores, kind, family: ScoreFamily::Spatial, center })
}

/// Score matrix for any valid family/kind combination.
pub fn scores<T: Scalar>(
    x: &DataMatrix<T>,
    family: ScoreFamily,
    kind: ScoreKind,
    center: &CenterSpec<T>,
) -> Result<ScoreMatrix<T>> {
    match (family, kind) {
        (ScoreFamily::Oja, ScoreKind::Sign) => oja_sign_matrix(x, center),
        (ScoreFamily::Oja, ScoreKind::Rank) => oja_rank_matrix(x),
        (ScoreFamily::Oja, ScoreKind::SignedRank) => oja_signed_rank_matrix(x, center),
        (ScoreFamily::Marginal, kind) => marginal_scores(x, kind, center),
        (ScoreFamily::Spatial, kind) => spatial_scores(x, kind, center),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigen;

    fn triangle() -> DataMatrix<f64> {
        DataMatrix::<f64>::from_f64_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    fn uni(v: &[f64]) -> DataMatrix<f64> {
        DataMatrix::<f64>::univariate(v).unwrap()
    }

    /// Gradient of |bordered det| by brute force for one spanning set.
    fn grad_brute(points: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        let k = x.len();
        let f = |y: &[f64]| {
            let mut rows = vec![vec![1.0; k + 1]];
            for r in 0..k {
                let mut row: Vec<f64> = points.iter().map(|p| p[r]).collect();
                row.push(y[r]);
                rows.push(row);
            }
            Matrix::from_rows(&rows).det()
        };
        let v = f(x);
        // the bordered det is affine in x: exact central differences
        (0..k)
            .map(|j| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[j] += 0.5;
                b[j] -= 0.5;
                v.signum() * if v == 0.0 { 0.0 } else { f(&a) - f(&b) }
            })
            .collect()
    }

    #[test]
    fn univariate_sign() {
        assert_eq!(oja_sign(&uni(&[1.0, 2.0, 3.0]), &[3.0], &[2.0]).unwrap(), vec![1.0]);
        assert_eq!(oja_sign(&uni(&[1.0, 2.0, 3.0]), &[2.0], &[2.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn triangle_sign_matches_per_tuple_brute_force() {
        let x = triangle();
        let m = [1.0 / 3.0, 1.0 / 3.0];
        let p = [0.0, 0.0];
        let s = oja_sign(&x, &p, &m).unwrap();
        let mut expect = [0.0, 0.0];
        for i in 0..3 {
            let g = grad_brute(&[m.to_vec(), x.row(i).to_vec()], &p);
            expect[0] += g[0] / 3.0;
            expect[1] += g[1] / 3.0;
        }
        assert!((s[0] - expect[0]).abs() < 1e-12 && (s[1] - expect[1]).abs() < 1e-12);
        assert!(norm(&s) > 0.1);
    }

    #[test]
    fn sign_at_center_is_zero() {
        let x = triangle();
        let m = [0.2, 0.3];
        assert_eq!(oja_sign(&x, &m, &m).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn sign_matrix_variants() {
        let s = oja_sign_matrix(&uni(&[1.0, 2.0, 3.0]), &CenterSpec::CompMedian).unwrap();
        assert_eq!(s.scores, vec![vec![-1.0], vec![0.0], vec![1.0]]);
        assert_eq!(s.center, Some(vec![2.0]));

        let x = triangle();
        let s = oja_sign_matrix(&x, &CenterSpec::Explicit(x.row(0).to_vec())).unwrap();
        assert_eq!(s.scores[0], vec![0.0, 0.0]);

        let s = oja_sign_matrix(&x, &CenterSpec::Explicit(vec![1.0 / 3.0, 1.0 / 3.0])).unwrap();
        assert!(norm(&s.column_sums()) < 1e-9);
    }

    #[test]
    fn univariate_rank() {
        let r = oja_rank(&uni(&[1.0, 2.0, 3.0]), &[2.5]).unwrap();
        assert!((r[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_centroid_has_zero_rank() {
        let r = oja_rank(&triangle(), &[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!(norm(&r) < 1e-12);
    }

    #[test]
    fn rank_formulas_agree() {
        let x = DataMatrix::<f64>::from_f64_rows(&[
            vec![0.3, 1.1],
            vec![-0.7, 0.2],
            vec![1.5, -0.4],
            vec![0.9, 2.2],
            vec![-1.3, -1.8],
            vec![2.4, 0.6],
            vec![0.1, -0.9],
        ])
        .unwrap();
        let p = [0.44, 0.17];
        let a = oja_rank(&x, &p).unwrap();
        let b = oja_rank_from_signs(&x, &p).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10);
    }

    #[test]
    fn univariate_signed_rank() {
        let r = oja_signed_rank(&uni(&[1.0, -2.0, 3.0]), &[3.0]).unwrap();
        assert!((r[0] - 5.0 / 6.0).abs() < 1e-15);
        // (2 rnk(|3|) − 1) sgn(3) / (2n)
        assert!((r[0] - (2.0 * 3.0 - 1.0) / 6.0).abs() < 1e-15);
    }

    #[test]
    fn signed_rank_at_origin_and_oddness() {
        let x = DataMatrix::<f64>::from_f64_rows(&[
            vec![0.3, 1.1],
            vec![-0.7, 0.2],
            vec![1.5, -0.4],
            vec![0.9, 2.2],
            vec![-1.3, -1.8],
            vec![2.4, 0.6],
        ])
        .unwrap();
        assert_eq!(oja_signed_rank(&x, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let p = oja_signed_rank(&x, &[0.8, -0.3]).unwrap();
        let q = oja_signed_rank(&x, &[-0.8, 0.3]).unwrap();
        assert!((p[0] + q[0]).abs() < 1e-10 && (p[1] + q[1]).abs() < 1e-10);
    }

    #[test]
    fn signed_rank_dimension_guard() {
        let row: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let x = DataMatrix::<f64>::new(vec![row.clone(); 12]).unwrap();
        assert!(matches!(oja_signed_rank(&x, &row), Err(OjaError::InvalidInput(_))));
    }

    #[test]
    fn scm_univariate_and_psd() {
        let c = oja_scm(&uni(&[1.0, 2.0, 3.0]), &CenterSpec::CompMedian).unwrap();
        assert!((c[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        let x = DataMatrix::<f64>::from_f64_rows(&[
            vec![0.3, 1.1],
            vec![-0.7, 0.2],
            vec![1.5, -0.4],
            vec![0.9, 2.2],
            vec![-1.3, -1.8],
        ])
        .unwrap();
        for m in [oja_scm(&x, &CenterSpec::Mean).unwrap(), oja_rcm(&x).unwrap()] {
            assert!(m.is_symmetric(0.0));
            let (ev, _) = symmetric_eigen(&m);
            assert!(ev.iter().all(|&l| l >= -1e-12));
        }
    }

    #[test]
    fn marginal_and_spatial_examples() {
        let x = DataMatrix::<f64>::from_f64_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let origin = CenterSpec::Explicit(vec![0.0, 0.0]);
        let m = marginal_scores(&x, ScoreKind::Sign, &origin).unwrap();
        assert_eq!(m.scores, vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let s = spatial_scores(&x, ScoreKind::Sign, &origin).unwrap();
        assert!((s.scores[1][0] - 0.6).abs() < 1e-15 && (s.scores[1][1] - 0.8).abs() < 1e-15);
        assert_eq!(spatial_sign(&[0.0, 0.0]), vec![0.0, 0.0]);
        let r = marginal_scores(&x, ScoreKind::Rank, &origin).unwrap();
        assert_eq!(r.scores, vec![vec![-0.5, -0.5], vec![0.5, 0.5]]);
        assert!(marginal_scores(&x, ScoreKind::SignedRank, &origin).is_err());
    }

    #[test]
    fn spatial_signed_rank_reduces_to_univariate() {
        let x = uni(&[1.0, -2.0, 3.0]);
        let s = spatial_scores(&x, ScoreKind::SignedRank, &CenterSpec::Explicit(vec![0.0])).unwrap();
        assert!((s.scores[2][0] - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn score_cov_examples() {
        let zero = ScoreMatrix { scores: vec![vec![0.0, 0.0]; 3], kind: ScoreKind::Sign, family: ScoreFamily::Oja, center: None };
        assert_eq!(score_cov(&zero).max_abs(), 0.0);
        let one = ScoreMatrix { scores: vec![vec![1.0, -2.0]], kind: ScoreKind::Sign, family: ScoreFamily::Oja, center: None };
        let c = score_cov(&one);
        assert_eq!(c.to_rows(), vec![vec![1.0, -2.0], vec![-2.0, 4.0]]);
        let uni = ScoreMatrix { scores: vec![vec![-1.0], vec![0.0], vec![1.0]], kind: ScoreKind::Sign, family: ScoreFamily::Oja, center: None };
        assert!((score_cov(&uni)[(0, 0)] - 2.0f64 / 3.0).abs() < 1e-15);
    }
}
