//! One-sample and C-sample location tests built on Oja scores.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::DataMatrix;
use crate::error::{OjaError, Result};
use crate::linalg::{pseudo_inverse_psd, Matrix};
use crate::scalar::{dot, Scalar};
use crate::scores::{gram, oja_rank_matrix, oja_sign_matrix, oja_signed_rank_matrix, CenterSpec, ScoreKind};

/// Upper tail probability of the chi-square distribution.
pub fn chi_square_sf(q: f64, df: usize) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(OjaError::InvalidInput(format!("chi-square statistic must be nonnegative, got {q}")));
    }
    if df == 0 {
        return Err(OjaError::InvalidInput("chi-square needs df >= 1".into()));
    }
    if q.is_infinite() {
        return Ok(0.0);
    }
    let d = ChiSquared::new(df as f64).map_err(|e| OjaError::InvalidInput(e.to_string()))?;
    Ok(d.sf(q))
}

/// Quantile of the chi-square distribution at probability `p`.
pub fn chi_square_quantile(p: f64, df: usize) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) || df == 0 {
        return Err(OjaError::InvalidInput(format!("bad chi-square quantile arguments p = {p}, df = {df}")));
    }
    let d = ChiSquared::new(df as f64).map_err(|e| OjaError::InvalidInput(e.to_string()))?;
    Ok(d.inverse_cdf(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Asymptotic,
    Permutation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig<T> {
    pub method: Method,
    /// Permutation replicates.
    pub replications: usize,
    /// Location the C-sample sign scores are taken about.
    pub center: CenterSpec<T>,
}

impl<T> Default for TestConfig<T> {
    fn default() -> Self {
        Self { method: Method::Asymptotic, replications: 1000, center: CenterSpec::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NullValue<T> {
    Location(Vec<T>),
    EqualLocations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult<T> {
    pub q: f64,
    pub df: usize,
    pub p_value: f64,
    pub method: Method,
    pub replications: usize,
    /// Base seed of the permutation replicates.
    pub seed: Option<u64>,
    pub score_kind: ScoreKind,
    pub null_value: NullValue<T>,
    /// Score covariance was singular; a pseudo-inverse was used and `df` reduced.
    pub rank_deficient: bool,
}

/// Pseudo-inverse of the score covariance with its rank.
fn weight<T: Scalar>(s: &Matrix<T>) -> (Matrix<T>, usize) {
    pseudo_inverse_psd(s, T::lit(1e-10))
}

fn quad<T: Scalar>(w: &Matrix<T>, v: &[T]) -> f64 {
    dot(v, &w.matvec(v)).to_f64_lossy().max(0.0)
}

fn mean_rows<T: Scalar>(rows: &[Vec<T>], pick: impl Fn(usize) -> T) -> Vec<T> {
    let k = rows.first().map_or(0, Vec::len);
    let mut m = vec![T::zero(); k];
    for (i, r) in rows.iter().enumerate() {
        let a = pick(i);
        for (mj, &v) in m.iter_mut().zip(r) {
            *mj = *mj + a * v;
        }
    }
    let n = T::from_usize_lossy(rows.len());
    m.iter_mut().for_each(|v| *v = *v / n);
    m
}

/// Independent generator for permutation replicate `b`.
fn replicate_rng(seed: u64, b: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(b as u64);
    r
}

fn permutation_p(q: f64, reps: &[f64]) -> f64 {
    let tol = 1e-12 * q.abs().max(1e-300);
    let hits = reps.iter().filter(|&&qb| qb >= q - tol).count();
    (1 + hits) as f64 / (reps.len() + 1) as f64
}

/// Test of `H0: location = mu0` with Oja sign or signed-rank scores of the
/// shifted sample `X − mu0`.
pub fn one_sample_test<T: Scalar, R: Rng + ?Sized>(
    x: &DataMatrix<T>,
    mu0: &[T],
    kind: ScoreKind,
    cfg: &TestConfig<T>,
    rng: &mut R,
) -> Result<TestResult<T>> {
    x.check_point(mu0)?;
    let neg: Vec<T> = mu0.iter().map(|&v| -v).collect();
    let y = x.translate(&neg);
    let origin = CenterSpec::Explicit(vec![T::zero(); x.k()]);
    let scores = match kind {
        ScoreKind::Sign => oja_sign_matrix(&y, &origin)?,
        ScoreKind::SignedRank => oja_signed_rank_matrix(&y, &origin)?,
        ScoreKind::Rank => return Err(OjaError::InvalidInput("one-sample tests use sign or signed-rank scores".into())),
    }
    .scores;
    let n = scores.len();
    let (w, rank) = weight(&gram(&scores));
    let stat = |flip: &dyn Fn(usize) -> T| T::from_usize_lossy(n).to_f64_lossy() * quad(&w, &mean_rows(&scores, flip));
    let q = stat(&|_| T::one());
    let null_value = NullValue::Location(mu0.to_vec());
    finish(q, rank, kind, null_value, cfg, x.k(), rng, |b_rng| {
        let signs: Vec<T> = (0..n).map(|_| if b_rng.random::<bool>() { T::one() } else { -T::one() }).collect();
        stat(&|i| signs[i])
    })
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Scalar, R: Rng + ?Sized>(
    q: f64,
    rank: usize,
    kind: ScoreKind,
    null_value: NullValue<T>,
    cfg: &TestConfig<T>,
    full_df: usize,
    rng: &mut R,
    replicate: impl Fn(&mut ChaCha8Rng) -> f64 + Sync,
) -> Result<TestResult<T>> {
    let rank_deficient = rank < full_df;
    let (p_value, seed, replications) = match cfg.method {
        Method::Asymptotic => (if rank == 0 { 1.0 } else { chi_square_sf(q, rank)? }, None, 0),
        Method::Permutation => {
            if cfg.replications == 0 {
                return Err(OjaError::InvalidInput("permutation tests need at least one replicate".into()));
            }
            let seed: u64 = rng.random();
            let reps: Vec<f64> = (0..cfg.replications)
                .into_par_iter()
                .map(|b| replicate(&mut replicate_rng(seed, b)))
                .collect();
            (permutation_p(q, &reps), Some(seed), cfg.replications)
        }
    };
    Ok(TestResult { q, df: rank, p_value, method: cfg.method, replications, seed, score_kind: kind, null_value, rank_deficient })
}

/// Test of equal locations across groups. Scores are computed once on the
/// combined sample; `df = k (C − 1)`.
pub fn c_sample_test<T: Scalar, L: Ord + Clone, R: Rng + ?Sized>(
    x: &DataMatrix<T>,
    groups: &[L],
    kind: ScoreKind,
    cfg: &TestConfig<T>,
    rng: &mut R,
) -> Result<TestResult<T>> {
    if groups.len() != x.n() {
        return Err(OjaError::DimensionMismatch { expected: x.n(), got: groups.len() });
    }
    let mut labels: Vec<L> = groups.to_vec();
    labels.sort();
    labels.dedup();
    let c = labels.len();
    if c < 2 {
        return Err(OjaError::InvalidInput("need at least two groups".into()));
    }
    let ids: Vec<usize> = groups.iter().map(|g| labels.binary_search(g).expect("label present")).collect();
    let scores = match kind {
        ScoreKind::Sign => oja_sign_matrix(x, &cfg.center)?,
        ScoreKind::Rank => oja_rank_matrix(x)?,
        ScoreKind::SignedRank => return Err(OjaError::InvalidInput("C-sample tests use sign or rank scores".into())),
    }
    .scores;
    let (w, rank) = weight(&gram(&scores));
    let k = x.k();
    let stat = |ids: &[usize]| -> f64 {
        let mut sums = vec![vec![T::zero(); k]; c];
        let mut counts = vec![0usize; c];
        for (s, &g) in scores.iter().zip(ids) {
            counts[g] += 1;
            for (a, &v) in sums[g].iter_mut().zip(s) {
                *a = *a + v;
            }
        }
        sums.iter()
            .zip(&counts)
            .filter(|(_, &m)| m > 0)
            .map(|(s, &m)| {
                let mean: Vec<T> = s.iter().map(|&v| v / T::from_usize_lossy(m)).collect();
                m as f64 * quad(&w, &mean)
            })
            .sum()
    };
    let q = stat(&ids);
    let res = finish(q, rank * (c - 1), kind, NullValue::EqualLocations, cfg, k * (c - 1), rng, |b_rng| {
        let mut perm = ids.clone();
        perm.shuffle(b_rng);
        stat(&perm)
    })?;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_examples() {
        assert_eq!(chi_square_sf(0.0, 2).unwrap(), 1.0);
        assert!((chi_square_sf(15.17, 2).unwrap() - (-7.585f64).exp()).abs() < 1e-12);
        assert!(chi_square_sf(-1.0, 2).is_err());
        let q = chi_square_quantile(0.95, 2).unwrap();
        assert!((chi_square_sf(q, 2).unwrap() - 0.05).abs() < 1e-10);
    }

    #[test]
    fn balanced_univariate_sample() {
        let x = DataMatrix::<f64>::univariate(&[-1.0, 1.0]).unwrap();
        let r = one_sample_test(&x, &[0.0], ScoreKind::Sign, &TestConfig::default(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(r.q, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn permutation_p_bounds() {
        assert_eq!(permutation_p(5.0, &[1.0, 2.0, 3.0]), 0.25);
        assert_eq!(permutation_p(0.0, &[1.0, 2.0, 3.0]), 1.0);
    }

    #[test]
    fn rank_scores_are_refused_for_one_sample() {
        let x = DataMatrix::<f64>::univariate(&[-1.0, 1.0, 2.0]).unwrap();
        let r = one_sample_test(&x, &[0.0], ScoreKind::Rank, &TestConfig::default(), &mut ChaCha8Rng::seed_from_u64(1));
        assert!(r.is_err());
    }

    #[test]
    fn single_group_is_refused() {
        let x = DataMatrix::<f64>::univariate(&[-1.0, 1.0, 2.0]).unwrap();
        let r = c_sample_test(&x, &[0, 0, 0], ScoreKind::Rank, &TestConfig::default(), &mut ChaCha8Rng::seed_from_u64(1));
        assert!(r.is_err());
    }
}
