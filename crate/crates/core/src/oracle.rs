//! Brute-force ground truth: the criterion at every intersection of `k`
//! data hyperplanes.

use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::error::{OjaError, Result};
use crate::linalg::solve;
use crate::objective::Objective;
use crate::scalar::{dist, Scalar};
use crate::subsets::{binomial, SubsetCursor};

/// Largest number of `k × k` solves the oracle will attempt.
pub const ORACLE_SOLVE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    /// Every global minimiser among the arrangement vertices, merged within 1e-9.
    pub points: Vec<Vec<T>>,
    pub objective: T,
    pub solves: u128,
    /// Non-degenerate data hyperplanes.
    pub hyperplanes: usize,
}

pub fn brute_force_median<T: Scalar>(x: &DataMatrix<T>) -> Result<OracleResult<T>> {
    x.require_median_size()?;
    let obj = Objective::all(x)?;
    let k = x.k();
    let planes = obj.planes();
    let live: Vec<usize> = (0..planes.len()).filter(|&i| planes.normal_norm(i) > T::zero()).collect();
    let solves = binomial(live.len(), k);
    if solves > ORACLE_SOLVE_LIMIT {
        return Err(OjaError::OracleTooLarge { solves, limit: ORACLE_SOLVE_LIMIT });
    }
    if live.is_empty() {
        return Err(OjaError::DegenerateData("every k-tuple of observations is affinely dependent".into()));
    }
    let mut tuples = Vec::with_capacity(solves as usize);
    let mut cur = SubsetCursor::new(live.len(), k);
    while let Some(t) = cur.advance() {
        tuples.push(t.to_vec());
    }
    let candidates: Vec<(Vec<T>, T)> = tuples
        .par_iter()
        .filter_map(|t| {
            let mut a = Vec::with_capacity(k * k);
            let mut b = Vec::with_capacity(k);
            for &j in t {
                let i = live[j];
                a.extend_from_slice(planes.normal(i));
                b.push(-planes.offset(i));
            }
            let p = solve(&a, &b, k)?;
            p.iter().all(|v| v.is_finite()).then(|| {
                let f = obj.eval(&p);
                (p, f)
            })
        })
        .collect();
    if candidates.is_empty() {
        return Err(OjaError::DegenerateData("the data hyperplanes have no common vertex".into()));
    }
    let fmin = candidates.iter().fold(T::infinity(), |m, c| m.min(c.1));
    let level = fmin + T::lit(1e-9) * fmin.abs().max(T::one());
    let close = T::lit(1e-9) * x.scale();
    let mut points: Vec<Vec<T>> = Vec::new();
    for (p, f) in candidates {
        if f <= level && !points.iter().any(|q| dist(q, &p) <= close) {
            points.push(p);
        }
    }
    Ok(OracleResult { points, objective: fmin, solves, hyperplanes: live.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_minimisers_are_the_corners() {
        let x = DataMatrix::<f64>::from_f64_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let o = brute_force_median(&x).unwrap();
        assert!((o.objective - 0.5).abs() < 1e-15);
        for c in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] {
            assert!(o.points.iter().any(|p| dist(p, &c) < 1e-12));
        }
    }

    #[test]
    fn univariate_interval_endpoints() {
        let x = DataMatrix::<f64>::univariate(&[5.0, 1.0, 2.0, 9.0]).unwrap();
        let mut o = brute_force_median(&x).unwrap();
        o.points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(o.points, vec![vec![2.0], vec![5.0]]);
        assert!((o.objective - 11.0).abs() < 1e-12);
    }

    #[test]
    fn size_guard() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64).sin(), (i as f64 * 1.7).cos(), i as f64 * 0.1]).collect();
        let x = DataMatrix::<f64>::new(rows).unwrap();
        assert!(matches!(brute_force_median(&x), Err(OjaError::OracleTooLarge { .. })));
    }
}
