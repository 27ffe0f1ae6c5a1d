//! Univariate, marginal and spatial medians.

use crate::data::DataMatrix;
use crate::error::{OjaError, Result};
use crate::scalar::{dist, Scalar};

/// Closed median interval of a univariate sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianInterval<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> MedianInterval<T> {
    pub fn midpoint(&self) -> T {
        (self.lower + self.upper) / T::lit(2.0)
    }
}

pub fn univariate_median_interval<T: Scalar>(sample: &[T]) -> Result<MedianInterval<T>> {
    if sample.is_empty() {
        return Err(OjaError::InvalidInput("empty sample".into()));
    }
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let n = s.len();
    Ok(if n % 2 == 1 {
        MedianInterval { lower: s[n / 2], upper: s[n / 2] }
    } else {
        MedianInterval { lower: s[n / 2 - 1], upper: s[n / 2] }
    })
}

/// Midpoint of the median interval.
pub fn univariate_median<T: Scalar>(sample: &[T]) -> Result<T> {
    Ok(univariate_median_interval(sample)?.midpoint())
}

/// Vector of coordinatewise medians.
pub fn marginal_median<T: Scalar>(x: &DataMatrix<T>) -> Result<Vec<T>> {
    (0..x.k()).map(|j| univariate_median(&x.column(j))).collect()
}

/// `Σ_i ‖x_i − y‖`.
pub fn spatial_objective<T: Scalar>(x: &DataMatrix<T>, y: &[T]) -> T {
    x.rows().iter().map(|r| dist(r, y)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMedian<T> {
    pub point: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// Spatial median by Weiszfeld iterations with the Vardi–Zhang modification
/// for iterates that land on an observation.
pub fn spatial_median<T: Scalar>(x: &DataMatrix<T>, tol: T, max_iter: usize) -> Result<SpatialMedian<T>> {
    let k = x.k();
    let rows = x.rows();
    if rows.iter().all(|r| r == &rows[0]) {
        return Ok(SpatialMedian { point: rows[0].clone(), iterations: 0, converged: true });
    }
    let scale = x.scale();
    let coincide = tol * scale;
    let mut y = marginal_median(x)?;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let mut num = vec![T::zero(); k];
        let mut den = T::zero();
        let mut eta = T::zero();
        let mut r = vec![T::zero(); k];
        for row in rows {
            let d = dist(row, &y);
            if d <= coincide {
                eta = eta + T::one();
                continue;
            }
            let w = T::one() / d;
            den = den + w;
            for j in 0..k {
                num[j] = num[j] + w * row[j];
                r[j] = r[j] + w * (row[j] - y[j]);
            }
        }
        let t: Vec<T> = num.iter().map(|&v| v / den).collect();
        let next = if eta == T::zero() {
            t
        } else {
            // y is an observation: pull toward T(y) only as far as the net force allows
            let rn = r.iter().map(|&v| v * v).sum::<T>().sqrt();
            if rn <= eta {
                converged = true;
                break;
            }
            let gamma = (eta / rn).min(T::one());
            t.iter().zip(&y).map(|(&ti, &yi)| (T::one() - gamma) * ti + gamma * yi).collect()
        };
        let step = dist(&next, &y);
        y = next;
        if step < coincide {
            converged = true;
            break;
        }
    }
    // never worse than the best observation
    let fy = spatial_objective(x, &y);
    if let Some(best) = rows
        .iter()
        .min_by(|a, b| spatial_objective(x, a).partial_cmp(&spatial_objective(x, b)).expect("finite"))
    {
        if spatial_objective(x, best) < fy {
            y = best.clone();
        }
    }
    Ok(SpatialMedian { point: y, iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn univariate_intervals() {
        let i = univariate_median_interval(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!((i.lower, i.upper, i.midpoint()), (2.0, 2.0, 2.0));
        let i = univariate_median_interval(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((i.lower, i.upper, i.midpoint()), (2.0, 3.0, 2.5));
        assert_eq!(univariate_median(&[5.0]).unwrap(), 5.0);
        assert!(univariate_median::<f64>(&[]).is_err());
    }

    #[test]
    fn marginal_median_of_triangle() {
        let x = DataMatrix::<f64>::from_f64_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(marginal_median(&x).unwrap(), vec![0.0, 0.0]);
        let swapped = DataMatrix::<f64>::from_f64_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let m = marginal_median(&swapped).unwrap();
        let back = DataMatrix::<f64>::from_f64_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![3.0, 1.0]]).unwrap();
        let mb = marginal_median(&back).unwrap();
        assert_eq!(m, vec![mb[1], mb[0]]);
    }

    #[test]
    fn fermat_point_of_equilateral_triangle() {
        let h = 3f64.sqrt() / 2.0;
        let x = DataMatrix::<f64>::from_f64_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]]).unwrap();
        let m = spatial_median(&x, 1e-10, 1000).unwrap();
        assert!((m.point[0] - 0.5).abs() < 1e-6);
        assert!((m.point[1] - 3f64.sqrt() / 6.0).abs() < 1e-6);
    }

    #[test]
    fn univariate_spatial_median_is_optimal() {
        let v = [0.3, -1.2, 4.4, 2.0, 0.9, 7.5];
        let x = DataMatrix::<f64>::univariate(&v).unwrap();
        let m = spatial_median(&x, 1e-12, 1000).unwrap();
        let med = univariate_median(&v).unwrap();
        let best = spatial_objective(&x, &[med]);
        assert!((spatial_objective(&x, &m.point) - best).abs() < 1e-9);
    }

    #[test]
    fn two_points_any_segment_point() {
        let x = DataMatrix::<f64>::from_f64_rows(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let m = spatial_median(&x, 1e-10, 1000).unwrap();
        assert!((spatial_objective(&x, &m.point) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn dominant_observation_is_the_median() {
        // three copies at the origin outweigh the rest
        let x = DataMatrix::<f64>::from_f64_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let m = spatial_median(&x, 1e-12, 1000).unwrap();
        assert!(m.point.iter().all(|v| v.abs() < 1e-9));
    }
}
