//! Grid-based Monte Carlo approximation: knots of a regular grid are tested
//! for a vanishing mean gradient over random hyperplane samples, and the grid
//! is refined around the survivor.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::error::{OjaError, Result};
use crate::geometry::{abs_det_gradient, hyperplane_from_indices, Hyperplane};
use crate::inference::chi_square_quantile;
use crate::linalg::{column_means, covariance_matrix, pseudo_inverse_psd};
use crate::median::{Algorithm, Diagnostic, MedianResult};
use crate::objective::Objective;
use crate::scalar::{dot, norm, Scalar};
use crate::subsets::{binomial, enumeration_cap, random_subset};

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    /// Initial spacing is the largest coordinate range divided by this.
    pub initial_spacing_divisor: usize,
    /// Final spacing; `None` means `1e-3` times the largest coordinate range.
    pub spacing_threshold: Option<f64>,
    pub alpha: f64,
    pub hyperplanes_per_round: usize,
    pub max_inner_iterations: usize,
    /// Inner-iteration cap after the first time the cap is hit.
    pub reduced_inner_iterations: usize,
    /// Knots per side of a refined grid, counted from the survivor.
    pub refine_half_width: usize,
    pub max_knots: u128,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            initial_spacing_divisor: 10,
            spacing_threshold: None,
            alpha: 0.05,
            hyperplanes_per_round: 50,
            max_inner_iterations: 5000,
            reduced_inner_iterations: 100,
            refine_half_width: 4,
            max_knots: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KnotDecision {
    Keep,
    Reject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnotTest {
    pub decision: KnotDecision,
    pub statistic: f64,
    pub df: usize,
    /// Mean gradient `r̄` over the sample.
    pub mean: Vec<f64>,
}

/// Tests whether the hyperplane sample has mean gradient zero at `g`:
/// `Q = m r̄ᵀ S⁺ r̄` against the chi-square upper `alpha` quantile.
pub fn knot_test<T: Scalar>(g: &[T], sample: &[Hyperplane<T>], alpha: f64) -> Result<KnotTest> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(OjaError::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let crit = critical_values(g.len(), alpha)?;
    test_with(g, sample, &crit)
}

/// Upper `alpha` chi-square quantiles for df `0..=k`.
fn critical_values(k: usize, alpha: f64) -> Result<Vec<f64>> {
    std::iter::once(Ok(0.0)).chain((1..=k).map(|df| chi_square_quantile(1.0 - alpha, df))).collect()
}

fn test_with<T: Scalar>(g: &[T], sample: &[Hyperplane<T>], crit: &[f64]) -> Result<KnotTest> {
    let k = g.len();
    if sample.len() < k + 1 {
        return Err(OjaError::InvalidInput(format!(
            "knot test needs at least k + 1 = {} hyperplanes, got {}",
            k + 1,
            sample.len()
        )));
    }
    let v: Vec<Vec<T>> = sample.iter().map(|h| abs_det_gradient(h, g)).collect();
    test_gradients(&v, crit)
}

fn test_gradients<T: Scalar>(v: &[Vec<T>], crit: &[f64]) -> Result<KnotTest> {
    if v.iter().all(|r| r.iter().all(|&c| c == T::zero())) {
        return Err(OjaError::DegenerateSample);
    }
    let (statistic, df, mean) = mean_statistic(v);
    let decision = if statistic > crit[df] { KnotDecision::Reject } else { KnotDecision::Keep };
    Ok(KnotTest { decision, statistic, df, mean })
}

/// `m r̄ᵀ S⁺ r̄`, the rank of `S` and `r̄`; infinite when `r̄` leaves the range of `S`.
fn mean_statistic<T: Scalar>(v: &[Vec<T>]) -> (f64, usize, Vec<f64>) {
    let m = T::from_usize_lossy(v.len());
    let rbar = column_means(v);
    let mean = rbar.iter().map(|r| r.to_f64_lossy()).collect();
    let s = covariance_matrix(v);
    let (pinv, rank) = pseudo_inverse_psd(&s, T::lit(1e-10));
    let rn = norm(&rbar);
    if rn == T::zero() {
        return (0.0, rank, mean);
    }
    // component of r̄ outside the range of S
    let proj = s.matvec(&pinv.matvec(&rbar));
    let resid: Vec<T> = rbar.iter().zip(&proj).map(|(&a, &b)| a - b).collect();
    if norm(&resid) > T::lit(1e-8) * rn {
        return (f64::INFINITY, rank, mean);
    }
    ((m * dot(&rbar, &pinv.matvec(&rbar))).to_f64_lossy().max(0.0), rank, mean)
}

/// Knots `origin + h·i` for `i` in the given per-axis index ranges.
fn knots<T: Scalar>(origin: &[T], h: T, counts: &[usize], offsets: &[i64]) -> Vec<Vec<T>> {
    let k = origin.len();
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; k];
    for _ in 0..total {
        out.push((0..k).map(|j| origin[j] + h * T::lit((idx[j] as i64 + offsets[j]) as f64)).collect());
        for j in 0..k {
            idx[j] += 1;
            if idx[j] < counts[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    out
}

fn sample_hyperplanes<T: Scalar, R: Rng + ?Sized>(x: &DataMatrix<T>, count: usize, rng: &mut R) -> Vec<Hyperplane<T>> {
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 100 * count {
        tries += 1;
        let t = random_subset(x.n(), x.k(), rng);
        let h = hyperplane_from_indices(x, t.as_slice());
        if !h.is_degenerate() {
            out.push(h);
        }
    }
    out
}

struct Elimination<T> {
    survivor: Vec<T>,
    rounds: usize,
    hit_cap: bool,
}

/// Eliminates knots until one is left or the cap is reached; a round that
/// would reject every knot is discarded. Survivors are ranked by their
/// statistic summed over the rounds they passed.
fn eliminate<T: Scalar, R: Rng + ?Sized>(
    x: &DataMatrix<T>,
    mut alive: Vec<Vec<T>>,
    cfg: &GridConfig,
    cap: usize,
    rng: &mut R,
) -> Result<Elimination<T>> {
    let k = x.k();
    let per_round = cfg.hyperplanes_per_round.max(k + 1);
    let mut stats: Vec<f64> = vec![0.0; alive.len()];
    let mut drift: Vec<Vec<f64>> = vec![vec![0.0; k]; alive.len()];
    let crit = critical_values(k, cfg.alpha)?;
    let mut rounds = 0;
    while alive.len() > 1 && rounds < cap {
        rounds += 1;
        let sample = sample_hyperplanes(x, per_round, rng);
        if sample.len() < k + 1 {
            return Err(OjaError::DegenerateData("too few non-degenerate hyperplanes to test knots".into()));
        }
        // knots in one cell of the sampled arrangement share their gradients
        let sides: Vec<Vec<i8>> = alive
            .par_iter()
            .map(|g| sample.iter().map(|h| h.side(g).to_i8().unwrap_or(0)).collect())
            .collect();
        let mut cells: HashMap<&[i8], usize> = HashMap::new();
        let mut first = Vec::new();
        let cell_of: Vec<usize> = sides
            .iter()
            .enumerate()
            .map(|(i, sg)| {
                *cells.entry(sg.as_slice()).or_insert_with(|| {
                    first.push(i);
                    first.len() - 1
                })
            })
            .collect();
        let unique: Vec<KnotTest> = first
            .par_iter()
            .map(|&i| match test_with(&alive[i], &sample, &crit) {
                Err(OjaError::DegenerateSample) => {
                    Ok(KnotTest { decision: KnotDecision::Keep, statistic: 0.0, df: 0, mean: vec![0.0; k] })
                }
                other => other,
            })
            .collect::<Result<_>>()?;
        let tests: Vec<&KnotTest> = cell_of.iter().map(|&c| &unique[c]).collect();
        let kept: Vec<usize> = (0..alive.len()).filter(|&i| tests[i].decision == KnotDecision::Keep).collect();
        if kept.is_empty() {
            continue;
        }
        alive = kept.iter().map(|&i| alive[i].clone()).collect();
        stats = kept.iter().map(|&i| stats[i] + tests[i].statistic).collect();
        drift = kept.iter().map(|&i| drift[i].iter().zip(&tests[i].mean).map(|(a, b)| a + b).collect()).collect();
    }
    let hit_cap = alive.len() > 1;
    let best = best_knot(&alive, &stats, &drift);
    Ok(Elimination { survivor: alive.swap_remove(best), rounds, hit_cap })
}

/// Knot with the smallest summed statistic. Knots between the same
/// hyperplanes tie exactly; among those the one furthest along the negative
/// summed mean gradient wins, i.e. the lowest estimated criterion.
fn best_knot<T: Scalar>(alive: &[Vec<T>], stats: &[f64], drift: &[Vec<f64>]) -> usize {
    let min = stats.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * min.abs().max(1e-12);
    let tied: Vec<usize> = (0..alive.len()).filter(|&i| stats[i] <= min + tol).collect();
    if tied.len() <= 1 {
        return tied.first().copied().unwrap_or(0);
    }
    let c = column_means(&tied.iter().map(|&i| alive[i].clone()).collect::<Vec<_>>());
    let height = |i: usize| -> (f64, f64) {
        let g: Vec<f64> = alive[i].iter().map(|v| v.to_f64_lossy()).collect();
        let along = g.iter().zip(&drift[i]).map(|(a, b)| a * b).sum::<f64>();
        let off = alive[i].iter().zip(&c).map(|(&a, &b)| ((a - b) * (a - b)).to_f64_lossy()).sum::<f64>();
        (along, off)
    };
    tied.into_iter().min_by(|&a, &b| height(a).partial_cmp(&height(b)).unwrap_or(std::cmp::Ordering::Equal)).unwrap_or(0)
}

/// Approximate Oja median on successively halved grids.
pub fn grid_median<T: Scalar, R: Rng + ?Sized>(x: &DataMatrix<T>, cfg: &GridConfig, rng: &mut R) -> Result<MedianResult<T>> {
    x.require_median_size()?;
    if cfg.initial_spacing_divisor == 0 {
        return Err(OjaError::InvalidInput("initial_spacing_divisor must be positive".into()));
    }
    let k = x.k();
    let ranges = x.coordinate_ranges();
    let width = ranges.iter().fold(T::zero(), |m, &(lo, hi)| m.max(hi - lo));
    if width <= T::zero() {
        let mut r = MedianResult::new(x.row(0).to_vec(), T::zero(), Algorithm::Grid);
        r.diag("final_spacing", Diagnostic::Real(0.0));
        return Ok(r);
    }
    let threshold = cfg.spacing_threshold.map_or(T::lit(1e-3) * width, T::lit);
    if !(threshold > T::zero()) {
        return Err(OjaError::InvalidInput("spacing_threshold must be positive".into()));
    }
    let mut h = width / T::from_usize_lossy(cfg.initial_spacing_divisor);

    let origin: Vec<T> = ranges.iter().map(|r| r.0).collect();
    let counts: Vec<usize> = ranges
        .iter()
        .map(|&(lo, hi)| ((hi - lo) / h + T::lit(1e-9)).floor().to_usize().unwrap_or(0) + 1)
        .collect();
    check_knots(&counts, cfg.max_knots)?;
    let mut grid = knots(&origin, h, &counts, &vec![0; k]);

    let mut cap = cfg.max_inner_iterations;
    let (mut rounds, mut levels, mut cap_hits) = (0, 0, 0);
    let survivor = loop {
        levels += 1;
        let e = eliminate(x, grid, cfg, cap, rng)?;
        rounds += e.rounds;
        if e.hit_cap {
            cap_hits += 1;
            cap = cfg.reduced_inner_iterations;
        }
        if h <= threshold {
            break e.survivor;
        }
        h = h / T::lit(2.0);
        let w = cfg.refine_half_width;
        let counts = vec![2 * w + 1; k];
        check_knots(&counts, cfg.max_knots)?;
        grid = knots(&e.survivor, h, &counts, &vec![-(w as i64); k]);
    };

    let full = binomial(x.n(), k) <= u128::from(enumeration_cap());
    let objective = if full {
        Objective::all(x)?.eval(&survivor)
    } else {
        let tuples = (0..1000).map(|_| random_subset(x.n(), k, rng)).collect();
        Objective::from_tuples(x, tuples).eval(&survivor)
    };
    let mut r = MedianResult::new(survivor, objective, Algorithm::Grid);
    r.iterations = rounds;
    r.hyperplanes_used = rounds * cfg.hyperplanes_per_round;
    r.diag("final_spacing", Diagnostic::Real(h.to_f64_lossy()));
    r.diag("levels", Diagnostic::Count(levels as u64));
    r.diag("cap_hits", Diagnostic::Count(cap_hits as u64));
    r.diag("objective_exact", Diagnostic::Flag(full));
    Ok(r)
}

fn check_knots(counts: &[usize], limit: u128) -> Result<()> {
    let knots = counts.iter().fold(1u128, |a, &c| a.saturating_mul(c as u128));
    if knots > limit {
        return Err(OjaError::GridTooLarge { knots, limit });
    }
    Ok(())
}
