//! Algorithm selection, the common result type, and repeat-averaging.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::DataMatrix;
use crate::error::{OjaError, Result};
use crate::evolutionary::{evolutionary_median, evolutionary_median_raw, EvoConfig};
use crate::exact::{bounded_exact_median, exact_median, BoundedConfig, ExactConfig};
use crate::grid::{grid_median, GridConfig};
use crate::objective::Objective;
use crate::oracle::brute_force_median;
use crate::scalar::Scalar;
use crate::subsets::{binomial, enumeration_cap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Exact,
    Bounded,
    Grid,
    Evolutionary,
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Exact, Algorithm::Bounded, Algorithm::Grid, Algorithm::Evolutionary, Algorithm::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Exact => "exact",
            Algorithm::Bounded => "bounded",
            Algorithm::Grid => "grid",
            Algorithm::Evolutionary => "evolutionary",
            Algorithm::Oracle => "oracle",
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Algorithm::Exact | Algorithm::Bounded | Algorithm::Oracle)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = OjaError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| OjaError::InvalidInput(format!("unknown algorithm '{s}'")))
    }
}

/// A diagnostic value attached to a result.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    Count(u64),
    Real(f64),
    Flag(bool),
    Text(String),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedianResult<T> {
    pub point: Vec<T>,
    pub objective: T,
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub hyperplanes_used: usize,
    pub region_volume_ratio: Option<T>,
    pub diagnostics: BTreeMap<String, Diagnostic>,
}

impl<T: Scalar> MedianResult<T> {
    pub(crate) fn new(point: Vec<T>, objective: T, algorithm: Algorithm) -> Self {
        Self {
            point,
            objective,
            algorithm,
            iterations: 0,
            hyperplanes_used: 0,
            region_volume_ratio: None,
            diagnostics: BTreeMap::new(),
        }
    }

    pub(crate) fn diag(&mut self, key: &str, value: Diagnostic) {
        self.diagnostics.insert(key.to_string(), value);
    }

    /// Criterion at the stored point re-evaluated over every tuple.
    pub fn check_objective(&self, x: &DataMatrix<T>) -> Result<T> {
        Ok(Objective::all(x)?.eval(&self.point))
    }
}

/// Per-algorithm settings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MedianConfig {
    pub exact: ExactConfig,
    pub bounded: BoundedConfig,
    pub grid: GridConfig,
    pub evo: EvoConfig,
    /// Skip whitening for the evolutionary algorithm.
    pub raw: bool,
}

/// Runs one algorithm once.
pub fn compute_median<T: Scalar, R: Rng + ?Sized>(
    x: &DataMatrix<T>,
    algorithm: Algorithm,
    cfg: &MedianConfig,
    rng: &mut R,
) -> Result<MedianResult<T>> {
    match algorithm {
        Algorithm::Exact => exact_median(x, &cfg.exact),
        Algorithm::Bounded => bounded_exact_median(x, &cfg.bounded, rng),
        Algorithm::Grid => grid_median(x, &cfg.grid, rng),
        Algorithm::Evolutionary if cfg.raw => evolutionary_median_raw(x, &cfg.evo, rng),
        Algorithm::Evolutionary => evolutionary_median(x, &cfg.evo, rng),
        Algorithm::Oracle => {
            let o = brute_force_median(x)?;
            let mut r = MedianResult::new(o.points[0].clone(), o.objective, Algorithm::Oracle);
            r.hyperplanes_used = o.hyperplanes;
            r.iterations = o.solves as usize;
            r.diag("minimizers", Diagnostic::Count(o.points.len() as u64));
            r.diag("minimizer_points", Diagnostic::Matrix(to_f64(&o.points)));
            Ok(r)
        }
    }
}

pub(crate) fn to_f64<T: Scalar>(rows: &[Vec<T>]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.iter().map(|v| v.to_f64_lossy()).collect()).collect()
}

/// Componentwise mean of `sp` runs, each with its own generator seeded from
/// `rng`; the criterion is re-evaluated at the average.
pub fn median_averaged<T: Scalar, R: Rng + ?Sized>(
    x: &DataMatrix<T>,
    algorithm: Algorithm,
    cfg: &MedianConfig,
    sp: usize,
    rng: &mut R,
) -> Result<MedianResult<T>> {
    if sp == 0 {
        return Err(OjaError::InvalidInput("sp must be at least 1".into()));
    }
    if sp == 1 {
        return compute_median(x, algorithm, cfg, rng);
    }
    let seeds: Vec<u64> = (0..sp).map(|_| rng.random()).collect();
    let runs = seeds
        .iter()
        .map(|&s| compute_median(x, algorithm, cfg, &mut ChaCha8Rng::seed_from_u64(s)))
        .collect::<Result<Vec<_>>>()?;
    let k = x.k();
    let mut point = vec![T::zero(); k];
    for r in &runs {
        for (p, &v) in point.iter_mut().zip(&r.point) {
            *p = *p + v;
        }
    }
    let c = T::from_usize_lossy(sp);
    point.iter_mut().for_each(|p| *p = *p / c);

    let full = binomial(x.n(), k) <= u128::from(enumeration_cap());
    let objective = if full {
        Objective::all(x)?.eval(&point)
    } else {
        // beyond the cap: average of the per-run criteria
        runs.iter().map(|r| r.objective).sum::<T>() / c
    };
    let mut out = MedianResult::new(point, objective, algorithm);
    out.iterations = runs.iter().map(|r| r.iterations).sum();
    out.hyperplanes_used = runs.iter().map(|r| r.hyperplanes_used).max().unwrap_or(0);
    out.diag("sp", Diagnostic::Count(sp as u64));
    out.diag("objective_exact", Diagnostic::Flag(full));
    out.diag("runs", Diagnostic::Matrix(to_f64(&runs.iter().map(|r| r.point.clone()).collect::<Vec<_>>())));
    Ok(out)
}
