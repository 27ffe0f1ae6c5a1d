//! Evolution strategy for the Oja median with a success-ratio variance rule,
//! and the whitening wrapper that restores affine equivariance approximately.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::error::{OjaError, Result};
use crate::linalg::{covariance_matrix, inverse_sqrt_psd, sqrt_psd};
use crate::median::{to_f64, Algorithm, Diagnostic, MedianResult};
use crate::objective::Objective;
use crate::scalar::Scalar;
use crate::subsets::{binomial, enumeration_cap, IndexTuple, SubsetCursor, random_subset};

#[derive(Debug, Clone, PartialEq)]
pub struct EvoConfig {
    /// Initial mutation standard deviation.
    pub sigma_init: f64,
    /// Mutations drawn per step.
    pub mutations: usize,
    /// Steps between variance adaptations.
    pub sigma_ada: usize,
    /// Variance factor applied at each adaptation, `> 1`.
    pub ada_factor: f64,
    /// Stop once the variance has fallen by this many decades.
    pub sigma_log10_dec: f64,
    /// Tuples sampled once per run; `None` means `min(1000, C(n, k))`.
    pub n_subsets_used: Option<usize>,
    pub use_all_subsets: bool,
    pub max_steps: usize,
    /// Success ratio above which the variance grows.
    pub success_ratio: f64,
}

impl Default for EvoConfig {
    fn default() -> Self {
        Self {
            sigma_init: 1.0,
            mutations: 10,
            sigma_ada: 10,
            ada_factor: 1.5,
            sigma_log10_dec: 4.0,
            n_subsets_used: None,
            use_all_subsets: false,
            max_steps: 10_000,
            success_ratio: 0.2,
        }
    }
}

impl EvoConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(OjaError::InvalidInput(m.into()));
        if !(self.ada_factor > 1.0) {
            return bad("ada_factor must exceed 1");
        }
        if !(self.sigma_log10_dec >= 0.0) {
            return bad("sigma_log10_dec must be nonnegative");
        }
        if !(self.sigma_init > 0.0) {
            return bad("sigma_init must be positive");
        }
        if self.mutations == 0 || self.sigma_ada == 0 {
            return bad("mutations and sigma_ada must be positive");
        }
        Ok(())
    }
}

/// Why the evolution stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    VarianceDecreased,
    MaxSteps,
}

struct Run<T> {
    point: Vec<T>,
    sample_objective: T,
    tuples: Option<Vec<IndexTuple>>,
    steps: usize,
    termination: Termination,
    sigma: f64,
    trace: Vec<T>,
}

fn tuples_for<T: Scalar, R: Rng + ?Sized>(x: &DataMatrix<T>, cfg: &EvoConfig, rng: &mut R) -> Result<Option<Vec<IndexTuple>>> {
    let total = binomial(x.n(), x.k());
    let want = cfg.n_subsets_used.unwrap_or(1000);
    if cfg.use_all_subsets || (cfg.n_subsets_used.is_none() && total <= want as u128) {
        if total > u128::from(enumeration_cap()) {
            return Err(OjaError::Overflow { n: x.n(), m: x.k(), count: total, cap: enumeration_cap() });
        }
        return Ok(None);
    }
    Ok(Some((0..want.max(1)).map(|_| random_subset(x.n(), x.k(), rng)).collect()))
}

fn all_tuples(n: usize, k: usize) -> Vec<IndexTuple> {
    let mut out = Vec::new();
    let mut cur = SubsetCursor::new(n, k);
    while let Some(t) = cur.advance() {
        out.push(IndexTuple(t.to_vec()));
    }
    out
}

fn evolve<T: Scalar, R: Rng + ?Sized>(x: &DataMatrix<T>, cfg: &EvoConfig, rng: &mut R) -> Result<Run<T>> {
    cfg.validate()?;
    x.require_median_size()?;
    let k = x.k();
    let tuples = tuples_for(x, cfg, rng)?;
    let obj = Objective::from_tuples(x, tuples.clone().unwrap_or_else(|| all_tuples(x.n(), k)));
    let eval_many = |pts: &[Vec<T>]| -> Vec<T> {
        if obj.len() * pts.len() >= 20_000 {
            pts.par_iter().map(|p| obj.eval(p)).collect()
        } else {
            pts.iter().map(|p| obj.eval(p)).collect()
        }
    };

    // best of up to ten random observations
    let starts: Vec<Vec<T>> = sample(rng, x.n(), x.n().min(10)).into_iter().map(|i| x.row(i).to_vec()).collect();
    let vals = eval_many(&starts);
    let first = (0..starts.len()).min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).expect("finite criterion")).unwrap_or(0);
    let mut point = starts[first].clone();
    let mut f = vals[first];

    let log_init = 2.0 * cfg.sigma_init.log10();
    let mut sigma = cfg.sigma_init;
    let mut successes = 0usize;
    let mut trials = 0usize;
    let mut trace = vec![f];
    let mut termination = Termination::MaxSteps;
    let mut steps = 0;
    for step in 1..=cfg.max_steps {
        steps = step;
        let len = Normal::new(0.0, sigma).map_err(|e| OjaError::InvalidInput(e.to_string()))?;
        let mutants: Vec<Vec<T>> = (0..cfg.mutations)
            .map(|_| {
                let dir: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
                let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                let l: f64 = len.sample(rng);
                let l = l.abs();
                point.iter().zip(&dir).map(|(&p, &d)| p + T::lit(l * d / dn)).collect()
            })
            .collect();
        let vals = eval_many(&mutants);
        trials += mutants.len();
        successes += vals.iter().filter(|&&v| v < f).count();
        if let Some(best) = (0..mutants.len()).min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).expect("finite criterion")) {
            if vals[best] < f {
                f = vals[best];
                point = mutants[best].clone();
                trace.push(f);
            }
        }
        if step % cfg.sigma_ada == 0 {
            let r = successes as f64 / trials as f64;
            let var = sigma * sigma * if r > cfg.success_ratio { cfg.ada_factor } else { 1.0 / cfg.ada_factor };
            sigma = var.sqrt();
            successes = 0;
            trials = 0;
        }
        if log_init - 2.0 * sigma.log10() >= cfg.sigma_log10_dec {
            termination = Termination::VarianceDecreased;
            break;
        }
    }
    Ok(Run { point, sample_objective: f, tuples, steps, termination, sigma, trace })
}

fn report<T: Scalar>(x: &DataMatrix<T>, run: &Run<T>, point: Vec<T>) -> Result<MedianResult<T>> {
    let full = binomial(x.n(), x.k()) <= u128::from(enumeration_cap());
    let objective = match (&run.tuples, full) {
        (None, _) | (_, true) => Objective::all(x)?.eval(&point),
        (Some(t), false) => Objective::from_tuples(x, t.clone()).eval(&point),
    };
    let mut r = MedianResult::new(point, objective, Algorithm::Evolutionary);
    r.iterations = run.steps;
    r.hyperplanes_used = run.tuples.as_ref().map_or(binomial(x.n(), x.k()) as usize, Vec::len);
    r.diag("objective_exact", Diagnostic::Flag(full || run.tuples.is_none()));
    r.diag("sample_objective", Diagnostic::Real(run.sample_objective.to_f64_lossy()));
    r.diag("final_sigma", Diagnostic::Real(run.sigma));
    r.diag(
        "termination",
        Diagnostic::Text(match run.termination {
            Termination::VarianceDecreased => "variance".into(),
            Termination::MaxSteps => "max_steps".into(),
        }),
    );
    r.diag("candidate_trace", Diagnostic::Matrix(vec![run.trace.iter().map(|v| v.to_f64_lossy()).collect()]));
    Ok(r)
}

/// Evolution strategy on the data as given.
pub fn evolutionary_median_raw<T: Scalar, R: Rng + ?Sized>(x: &DataMatrix<T>, cfg: &EvoConfig, rng: &mut R) -> Result<MedianResult<T>> {
    let run = evolve(x, cfg, rng)?;
    let p = run.point.clone();
    report(x, &run, p)
}

/// Evolution strategy on whitened data `R(x − mean)`, `R = cov⁻¹ᐟ²`, mapped back.
/// A singular covariance falls back to the raw run.
pub fn evolutionary_median<T: Scalar, R: Rng + ?Sized>(x: &DataMatrix<T>, cfg: &EvoConfig, rng: &mut R) -> Result<MedianResult<T>> {
    x.require_median_size()?;
    let s = covariance_matrix(x.rows());
    let w = match inverse_sqrt_psd(&s) {
        Ok(w) => w,
        Err(OjaError::SingularScatter { ratio }) => {
            let mut r = evolutionary_median_raw(x, cfg, rng)?;
            r.diag("whitening_fallback", Diagnostic::Flag(true));
            r.diag("scatter_eigen_ratio", Diagnostic::Real(ratio));
            return Ok(r);
        }
        Err(e) => return Err(e),
    };
    let mean = x.mean();
    let neg: Vec<T> = mean.iter().map(|&v| -v).collect();
    let y = x.affine(&w, &w.matvec(&neg));
    let run = evolve(&y, cfg, rng)?;
    let back = sqrt_psd(&s).matvec(&run.point);
    let point = back.iter().zip(&mean).map(|(&b, &m)| b + m).collect();
    let mut r = report(x, &run, point)?;
    r.diag("whitening_fallback", Diagnostic::Flag(false));
    r.diag("whitening", Diagnostic::Matrix(to_f64(&w.to_rows())));
    Ok(r)
}
