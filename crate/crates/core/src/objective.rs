//! The Oja criterion `Σ V(x_{i_1}, …, x_{i_k}, x)` and its exact minimisation
//! along a line.
//!
//! Along a line `a + t d` every simplex volume is `|α + β t| / k!`, so the
//! criterion is convex and piecewise linear in `t` with breakpoints where the
//! line crosses a data hyperplane.

use crate::data::DataMatrix;
use crate::error::{OjaError, Result};
use crate::geometry::{hyperplane_from_indices, side_of, Hyperplane, Source};
use crate::region::Region;
use crate::scalar::{dot, factorial, norm, Scalar};
use crate::subsets::{binomial, check_enumeration, enumeration_cap, IndexTuple, SubsetCursor};

/// Hyperplanes in flat storage: `offsets[i] + normals[i*k..(i+1)*k] · x`.
#[derive(Debug, Clone, Default)]
pub struct PlaneSet<T> {
    k: usize,
    offsets: Vec<T>,
    normals: Vec<T>,
    norms: Vec<T>,
}

impl<T: Scalar> PlaneSet<T> {
    pub fn new(k: usize) -> Self {
        Self { k, offsets: Vec::new(), normals: Vec::new(), norms: Vec::new() }
    }

    pub fn push(&mut self, offset: T, normal: &[T]) {
        debug_assert_eq!(normal.len(), self.k);
        self.offsets.push(offset);
        self.normals.extend_from_slice(normal);
        self.norms.push(norm(normal));
    }

    pub fn push_plane(&mut self, h: &Hyperplane<T>) {
        self.push(h.offset, &h.normal);
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn offset(&self, i: usize) -> T {
        self.offsets[i]
    }

    pub fn normal(&self, i: usize) -> &[T] {
        &self.normals[i * self.k..(i + 1) * self.k]
    }

    pub fn normal_norm(&self, i: usize) -> T {
        self.norms[i]
    }

    pub fn eval(&self, i: usize, x: &[T]) -> T {
        self.offsets[i] + dot(self.normal(i), x)
    }

    pub fn side(&self, i: usize, x: &[T]) -> T {
        side_of(self.offsets[i], self.normal(i), x)
    }

    pub fn plane(&self, i: usize) -> Hyperplane<T> {
        Hyperplane::synthetic(self.offsets[i], self.normal(i).to_vec())
    }

    pub fn truncate(&mut self, len: usize) {
        self.offsets.truncate(len);
        self.normals.truncate(len * self.k);
        self.norms.truncate(len);
    }
}

/// Which index tuples enter the criterion.
#[derive(Debug, Clone)]
pub enum Subsets {
    All,
    Explicit(Vec<IndexTuple>),
}

/// The Oja criterion of a fixed sample over a fixed list of `k`-tuples.
#[derive(Debug, Clone)]
pub struct Objective<T> {
    planes: PlaneSet<T>,
    tuples: Vec<IndexTuple>,
    degenerate: usize,
    inv_kfact: T,
    total_tuples: u128,
}

impl<T: Scalar> Objective<T> {
    /// All `C(n, k)` data hyperplanes, guarded by the process enumeration cap.
    pub fn all(x: &DataMatrix<T>) -> Result<Self> {
        Self::all_with_cap(x, enumeration_cap())
    }

    pub fn all_with_cap(x: &DataMatrix<T>, cap: u64) -> Result<Self> {
        let count = check_enumeration(x.n(), x.k(), cap)?;
        let mut tuples = Vec::with_capacity(count as usize);
        let mut cur = SubsetCursor::new(x.n(), x.k());
        while let Some(t) = cur.advance() {
            tuples.push(IndexTuple(t.to_vec()));
        }
        Ok(Self::from_tuples(x, tuples))
    }

    pub fn from_tuples(x: &DataMatrix<T>, tuples: Vec<IndexTuple>) -> Self {
        let k = x.k();
        let mut planes = PlaneSet::new(k);
        let mut degenerate = 0;
        for t in &tuples {
            let h = hyperplane_from_indices(x, t.as_slice());
            if h.is_degenerate() {
                degenerate += 1;
            }
            planes.push_plane(&h);
        }
        Self {
            planes,
            tuples,
            degenerate,
            inv_kfact: T::one() / factorial::<T>(k),
            total_tuples: binomial(x.n(), k),
        }
    }

    pub fn with_subsets(x: &DataMatrix<T>, subsets: &Subsets) -> Result<Self> {
        match subsets {
            Subsets::All => Self::all(x),
            Subsets::Explicit(t) => {
                if let Some(bad) = t.iter().find(|t| t.len() != x.k() || t.as_slice().iter().any(|&i| i >= x.n())) {
                    return Err(OjaError::InvalidInput(format!("tuple {bad} is not a {}-subset", x.k())));
                }
                Ok(Self::from_tuples(x, t.clone()))
            }
        }
    }

    pub fn k(&self) -> usize {
        self.planes.k()
    }

    pub fn planes(&self) -> &PlaneSet<T> {
        &self.planes
    }

    pub fn tuples(&self) -> &[IndexTuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate
    }

    /// True when every tuple of `P_{n,k}` is included exactly once.
    pub fn is_complete(&self) -> bool {
        self.tuples.len() as u128 == self.total_tuples
    }

    /// Data hyperplane `i` with its spanning tuple.
    pub fn hyperplane(&self, i: usize) -> Hyperplane<T> {
        self.planes.plane(i).with_source(Source::Tuple(self.tuples[i].clone()))
    }

    pub fn eval(&self, x: &[T]) -> T {
        let p = &self.planes;
        (0..p.len()).map(|i| p.eval(i, x).abs()).sum::<T>() * self.inv_kfact
    }

    /// `Σ_h sgn(h(x)) ∇h`, the gradient of `k!` times the criterion
    /// (one subgradient where it is not differentiable).
    pub fn gradient_sum(&self, x: &[T]) -> Vec<T> {
        let p = &self.planes;
        let mut g = vec![T::zero(); p.k()];
        for i in 0..p.len() {
            let s = p.side(i, x);
            if s != T::zero() {
                for (gj, &c) in g.iter_mut().zip(p.normal(i)) {
                    *gj = *gj + s * c;
                }
            }
        }
        g
    }

    /// One-sided directional derivative of the criterion at `x` along `d`.
    pub fn directional_derivative(&self, x: &[T], d: &[T]) -> T {
        let p = &self.planes;
        let mut s = T::zero();
        for i in 0..p.len() {
            let beta = dot(p.normal(i), d);
            let side = p.side(i, x);
            s = s + if side == T::zero() { beta.abs() } else { side * beta };
        }
        s * self.inv_kfact
    }
}

/// Oja criterion of `x` with respect to `X`.
pub fn oja_objective<T: Scalar>(x_data: &DataMatrix<T>, x: &[T], subsets: &Subsets) -> Result<T> {
    x_data.check_point(x)?;
    Ok(Objective::with_subsets(x_data, subsets)?.eval(x))
}

/// Monotone depth transform `1 / (1 + objective / C(n, k))`.
pub fn depth_from_objective<T: Scalar>(objective: T, n: usize, k: usize) -> T {
    let c = T::from_u128(binomial(n, k)).unwrap_or_else(T::infinity);
    T::one() / (T::one() + objective / c)
}

/// Oja depth of `x`; larger means more central.
pub fn oja_depth<T: Scalar>(x_data: &DataMatrix<T>, x: &[T]) -> Result<T> {
    let obj = oja_objective(x_data, x, &Subsets::All)?;
    Ok(depth_from_objective(obj, x_data.n(), x_data.k()))
}

/// Line `anchor + t · direction`.
#[derive(Debug, Clone, PartialEq)]
pub struct Line<T> {
    anchor: Vec<T>,
    direction: Vec<T>,
}

impl<T: Scalar> Line<T> {
    pub fn new(anchor: Vec<T>, direction: Vec<T>) -> Result<Self> {
        if anchor.len() != direction.len() {
            return Err(OjaError::DimensionMismatch { expected: anchor.len(), got: direction.len() });
        }
        if !(norm(&direction) > T::zero()) {
            return Err(OjaError::InvalidInput("line direction must be nonzero".into()));
        }
        Ok(Self { anchor, direction })
    }

    pub fn through(a: &[T], b: &[T]) -> Result<Self> {
        Self::new(a.to_vec(), b.iter().zip(a).map(|(&p, &q)| p - q).collect())
    }

    pub fn anchor(&self) -> &[T] {
        &self.anchor
    }

    pub fn direction(&self) -> &[T] {
        &self.direction
    }

    pub fn at(&self, t: T) -> Vec<T> {
        self.anchor.iter().zip(&self.direction).map(|(&a, &d)| a + t * d).collect()
    }
}

/// How the criterion is minimised along a line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineSearchMode {
    /// Evaluate the full criterion at every crossing.
    Full,
    /// Weighted-median sweep over the breakpoints, exploiting piecewise linearity.
    Sweep,
    /// `Full` for small arrangements, `Sweep` otherwise.
    #[default]
    Auto,
}

impl LineSearchMode {
    pub(crate) fn resolve(self, planes: usize) -> Self {
        match self {
            LineSearchMode::Auto if planes <= AUTO_FULL_LIMIT => LineSearchMode::Full,
            LineSearchMode::Auto => LineSearchMode::Sweep,
            m => m,
        }
    }
}

/// Largest number of data hyperplanes for which `Auto` uses full evaluation.
pub const AUTO_FULL_LIMIT: usize = 600;

/// Outcome of [`minimize_on_line`].
#[derive(Debug, Clone, PartialEq)]
pub struct LineMinimum<T> {
    pub point: Vec<T>,
    pub objective: T,
    pub t: T,
    /// Index into the crossing set of a hyperplane meeting the line at `t`.
    pub crossing: usize,
    /// Smallest and largest crossing parameter attaining the minimum.
    pub tied: (T, T),
}

/// Minimises the criterion over the points where `line` crosses a hyperplane of
/// `crossing` (parallel hyperplanes skipped), optionally restricted to a
/// region. Ties go to the smallest parameter.
pub fn minimize_on_line<T: Scalar>(
    objective: &Objective<T>,
    crossing: &PlaneSet<T>,
    line: &Line<T>,
    restrict: Option<&Region<T>>,
    mode: LineSearchMode,
) -> Result<LineMinimum<T>> {
    let d = line.direction();
    let a = line.anchor();
    let dn = norm(d);
    let (lo, hi) = match restrict {
        Some(r) => r.line_interval(line).ok_or(OjaError::NoIntersection)?,
        None => (T::neg_infinity(), T::infinity()),
    };
    let par_tol = T::lit(1e-12);
    let t_slack = restrict.map_or(T::zero(), |r| r.slack() / dn);

    let mut cross: Vec<(T, usize)> = Vec::new();
    for i in 0..crossing.len() {
        let beta = dot(crossing.normal(i), d);
        if beta.abs() <= par_tol * crossing.normal_norm(i) * dn {
            continue;
        }
        let t = -crossing.eval(i, a) / beta;
        if t >= lo - t_slack && t <= hi + t_slack {
            cross.push((t.max(lo).min(hi), i));
        }
    }
    if cross.is_empty() {
        return Err(OjaError::NoIntersection);
    }
    cross.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal).then(x.1.cmp(&y.1)));

    match mode.resolve(objective.len()) {
        LineSearchMode::Sweep => sweep_minimum(objective, line, &cross, lo, hi),
        _ => full_minimum(objective, line, &cross),
    }
}

fn tie_tol<T: Scalar>(f: T) -> T {
    T::lit(1e-11) * f.abs().max(T::epsilon())
}

fn full_minimum<T: Scalar>(objective: &Objective<T>, line: &Line<T>, cross: &[(T, usize)]) -> Result<LineMinimum<T>> {
    let values: Vec<T> = cross.iter().map(|&(t, _)| objective.eval(&line.at(t))).collect();
    let fmin = values.iter().fold(T::infinity(), |m, &v| m.min(v));
    let tol = tie_tol(fmin);
    let first = values.iter().position(|&v| v <= fmin + tol).expect("nonempty crossing set");
    let last = values.iter().rposition(|&v| v <= fmin + tol).expect("nonempty crossing set");
    let (t, idx) = cross[first];
    let point = line.at(t);
    Ok(LineMinimum { objective: values[first], point, t, crossing: idx, tied: (t, cross[last].0) })
}

fn sweep_minimum<T: Scalar>(
    objective: &Objective<T>,
    line: &Line<T>,
    cross: &[(T, usize)],
    lo: T,
    hi: T,
) -> Result<LineMinimum<T>> {
    let planes = objective.planes();
    let d = line.direction();
    let a = line.anchor();
    let dn = norm(d);
    let mut bps: Vec<(T, T)> = Vec::with_capacity(planes.len());
    let mut total = T::zero();
    for i in 0..planes.len() {
        let beta = dot(planes.normal(i), d);
        if beta.abs() <= T::lit(1e-12) * planes.normal_norm(i) * dn {
            continue;
        }
        bps.push((-planes.eval(i, a) / beta, beta.abs()));
        total = total + beta.abs();
    }
    bps.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));

    // slope just right of each breakpoint; argmin = [t_a, t_b]
    let flat = T::lit(1e-12) * total;
    let (mut t_a, mut t_b) = (T::neg_infinity(), T::infinity());
    if total > T::zero() {
        let mut slope = -total;
        let mut j = 0;
        while j < bps.len() {
            let t = bps[j].0;
            while j < bps.len() && bps[j].0 == t {
                slope = slope + T::lit(2.0) * bps[j].1;
                j += 1;
            }
            if slope >= -flat {
                t_a = t;
                t_b = if slope <= flat { bps.get(j).map_or(T::infinity(), |b| b.0) } else { t };
                break;
            }
        }
    }
    let (mut s_lo, mut s_hi) = (t_a.max(lo), t_b.min(hi));
    if s_lo > s_hi {
        // argmin lies outside the admissible interval: clamp
        if t_b < lo {
            s_lo = lo;
            s_hi = lo;
        } else {
            s_lo = hi;
            s_hi = hi;
        }
    }

    // crossings attaining the minimum, preferring the smallest parameter
    let scale = T::lit(1e-9) * (T::one() + s_lo.abs().min(s_hi.abs()).min(T::lit(1e6)));
    let in_tie: Vec<&(T, usize)> = cross.iter().filter(|c| c.0 >= s_lo - scale && c.0 <= s_hi + scale).collect();
    let (first, last) = match (in_tie.first(), in_tie.last()) {
        (Some(f), Some(l)) => (**f, **l),
        _ => {
            // nearest crossing to the analytic minimiser
            let target = if s_lo.is_finite() { s_lo } else { s_hi };
            let c = *cross
                .iter()
                .min_by(|x, y| (x.0 - target).abs().partial_cmp(&(y.0 - target).abs()).unwrap_or(std::cmp::Ordering::Equal))
                .expect("nonempty crossing set");
            (c, c)
        }
    };
    let point = line.at(first.0);
    Ok(LineMinimum { objective: objective.eval(&point), point, t: first.0, crossing: first.1, tied: (first.0, last.0) })
}
