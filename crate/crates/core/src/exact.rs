//! Exact Oja median by walking over vertices of the hyperplane arrangement,
//! optionally inside a region shrunk by rank-direction cuts.
//!
//! Along a line the criterion is convex and piecewise linear with breaks
//! where the line crosses a data hyperplane, so each line search ends on a
//! crossing. A candidate is accepted only on strict improvement. When the
//! `k` hyperplanes that produced a candidate give no improving line, every
//! arrangement edge through the candidate is screened by its one-sided
//! directional derivative; a vertex with no descending edge is a global
//! minimiser because the criterion is convex.

use std::collections::{HashSet, VecDeque};

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::data::DataMatrix;
use crate::error::{OjaError, Result};
use crate::geometry::{cross_direction, Hyperplane};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::median::{Algorithm, Diagnostic, MedianResult};
use crate::objective::{minimize_on_line, Line, LineSearchMode, Objective, PlaneSet};
use crate::region::{CutOutcome, Region};
use crate::scalar::{dist, dot, factorial, norm, Scalar};
use crate::subsets::{random_subset, SubsetCursor};

#[derive(Debug, Clone, PartialEq)]
pub struct ExactConfig {
    /// Candidate moves allowed; `None` means `n`.
    pub max_rounds: Option<usize>,
    pub line_search: LineSearchMode,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self { max_rounds: None, line_search: LineSearchMode::Auto }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundedConfig {
    /// Stop cutting once the bounding-box volume falls to this fraction of the initial one.
    pub volume_ratio: f64,
    pub max_rounds: Option<usize>,
    pub max_cuts: usize,
    /// Stop cutting after this many consecutive cuts that shrink the box
    /// volume by less than 1%; a median set of positive dimension keeps a
    /// box of positive volume.
    pub stall_cuts: usize,
    pub line_search: LineSearchMode,
}

impl Default for BoundedConfig {
    fn default() -> Self {
        Self { volume_ratio: 1e-8, max_rounds: None, max_cuts: 1000, stall_cuts: 10, line_search: LineSearchMode::Auto }
    }
}

/// The data hyperplanes with coincidence diagnostics.
#[derive(Debug, Clone)]
pub struct HyperplaneSet<T> {
    pub hyperplanes: Vec<Hyperplane<T>>,
    /// Tuples whose points are affinely dependent.
    pub degenerate: usize,
    /// Largest number of tuples spanning one and the same hyperplane.
    pub max_multiplicity: usize,
}

/// One hyperplane per `k`-tuple, in lexicographic tuple order. Coincident
/// hyperplanes are kept and counted.
pub fn enumerate_hyperplanes<T: Scalar>(x: &DataMatrix<T>) -> Result<HyperplaneSet<T>> {
    let obj = Objective::all(x)?;
    let hyperplanes: Vec<Hyperplane<T>> = (0..obj.len()).map(|i| obj.hyperplane(i)).collect();
    let mut keys: Vec<Vec<i64>> = hyperplanes.iter().filter(|h| !h.is_degenerate()).map(|h| plane_key(h, x.scale())).collect();
    keys.sort_unstable();
    let mut max_multiplicity = usize::from(!keys.is_empty());
    let mut run = 1;
    for w in keys.windows(2) {
        run = if w[0] == w[1] { run + 1 } else { 1 };
        max_multiplicity = max_multiplicity.max(run);
    }
    Ok(HyperplaneSet { hyperplanes, degenerate: obj.degenerate_count(), max_multiplicity })
}

fn plane_key<T: Scalar>(h: &Hyperplane<T>, scale: T) -> Vec<i64> {
    let nn = norm(&h.normal);
    let lead = h.normal.iter().copied().find(|c| c.abs() > T::lit(1e-9) * nn).unwrap_or(T::one());
    let s = if lead < T::zero() { -T::one() / nn } else { T::one() / nn };
    let q = |v: T| (v * T::lit(1e8)).round().to_i64().unwrap_or(i64::MAX);
    let mut key: Vec<i64> = h.normal.iter().map(|&c| q(c * s)).collect();
    key.push(q(h.offset * s / scale));
    key
}

/// Crossing set, objective and tolerances shared by the walks.
struct Walker<'a, T> {
    obj: &'a Objective<T>,
    crossing: PlaneSet<T>,
    n_data: usize,
    region: Option<&'a Region<T>>,
    mode: LineSearchMode,
    scale: T,
    inv_kfact: T,
}

/// A line through the candidate, with the crossing-set indices that define it.
struct Edge<T> {
    dir: Vec<T>,
    planes: Vec<usize>,
}

struct Step<T> {
    point: Vec<T>,
    objective: T,
    defining: Vec<usize>,
}

impl<'a, T: Scalar> Walker<'a, T> {
    fn new(obj: &'a Objective<T>, region: Option<&'a Region<T>>, mode: LineSearchMode, scale: T) -> Self {
        let mut crossing = obj.planes().clone();
        let n_data = crossing.len();
        if let Some(r) = region {
            for b in r.bounds() {
                crossing.push_plane(b);
            }
        }
        let inv_kfact = T::one() / factorial::<T>(obj.k());
        Self { obj, crossing, n_data, region, mode, scale, inv_kfact }
    }

    fn k(&self) -> usize {
        self.obj.k()
    }

    fn improves(&self, new: T, old: T) -> bool {
        new < old - T::lit(1e-11) * old.abs().max(T::min_positive_value())
    }

    /// Crossing-set indices of the hyperplanes through `p`.
    fn active(&self, p: &[T]) -> Vec<usize> {
        let tol = T::lit(1e-9) * self.scale;
        (0..self.crossing.len())
            .filter(|&i| {
                let nn = self.crossing.normal_norm(i);
                nn > T::zero() && self.crossing.eval(i, p).abs() <= tol * nn
            })
            .collect()
    }

    fn edge(&self, planes: &[usize]) -> Option<Edge<T>> {
        let normals: Vec<&[T]> = planes.iter().map(|&i| self.crossing.normal(i)).collect();
        let mut d = cross_direction(&normals, self.k());
        let dn = norm(&d);
        let size: T = planes.iter().map(|&i| self.crossing.normal_norm(i)).fold(T::one(), |a, b| a * b);
        if dn <= T::lit(1e-10) * size {
            return None;
        }
        d.iter_mut().for_each(|v| *v = *v / dn);
        Some(Edge { dir: d, planes: planes.to_vec() })
    }

    /// Distinct edges spanned by `(k−1)`-subsets of `planes`.
    fn edges(&self, planes: &[usize]) -> Vec<Edge<T>> {
        let k = self.k();
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut cur = SubsetCursor::new(planes.len(), k - 1);
        let mut sel = Vec::with_capacity(k - 1);
        while let Some(t) = cur.advance() {
            sel.clear();
            sel.extend(t.iter().map(|&j| planes[j]));
            if let Some(e) = self.edge(&sel) {
                if seen.insert(direction_key(&e.dir)) {
                    out.push(e);
                }
            }
        }
        out
    }

    fn search(&self, p: &[T], e: &Edge<T>) -> Option<(Step<T>, (T, T))> {
        let line = Line::new(p.to_vec(), e.dir.clone()).ok()?;
        let m = minimize_on_line(self.obj, &self.crossing, &line, self.region, self.mode).ok()?;
        let mut defining = e.planes.clone();
        defining.push(m.crossing);
        Some((Step { point: m.point, objective: m.objective, defining }, m.tied))
    }

    /// Best improving line among `edges`.
    fn best_of(&self, p: &[T], f: T, edges: &[Edge<T>]) -> Option<Step<T>> {
        let mut best: Option<Step<T>> = None;
        for e in edges {
            if let Some((s, _)) = self.search(p, e) {
                if self.improves(s.objective, best.as_ref().map_or(f, |b| b.objective)) {
                    best = Some(s);
                }
            }
        }
        best
    }

    /// Edges at `p` ordered by steepest one-sided descent; only descending ones.
    fn descending(&self, p: &[T], active: &[usize]) -> Vec<Edge<T>> {
        let data_active: Vec<usize> = active.iter().copied().filter(|&i| i < self.n_data).collect();
        let mut on = vec![false; self.n_data];
        data_active.iter().for_each(|&i| on[i] = true);
        let k = self.k();
        let mut g = vec![T::zero(); k];
        let mut mass = T::zero();
        for i in 0..self.n_data {
            mass = mass + self.crossing.normal_norm(i);
            if on[i] {
                continue;
            }
            let s = self.crossing.side(i, p);
            if s != T::zero() {
                for (gj, &c) in g.iter_mut().zip(self.crossing.normal(i)) {
                    *gj = *gj + s * c;
                }
            }
        }
        let tol = T::lit(1e-12) * mass;
        let mut scored: Vec<(T, Edge<T>)> = Vec::new();
        for mut e in self.edges(active) {
            let kink: T = data_active.iter().map(|&i| dot(self.crossing.normal(i), &e.dir).abs()).sum();
            let lin = dot(&g, &e.dir);
            let (plus, minus) = (lin + kink, -lin + kink);
            let slope = plus.min(minus);
            if slope < -tol {
                if minus < plus {
                    e.dir.iter_mut().for_each(|v| *v = -*v);
                }
                scored.push((slope * self.inv_kfact, e));
            }
        }
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        scored.into_iter().map(|(_, e)| e).collect()
    }

    /// Walks from `start` until no arrangement edge improves or `max_rounds`
    /// moves were made.
    fn walk(&self, start: Step<T>, max_rounds: usize, data_points: Option<&DataMatrix<T>>) -> Walk<T> {
        let mut cur = start;
        let mut visited = HashSet::new();
        visited.insert(point_key(&cur.point, self.scale));
        let mut rounds = 0;
        let mut trace = vec![cur.objective];
        let mut converged = false;
        let mut screened = 0usize;
        while rounds < max_rounds {
            let mut next = None;
            if cur.defining.len() == self.k() {
                let quick = self.edges(&cur.defining);
                next = self.best_of(&cur.point, cur.objective, &quick);
            }
            if next.is_none() {
                if let Some(x) = data_points {
                    // lines towards the other observations are edges when the candidate is an observation
                    if rounds == 0 {
                        next = self.toward_points(&cur, x);
                    }
                }
            }
            if next.is_none() {
                let active = self.active(&cur.point);
                let edges = self.descending(&cur.point, &active);
                screened += 1;
                for e in &edges {
                    if let Some((s, _)) = self.search(&cur.point, e) {
                        if self.improves(s.objective, cur.objective) {
                            next = Some(s);
                            break;
                        }
                    }
                }
            }
            match next {
                Some(s) if visited.insert(point_key(&s.point, self.scale)) => {
                    trace.push(s.objective);
                    cur = s;
                    rounds += 1;
                }
                Some(_) => break,
                None => {
                    converged = true;
                    break;
                }
            }
        }
        Walk { last: cur, rounds, converged, trace, screened }
    }

    fn toward_points(&self, cur: &Step<T>, x: &DataMatrix<T>) -> Option<Step<T>> {
        let tol = T::lit(1e-9) * self.scale;
        let mut edges = Vec::new();
        for r in x.rows() {
            let d: Vec<T> = r.iter().zip(&cur.point).map(|(&a, &b)| a - b).collect();
            let dn = norm(&d);
            if dn > tol {
                edges.push(Edge { dir: d.iter().map(|&v| v / dn).collect(), planes: Vec::new() });
            }
        }
        let mut s = self.best_of(&cur.point, cur.objective, &edges)?;
        // the edge planes are unknown here; let the next round recompute them
        s.defining.clear();
        Some(s)
    }
}

struct Walk<T> {
    last: Step<T>,
    rounds: usize,
    converged: bool,
    trace: Vec<T>,
    screened: usize,
}

fn direction_key<T: Scalar>(d: &[T]) -> Vec<i64> {
    let lead = d.iter().copied().find(|v| v.abs() > T::lit(1e-9)).unwrap_or(T::one());
    let s = if lead < T::zero() { -T::one() } else { T::one() };
    d.iter().map(|&v| (v * s * T::lit(1e9)).round().to_i64().unwrap_or(i64::MAX)).collect()
}

fn point_key<T: Scalar>(p: &[T], scale: T) -> Vec<i64> {
    let q = T::lit(1e-9) * scale.max(T::min_positive_value());
    p.iter().map(|&v| (v / q).round().to_i64().unwrap_or(i64::MAX)).collect()
}

fn check_start<T: Scalar>(x: &DataMatrix<T>, obj: &Objective<T>) -> Result<()> {
    x.require_median_size()?;
    if obj.degenerate_count() == obj.len() {
        return Err(OjaError::DegenerateData("every k-tuple of observations is affinely dependent".into()));
    }
    // the hyperplanes have a common vertex only if their normals span ℝ^k
    let k = x.k();
    let planes = obj.planes();
    let mut g = Matrix::zeros(k, k);
    for i in 0..planes.len() {
        let nn = planes.normal_norm(i);
        if nn == T::zero() {
            continue;
        }
        let u: Vec<T> = planes.normal(i).iter().map(|&c| c / nn).collect();
        for a in 0..k {
            for b in 0..k {
                g[(a, b)] = g[(a, b)] + u[a] * u[b];
            }
        }
    }
    let (ev, _) = symmetric_eigen(&g);
    if ev[0] <= T::lit(1e-10) * ev[k - 1] {
        return Err(OjaError::DegenerateData("the observations lie in a lower-dimensional affine subspace".into()));
    }
    Ok(())
}

/// Index of the observation nearest to the sample mean.
fn nearest_to_mean<T: Scalar>(x: &DataMatrix<T>) -> usize {
    let m = x.mean();
    (0..x.n())
        .min_by(|&a, &b| dist(x.row(a), &m).partial_cmp(&dist(x.row(b), &m)).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0)
}

fn finish<T: Scalar>(walk: &Walk<T>, obj: &Objective<T>, algorithm: Algorithm) -> MedianResult<T> {
    let point = walk.last.point.clone();
    let mut r = MedianResult::new(point.clone(), obj.eval(&point), algorithm);
    r.iterations = walk.rounds;
    r.hyperplanes_used = obj.len() - obj.degenerate_count();
    r.diag("converged", Diagnostic::Flag(walk.converged));
    r.diag("degenerate_tuples", Diagnostic::Count(obj.degenerate_count() as u64));
    r.diag("edge_screenings", Diagnostic::Count(walk.screened as u64));
    r.diag("objective_trace", Diagnostic::Matrix(vec![walk.trace.iter().map(|v| v.to_f64_lossy()).collect()]));
    r
}

/// Exact Oja median by the candidate walk, started at the observation
/// nearest to the mean.
pub fn exact_median<T: Scalar>(x: &DataMatrix<T>, cfg: &ExactConfig) -> Result<MedianResult<T>> {
    let obj = Objective::all(x)?;
    check_start(x, &obj)?;
    let w = Walker::new(&obj, None, cfg.line_search, x.scale());
    let c = nearest_to_mean(x);
    let p = x.row(c).to_vec();
    let start = Step { objective: obj.eval(&p), point: p, defining: Vec::new() };
    let walk = w.walk(start, cfg.max_rounds.unwrap_or(x.n()), Some(x));
    Ok(finish(&walk, &obj, Algorithm::Exact))
}

/// One halfspace of the bounded algorithm: `normal · (x − center) ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut<T> {
    pub center: Vec<T>,
    pub normal: Vec<T>,
}

impl<T: Scalar> Cut<T> {
    /// Signed slack of `x`, scaled to unit normal.
    pub fn margin(&self, x: &[T]) -> T {
        let d: Vec<T> = x.iter().zip(&self.center).map(|(&a, &b)| a - b).collect();
        dot(&self.normal, &d) / norm(&self.normal)
    }
}

/// Cuts made by [`bounded_exact_median_traced`] and the region they left.
#[derive(Debug, Clone)]
pub struct BoundedTrace<T> {
    pub cuts: Vec<Cut<T>>,
    pub region: Region<T>,
    /// Set when a zero-rank center ended the cutting.
    pub median_found: Option<Vec<T>>,
    pub rollbacks: usize,
    /// Cutting ended because the volume stopped shrinking.
    pub stalled: bool,
}

/// Exact Oja median restricted to a region shrunk by rank cuts.
pub fn bounded_exact_median<T: Scalar, R: Rng + ?Sized>(
    x: &DataMatrix<T>,
    cfg: &BoundedConfig,
    rng: &mut R,
) -> Result<MedianResult<T>> {
    Ok(bounded_exact_median_traced(x, cfg, rng)?.0)
}

pub fn bounded_exact_median_traced<T: Scalar, R: Rng + ?Sized>(
    x: &DataMatrix<T>,
    cfg: &BoundedConfig,
    rng: &mut R,
) -> Result<(MedianResult<T>, BoundedTrace<T>)> {
    if !(cfg.volume_ratio > 0.0 && cfg.volume_ratio < 1.0) {
        return Err(OjaError::InvalidInput("volume_ratio must lie in (0, 1)".into()));
    }
    let obj = Objective::all(x)?;
    check_start(x, &obj)?;
    let mut region = Region::init_bbox(x);
    let v0 = region.bbox_volume();
    let mut trace = BoundedTrace { cuts: Vec::new(), region: region.clone(), median_found: None, rollbacks: 0, stalled: false };
    let target = T::lit(cfg.volume_ratio);
    let mut retried = false;
    let cutting = v0 > T::zero() && !region.is_flat();
    let (mut reference, mut stalled) = (v0, 0);
    let max_bounds = 16 * x.k() + 16;
    while cutting && trace.cuts.len() < cfg.max_cuts && region.bbox_volume() / v0 > target {
        let v = region.bbox_volume();
        if v < T::lit(0.99) * reference {
            reference = v;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if stalled > cfg.stall_cuts || region.bounds().len() > max_bounds {
            trace.stalled = true;
            break;
        }
        match region.cut(&obj) {
            Ok(CutOutcome::MedianFound(c)) => {
                trace.median_found = Some(c);
                break;
            }
            Ok(CutOutcome::Cut(next)) => {
                let center = region.center();
                let g = obj.gradient_sum(&center);
                trace.cuts.push(Cut { center, normal: g.iter().map(|&v| -v).collect() });
                region = next;
            }
            Err(OjaError::EmptyRegion) if !retried => {
                retried = true;
                trace.rollbacks += 1;
                let s = region.slack() / T::lit(2.0);
                region.set_slack(s);
            }
            Err(OjaError::EmptyRegion) => break,
            Err(e) => return Err(e),
        }
    }
    let ratio = if v0 > T::zero() { region.bbox_volume() / v0 } else { T::zero() };
    trace.region = region.clone();

    // a zero-rank center is optimal; the walk still runs so that a vertex of
    // the median set is reported, and the center is kept if the walk ends worse
    let w = Walker::new(&obj, Some(&region), cfg.line_search, x.scale());
    let start = random_border_start(&w, &region, &obj, rng)?;
    let walk = w.walk(start, cfg.max_rounds.unwrap_or(x.n()), None);
    let mut result = finish(&walk, &obj, Algorithm::Bounded);
    result.hyperplanes_used += region.bounds().len();
    if let Some(c) = &trace.median_found {
        let fc = obj.eval(c);
        if fc < result.objective - T::lit(1e-11) * fc.abs().max(T::one()) {
            result.point = c.clone();
            result.objective = fc;
        }
    }
    result.diag("median_found_by_cut", Diagnostic::Flag(trace.median_found.is_some()));
    result.region_volume_ratio = Some(ratio);
    result.diag("cuts", Diagnostic::Count(trace.cuts.len() as u64));
    result.diag("region_bounds", Diagnostic::Count(region.bounds().len() as u64));
    result.diag("region_vertices", Diagnostic::Count(region.vertices().len() as u64));
    result.diag("rollbacks", Diagnostic::Count(trace.rollbacks as u64));
    result.diag("cutting_stalled", Diagnostic::Flag(trace.stalled));
    Ok((result, trace))
}

/// First candidate: line minimum along a random edge at a random region vertex.
fn random_border_start<T: Scalar, R: Rng + ?Sized>(
    w: &Walker<'_, T>,
    region: &Region<T>,
    obj: &Objective<T>,
    rng: &mut R,
) -> Result<Step<T>> {
    let k = region.k();
    let n_data = w.n_data;
    let v = region.vertices().choose(rng).ok_or(OjaError::EmptyRegion)?;
    let pick = random_subset(v.active.len(), (k - 1).min(v.active.len()), rng);
    let planes: Vec<usize> = pick.as_slice().iter().map(|&j| n_data + v.active[j]).collect();
    let candidates = std::iter::once(planes).chain(std::iter::once(Vec::new()));
    for planes in candidates {
        let edge = if planes.len() == k - 1 { w.edge(&planes) } else { None };
        let edges = match edge {
            Some(e) => vec![e],
            // degenerate corner: every edge at the vertex
            None => w.edges(&v.active.iter().map(|&b| n_data + b).collect::<Vec<_>>()),
        };
        for e in &edges {
            if let Some((s, _)) = w.search(&v.point, e) {
                return Ok(s);
            }
        }
    }
    let p = v.point.clone();
    Ok(Step { objective: obj.eval(&p), point: p, defining: Vec::new() })
}

/// Vertices of the median set, found by following lines on which the
/// minimal criterion value is attained along an interval.
pub fn median_set_vertices<T: Scalar>(x: &DataMatrix<T>) -> Result<Vec<Vec<T>>> {
    let start = exact_median(x, &ExactConfig { max_rounds: Some(usize::MAX), ..ExactConfig::default() })?;
    let obj = Objective::all(x)?;
    let scale = x.scale();
    let w = Walker::new(&obj, None, LineSearchMode::Full, scale);
    let fmin = start.objective;
    let level = fmin + T::lit(1e-9) * fmin.abs().max(T::one());
    let close = T::lit(1e-9) * scale;

    let mut seen: Vec<Vec<T>> = vec![start.point.clone()];
    let mut queue = VecDeque::from([start.point]);
    let mut is_vertex = Vec::new();
    while let Some(p) = queue.pop_front() {
        let active = w.active(&p);
        let mut vertex = true;
        for e in w.edges(&active) {
            let Some((s, (t_lo, t_hi))) = w.search(&p, &e) else { continue };
            if s.objective > level {
                continue;
            }
            if t_lo < -close && t_hi > close {
                vertex = false;
            }
            let line = Line::new(p.clone(), e.dir.clone())?;
            for t in [t_lo, t_hi] {
                let q = line.at(t);
                if !seen.iter().any(|v| dist(v, &q) <= close) {
                    seen.push(q.clone());
                    queue.push_back(q);
                }
            }
        }
        is_vertex.push((p, vertex));
    }
    Ok(is_vertex.into_iter().filter(|(_, v)| *v).map(|(p, _)| p).collect())
}
