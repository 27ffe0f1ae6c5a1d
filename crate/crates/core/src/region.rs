//! Bounded search regions: intersections of halfspaces `{x : h(x) ≥ 0}` with
//! their vertices cached.

use crate::data::DataMatrix;
use crate::error::{OjaError, Result};
use crate::geometry::Hyperplane;
use crate::linalg::solve;
use crate::objective::{Line, Objective};
use crate::scalar::{dist, dot, norm, Scalar};
use crate::subsets::SubsetCursor;

/// Relative slack (times the data scale) used for feasibility tests.
pub const REGION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex<T> {
    pub point: Vec<T>,
    /// Indices of the bounds passing through the vertex.
    pub active: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region<T> {
    k: usize,
    bounds: Vec<Hyperplane<T>>,
    vertices: Vec<Vertex<T>>,
    slack: T,
    flat: bool,
}

/// Result of one cut.
#[derive(Debug, Clone, PartialEq)]
pub enum CutOutcome<T> {
    Cut(Region<T>),
    /// The center has zero rank and is itself a median.
    MedianFound(Vec<T>),
}

impl<T: Scalar> Region<T> {
    /// Axis-aligned box through the coordinate extremes of the data.
    pub fn init_bbox(x: &DataMatrix<T>) -> Self {
        let k = x.k();
        let ranges = x.coordinate_ranges();
        let mut bounds = Vec::with_capacity(2 * k);
        for (j, &(lo, hi)) in ranges.iter().enumerate() {
            let mut e = vec![T::zero(); k];
            e[j] = T::one();
            bounds.push(Hyperplane::synthetic(-lo, e.clone()));
            e[j] = -T::one();
            bounds.push(Hyperplane::synthetic(hi, e));
        }
        let flat = ranges.iter().any(|&(lo, hi)| hi <= lo);
        // box corners, built directly
        let mut vertices = Vec::with_capacity(1 << k);
        for mask in 0..(1usize << k) {
            let mut p = Vec::with_capacity(k);
            let mut active = Vec::with_capacity(k);
            for (j, &(lo, hi)) in ranges.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    p.push(hi);
                    active.push(2 * j + 1);
                } else {
                    p.push(lo);
                    active.push(2 * j);
                }
            }
            vertices.push(Vertex { point: p, active });
        }
        Self { k, bounds, vertices, slack: T::lit(REGION_SLACK) * x.scale(), flat }
    }

    /// Region from explicit halfspaces; vertices are enumerated.
    pub fn from_bounds(k: usize, bounds: Vec<Hyperplane<T>>, slack: T) -> Result<Self> {
        let mut r = Self { k, bounds, vertices: Vec::new(), slack, flat: false };
        r.vertices = r.compute_vertices()?;
        Ok(r)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bounds(&self) -> &[Hyperplane<T>] {
        &self.bounds
    }

    pub fn vertices(&self) -> &[Vertex<T>] {
        &self.vertices
    }

    pub fn vertex_points(&self) -> Vec<Vec<T>> {
        self.vertices.iter().map(|v| v.point.clone()).collect()
    }

    pub fn slack(&self) -> T {
        self.slack
    }

    pub fn set_slack(&mut self, slack: T) {
        self.slack = slack;
    }

    /// Zero thickness in some coordinate.
    pub fn is_flat(&self) -> bool {
        self.flat
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.bounds.iter().all(|b| b.signed_eval(x) >= -self.slack * norm(&b.normal))
    }

    /// Volume of the smallest axis-parallel box holding the vertices.
    pub fn bbox_volume(&self) -> T {
        (0..self.k)
            .map(|j| {
                let (lo, hi) = self
                    .vertices
                    .iter()
                    .fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v.point[j]), hi.max(v.point[j])));
                (hi - lo).max(T::zero())
            })
            .fold(T::one(), |acc, r| acc * r)
    }

    pub fn center(&self) -> Vec<T> {
        let mut c = vec![T::zero(); self.k];
        for v in &self.vertices {
            for (cj, &pj) in c.iter_mut().zip(&v.point) {
                *cj = *cj + pj;
            }
        }
        let n = T::from_usize_lossy(self.vertices.len().max(1));
        c.iter_mut().for_each(|cj| *cj = *cj / n);
        c
    }

    /// Parameter interval of `line` inside the region, `None` when empty.
    pub fn line_interval(&self, line: &Line<T>) -> Option<(T, T)> {
        let (mut lo, mut hi) = (T::neg_infinity(), T::infinity());
        let dn = norm(line.direction());
        for b in &self.bounds {
            let nn = norm(&b.normal);
            let alpha = b.signed_eval(line.anchor());
            let beta = dot(&b.normal, line.direction());
            let s = self.slack * nn;
            if beta.abs() <= T::lit(1e-12) * nn * dn {
                if alpha < -s {
                    return None;
                }
                continue;
            }
            let t = -alpha / beta;
            if beta > T::zero() {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
        }
        (lo <= hi + self.slack / dn).then(|| (lo.min(hi), hi.max(lo)))
    }

    /// All feasible solutions of `k` bound equalities, merged within the slack.
    pub fn compute_vertices(&self) -> Result<Vec<Vertex<T>>> {
        let k = self.k;
        let m = self.bounds.len();
        let mut out: Vec<Vertex<T>> = Vec::new();
        let mut a = vec![T::zero(); k * k];
        let mut rhs = vec![T::zero(); k];
        let mut cur = SubsetCursor::new(m, k);
        while let Some(t) = cur.advance() {
            for (r, &bi) in t.iter().enumerate() {
                let b = &self.bounds[bi];
                a[r * k..(r + 1) * k].copy_from_slice(&b.normal);
                rhs[r] = -b.offset;
            }
            let Some(p) = solve(&a, &rhs, k) else { continue };
            // reject near-singular systems whose solution is far outside the data scale
            if !self.contains(&p) {
                continue;
            }
            if let Some(v) = out.iter_mut().find(|v| dist(&v.point, &p) <= self.slack) {
                for &bi in t {
                    if !v.active.contains(&bi) {
                        v.active.push(bi);
                    }
                }
                continue;
            }
            let active = (0..m)
                .filter(|&bi| {
                    let b = &self.bounds[bi];
                    b.signed_eval(&p).abs() <= self.slack * norm(&b.normal)
                })
                .collect();
            out.push(Vertex { point: p, active });
        }
        if out.is_empty() {
            return Err(OjaError::EmptyRegion);
        }
        for v in &mut out {
            v.active.sort_unstable();
        }
        Ok(out)
    }

    /// Adds the halfspace `g · (x − c) ≥ 0`, recomputes vertices and drops
    /// bounds that no longer carry a facet.
    pub fn add_halfspace(&self, normal: Vec<T>, through: &[T]) -> Result<Self> {
        let offset = -dot(&normal, through);
        let mut bounds = self.bounds.clone();
        bounds.push(Hyperplane::synthetic(offset, normal));
        let mut next = Self { k: self.k, bounds, vertices: Vec::new(), slack: self.slack, flat: self.flat };
        next.vertices = next.compute_vertices()?;
        next.prune();
        Ok(next)
    }

    fn prune(&mut self) {
        let m = self.bounds.len();
        let mut touched = vec![0usize; m];
        for v in &self.vertices {
            for &bi in &v.active {
                touched[bi] += 1;
            }
        }
        // a facet carries at least k vertices; in a degenerate region keep anything touched
        let need = if self.flat || self.vertices.len() <= self.k { 1 } else { self.k };
        let mut remap = vec![usize::MAX; m];
        let mut kept = Vec::new();
        for (i, b) in self.bounds.drain(..).enumerate() {
            if touched[i] >= need {
                remap[i] = kept.len();
                kept.push(b);
            }
        }
        self.bounds = kept;
        for v in &mut self.vertices {
            v.active = v.active.iter().filter(|&&i| remap[i] != usize::MAX).map(|&i| remap[i]).collect();
        }
    }

    /// One cut through the vertex mean `c` with normal `−rank(c)`.
    pub fn cut(&self, objective: &Objective<T>) -> Result<CutOutcome<T>> {
        let c = self.center();
        let g = objective.gradient_sum(&c);
        let scale = (0..objective.len()).map(|i| objective.planes().normal_norm(i)).sum::<T>();
        if norm(&g) <= T::lit(1e-12) * scale.max(T::min_positive_value()) {
            return Ok(CutOutcome::MedianFound(c));
        }
        let normal: Vec<T> = g.iter().map(|&v| -v).collect();
        Ok(CutOutcome::Cut(self.add_halfspace(normal, &c)?))
    }
}

/// Cuts `region` once using the ranks of `X`.
pub fn region_cut<T: Scalar>(region: &Region<T>, x: &DataMatrix<T>) -> Result<CutOutcome<T>> {
    let obj = Objective::all(x)?;
    region.cut(&obj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Region<f64> {
        let x = DataMatrix::<f64>::from_f64_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        Region::init_bbox(&x)
    }

    #[test]
    fn bbox_of_triangle_is_unit_square() {
        let r = unit_square();
        assert_eq!(r.bounds().len(), 4);
        assert_eq!(r.vertices().len(), 4);
        assert_eq!(r.bbox_volume(), 1.0);
        let recomputed = r.compute_vertices().unwrap();
        assert_eq!(recomputed.len(), 4);
    }

    #[test]
    fn univariate_box_is_interval() {
        let x = DataMatrix::<f64>::univariate(&[3.0, -1.0, 2.0]).unwrap();
        let r = Region::init_bbox(&x);
        assert_eq!(r.vertex_points(), vec![vec![-1.0], vec![3.0]]);
        assert_eq!(r.bbox_volume(), 4.0);
    }

    #[test]
    fn flat_data_gives_flagged_box() {
        let x = DataMatrix::<f64>::from_f64_rows(&[vec![0.0, 1.0], vec![1.0, 1.0], vec![2.0, 1.0]]).unwrap();
        let r = Region::init_bbox(&x);
        assert!(r.is_flat());
        assert_eq!(r.bbox_volume(), 0.0);
    }

    #[test]
    fn square_cut_by_diagonal() {
        let r = unit_square();
        // x + y ≥ 1 through (0.5, 0.5)
        let cut = r.add_halfspace(vec![1.0, 1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(cut.vertices().len(), 3);
        assert_eq!(cut.bbox_volume(), 1.0);
        // the lower and left sides no longer touch a vertex
        assert_eq!(cut.bounds().len(), 3);
        for v in cut.vertices() {
            assert!(cut.contains(&v.point));
        }
    }

    #[test]
    fn unit_cube_vertices() {
        let x = DataMatrix::<f64>::from_f64_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 1.0, 1.0],
        ])
        .unwrap();
        let r = Region::init_bbox(&x);
        assert_eq!(r.compute_vertices().unwrap().len(), 8);
        assert_eq!(r.bbox_volume(), 1.0);
    }

    #[test]
    fn empty_region_is_reported() {
        let r = unit_square();
        let err = r.add_halfspace(vec![1.0, 1.0], &[5.0, 5.0]).unwrap_err();
        assert_eq!(err, OjaError::EmptyRegion);
    }

    #[test]
    fn triangle_cut_at_square_center() {
        let x = DataMatrix::<f64>::from_f64_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = Region::init_bbox(&x);
        let out = region_cut(&r, &x).unwrap();
        let CutOutcome::Cut(next) = out else { panic!("center (0.5,0.5) has nonzero rank") };
        // (0.5,0.5) sits on the hypotenuse; the two legs give rank (1,1), so the cut keeps x + y ≤ 1
        assert_eq!(next.vertices().len(), 3);
        assert!(next.contains(&[0.0, 0.0]));
        assert!(!next.contains(&[0.9, 0.9]));
    }

    #[test]
    fn zero_rank_center_is_a_median() {
        // region whose vertex mean is the triangle's centroid
        let x = DataMatrix::<f64>::from_f64_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let bounds = vec![
            Hyperplane::synthetic(0.0, vec![1.0, 0.0]),
            Hyperplane::synthetic(0.0, vec![0.0, 1.0]),
            Hyperplane::synthetic(1.0, vec![-1.0, -1.0]),
        ];
        let r = Region::from_bounds(2, bounds, 1e-9).unwrap();
        match region_cut(&r, &x).unwrap() {
            CutOutcome::MedianFound(c) => {
                assert!((c[0] - 1.0 / 3.0).abs() < 1e-15 && (c[1] - 1.0 / 3.0).abs() < 1e-15)
            }
            CutOutcome::Cut(_) => panic!("centroid has zero rank"),
        }
    }

    #[test]
    fn univariate_cut_keeps_median_side() {
        let x = DataMatrix::<f64>::univariate(&[0.0, 1.0, 10.0]).unwrap();
        let r = Region::init_bbox(&x);
        let CutOutcome::Cut(next) = region_cut(&r, &x).unwrap() else { panic!() };
        // center 5 has rank +1/3, the median 1 lies left of it
        assert_eq!(next.vertex_points(), vec![vec![0.0], vec![5.0]]);
    }
}
