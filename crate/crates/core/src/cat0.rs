//! Comparison triangles, the CAT(0) distance inequality and the glued
//! four-point condition, plus sampling audits of geodesic spaces.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::{Density, QuasihyperbolicDensity};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::metric::QhSolver;
use crate::path::{point_at_table, Path};

/// Slack on the triangle inequality before inputs are rejected.
pub const TRIANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonTriangle {
    pub a: Point,
    pub b: Point,
    pub c: Point,
    /// `[|ab|, |bc|, |ca|]` as requested.
    pub lengths: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    AB,
    BC,
    CA,
}

impl Side {
    pub const ALL: [Side; 3] = [Side::AB, Side::BC, Side::CA];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl ComparisonTriangle {
    pub fn endpoints(&self, side: Side) -> (Point, Point) {
        match side {
            Side::AB => (self.a, self.b),
            Side::BC => (self.b, self.c),
            Side::CA => (self.c, self.a),
        }
    }
}

/// Euclidean triangle with `ā = 0`, `b̄ = (l_ab, 0)` and `c̄` in the closed
/// upper half-plane.
pub fn comparison_triangle(l_ab: f64, l_bc: f64, l_ca: f64) -> Result<ComparisonTriangle> {
    let scale = [l_ab, l_bc, l_ca].iter().fold(1.0f64, |m, l| m.max(l.abs()));
    comparison_triangle_within(l_ab, l_bc, l_ca, TRIANGLE_TOL * scale)
}

/// `max(l_i − l_j − l_k)`: how far the lengths are from satisfying the
/// triangle inequality (non-positive for a triangle).
pub fn triangle_defect(l_ab: f64, l_bc: f64, l_ca: f64) -> f64 {
    (l_ab - l_bc - l_ca).max(l_bc - l_ca - l_ab).max(l_ca - l_ab - l_bc)
}

/// As [`comparison_triangle`], accepting triangle-inequality defects up to
/// `slack` (absolute); such lengths give a degenerate triangle.
pub fn comparison_triangle_within(l_ab: f64, l_bc: f64, l_ca: f64, slack: f64) -> Result<ComparisonTriangle> {
    let ls = [l_ab, l_bc, l_ca];
    if ls.iter().any(|l| !(l.is_finite() && *l >= -TRIANGLE_TOL)) || triangle_defect(l_ab, l_bc, l_ca) > slack {
        return Err(Error::NotATriangle(l_ab, l_bc, l_ca));
    }
    let (ab, bc, ca) = (l_ab.max(0.0), l_bc.max(0.0), l_ca.max(0.0));
    let c = if ab == 0.0 {
        Point::new(ca, 0.0)
    } else {
        let x = ((ab * ab + ca * ca - bc * bc) / (2.0 * ab)).clamp(-ca, ca);
        Point::new(x, (ca * ca - x * x).max(0.0).sqrt())
    };
    Ok(ComparisonTriangle { a: Point::ORIGIN, b: Point::new(ab, 0.0), c, lengths: ls })
}

/// Point of the comparison side at distance `s` from its first endpoint.
pub fn comparison_point(comp: &ComparisonTriangle, side: Side, s: f64) -> Point {
    let (p, q) = comp.endpoints(side);
    let len = comp.lengths[side.index()];
    if len <= 0.0 {
        return p;
    }
    let t = (s / len).clamp(0.0, 1.0);
    if t == 1.0 {
        q
    } else {
        p.lerp(q, t)
    }
}

/// A geodesic with its cumulative arclength at each vertex.
#[derive(Debug, Clone)]
pub struct Geodesic {
    pub path: Path,
    pub cumulative: Vec<f64>,
}

impl Geodesic {
    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("non-empty")
    }
}

/// A geodesic metric space that can be audited.
pub trait GeodesicSpace: Sync {
    fn geodesic(&self, x: Point, y: Point) -> Result<Geodesic>;

    fn distance(&self, x: Point, y: Point) -> Result<f64> {
        Ok(self.geodesic(x, y)?.length())
    }

    /// Point at arclength `s` along `g`.
    fn point_at(&self, g: &Geodesic, s: f64) -> Point {
        point_at_table(g.path.vertices(), &g.cumulative, s)
    }

    /// A candidate triangle vertex, or `None` for a rejected draw.
    fn sample_vertex(&self, rng: &mut ChaCha8Rng) -> Option<Point>;
}

/// The Euclidean plane, sampled on a rectangle.
#[derive(Debug, Clone, Copy)]
pub struct EuclideanPlane {
    pub region: Rect,
}

impl GeodesicSpace for EuclideanPlane {
    fn geodesic(&self, x: Point, y: Point) -> Result<Geodesic> {
        Ok(Geodesic { path: Path::segment(x, y), cumulative: if x == y { vec![0.0] } else { vec![0.0, x.dist(y)] } })
    }

    fn sample_vertex(&self, rng: &mut ChaCha8Rng) -> Option<Point> {
        Some(uniform_in(&self.region, rng))
    }
}

/// Three segments of length `leg` glued at the origin, embedded along the
/// directions `0`, `2π/3`, `4π/3`.
#[derive(Debug, Clone, Copy)]
pub struct Tripod {
    pub leg: f64,
}

impl Tripod {
    fn direction(k: usize) -> Point {
        Point::from_polar(1.0, k as f64 * std::f64::consts::TAU / 3.0)
    }

    /// Leg index and distance from the hub.
    pub fn chart(&self, p: Point) -> (usize, f64) {
        let r = p.norm();
        let k = (0..3)
            .max_by(|&i, &j| p.dot(Self::direction(i)).total_cmp(&p.dot(Self::direction(j))))
            .expect("three legs");
        (if r == 0.0 { 0 } else { k }, r)
    }
}

impl GeodesicSpace for Tripod {
    fn geodesic(&self, x: Point, y: Point) -> Result<Geodesic> {
        let ((kx, rx), (ky, ry)) = (self.chart(x), self.chart(y));
        let pts = if kx == ky || rx == 0.0 || ry == 0.0 { vec![x, y] } else { vec![x, Point::ORIGIN, y] };
        let path = Path::new(pts)?;
        let cumulative = path.cumulative_euclidean();
        Ok(Geodesic { path, cumulative })
    }

    fn sample_vertex(&self, rng: &mut ChaCha8Rng) -> Option<Point> {
        let k = rng.gen_range(0..3);
        Some(Self::direction(k) * (self.leg * rng.gen::<f64>()))
    }
}

/// Quasihyperbolic geodesics of a domain at a fixed graph resolution.
pub struct QhSpace<'a> {
    solver: QhSolver<'a>,
    /// Region the triangle vertices are drawn from.
    pub region: Rect,
    /// Vertices need `δ ≥ min_delta`.
    pub min_delta: f64,
}

impl<'a> QhSpace<'a> {
    pub fn new(domain: &'a Domain, h: f64) -> Result<Self> {
        Ok(Self { solver: QhSolver::new(domain, h)?, region: domain.window(), min_delta: 2.0 * h })
    }

    pub fn with_region(mut self, region: Rect) -> Self {
        self.region = region;
        self
    }

    pub fn domain(&self) -> &'a Domain {
        self.solver.solver().domain()
    }

    pub fn resolution(&self) -> f64 {
        self.solver.solver().resolution()
    }
}

impl GeodesicSpace for QhSpace<'_> {
    fn geodesic(&self, x: Point, y: Point) -> Result<Geodesic> {
        let r = self.solver.distance(x, y)?;
        let cumulative = r.path.cumulative_length(&QuasihyperbolicDensity::new(self.domain()))?;
        Ok(Geodesic { path: r.path, cumulative })
    }

    /// Exact inversion of arclength inside the located segment.
    fn point_at(&self, g: &Geodesic, s: f64) -> Point {
        let v = g.path.vertices();
        if s <= 0.0 || v.len() == 1 {
            return v[0];
        }
        if s >= g.length() {
            return *v.last().expect("non-empty");
        }
        let k = g.cumulative.partition_point(|&c| c <= s).clamp(1, v.len() - 1);
        let (p, q) = (v[k - 1], v[k]);
        let want = s - g.cumulative[k - 1];
        let density = QuasihyperbolicDensity::new(self.domain());
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            match density.segment_length(p, p.lerp(q, mid), 1e-12) {
                Ok(l) if l < want => lo = mid,
                _ => hi = mid,
            }
        }
        p.lerp(q, 0.5 * (lo + hi))
    }

    fn sample_vertex(&self, rng: &mut ChaCha8Rng) -> Option<Point> {
        let z = uniform_in(&self.region, rng);
        (self.domain().contains(z) && self.domain().delta(z) >= self.min_delta).then_some(z)
    }
}

fn uniform_in(r: &Rect, rng: &mut ChaCha8Rng) -> Point {
    Point::new(r.min.x + r.width() * rng.gen::<f64>(), r.min.y + r.height() * rng.gen::<f64>())
}

#[derive(Debug, Clone)]
pub struct GeodesicTriangle {
    pub vertices: [Point; 3],
    /// Sides `[a,b]`, `[b,c]`, `[c,a]`.
    pub sides: [Geodesic; 3],
}

impl GeodesicTriangle {
    pub fn build<S: GeodesicSpace + ?Sized>(space: &S, a: Point, b: Point, c: Point) -> Result<Self> {
        Ok(Self { vertices: [a, b, c], sides: [space.geodesic(a, b)?, space.geodesic(b, c)?, space.geodesic(c, a)?] })
    }

    pub fn lengths(&self) -> [f64; 3] {
        [self.sides[0].length(), self.sides[1].length(), self.sides[2].length()]
    }

    pub fn comparison(&self) -> Result<ComparisonTriangle> {
        let [ab, bc, ca] = self.lengths();
        comparison_triangle(ab, bc, ca)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConfig {
    pub triangles: usize,
    pub pairs_per_triangle: usize,
    pub seed: u64,
    /// Minimum pairwise distance of triangle vertices.
    pub min_side: f64,
    /// Fixed tolerance; estimated by Richardson comparison when unset.
    pub tolerance: Option<f64>,
    /// Safety factor on the Richardson error estimate.
    pub safety: f64,
    /// Rejected draws allowed per accepted triangle.
    pub max_rejections: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            triangles: 50,
            pairs_per_triangle: 20,
            seed: 0,
            min_side: 0.1,
            tolerance: None,
            safety: 3.0,
            max_rejections: 10_000,
        }
    }
}

/// Floor for the tolerance, covering floating-point roundoff.
pub const TOLERANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorstPair {
    pub triangle: usize,
    pub pair: usize,
    pub vertices: [Point; 3],
    pub x: Point,
    pub y: Point,
    pub x_bar: Point,
    pub y_bar: Point,
    pub distance: f64,
    pub comparison_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub triangles: usize,
    pub samples: usize,
    pub max_violation: f64,
    pub worst: Option<WorstPair>,
    pub tolerance: f64,
    /// Largest triangle-inequality defect among the audited side lengths.
    pub max_triangle_defect: f64,
    /// Triangles recomputed with the finer space.
    pub retested: usize,
    pub verdict: Verdict,
}

impl AuditReport {
    fn empty(tolerance: f64) -> Self {
        Self {
            triangles: 0,
            samples: 0,
            max_violation: 0.0,
            worst: None,
            tolerance,
            max_triangle_defect: 0.0,
            retested: 0,
            verdict: Verdict::Pass,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let row = |s: &mut String, k: &str, v: String| writeln!(s, "{k:<16} {v}").expect("string write");
        row(&mut s, "triangles", self.triangles.to_string());
        row(&mut s, "samples", self.samples.to_string());
        row(&mut s, "max_violation", format!("{:.6e}", self.max_violation));
        row(&mut s, "tolerance", format!("{:.6e}", self.tolerance));
        row(&mut s, "max_defect", format!("{:.6e}", self.max_triangle_defect));
        row(&mut s, "retested", self.retested.to_string());
        if let Some(w) = &self.worst {
            row(&mut s, "worst_triangle", w.triangle.to_string());
            row(&mut s, "worst_x", w.x.to_string());
            row(&mut s, "worst_y", w.y.to_string());
            row(&mut s, "d(x,y)", format!("{:.9}", w.distance));
            row(&mut s, "|x̄-ȳ|", format!("{:.9}", w.comparison_distance));
        }
        row(&mut s, "verdict", format!("{:?}", self.verdict).to_lowercase());
        s
    }
}

#[derive(Debug, Clone, Copy)]
struct PairSample {
    sides: (Side, Side),
    u: (f64, f64),
}

fn audit_triangle<S: GeodesicSpace + ?Sized>(
    space: &S,
    tri: &GeodesicTriangle,
    pairs: &[PairSample],
    index: usize,
    tolerance: f64,
) -> Result<Option<WorstPair>> {
    let [ab, bc, ca] = tri.lengths();
    let comp = comparison_triangle_within(ab, bc, ca, tolerance)?;
    let mut worst: Option<(f64, WorstPair)> = None;
    for (p, ps) in pairs.iter().enumerate() {
        let (sx, sy) = (ps.u.0 * tri.sides[ps.sides.0.index()].length(), ps.u.1 * tri.sides[ps.sides.1.index()].length());
        let x = space.point_at(&tri.sides[ps.sides.0.index()], sx);
        let y = space.point_at(&tri.sides[ps.sides.1.index()], sy);
        let (xb, yb) = (comparison_point(&comp, ps.sides.0, sx), comparison_point(&comp, ps.sides.1, sy));
        let d = space.distance(x, y)?;
        let cd = xb.dist(yb);
        let v = d - cd;
        if worst.as_ref().is_none_or(|(w, _)| v > *w) {
            let wp = WorstPair {
                triangle: index,
                pair: p,
                vertices: tri.vertices,
                x,
                y,
                x_bar: xb,
                y_bar: yb,
                distance: d,
                comparison_distance: cd,
            };
            worst = Some((v, wp));
        }
    }
    Ok(worst.map(|w| w.1))
}

fn violation(w: &WorstPair) -> f64 {
    w.distance - w.comparison_distance
}

/// Sample triangles and point pairs on their sides and record the largest
/// `d(x, y) − |x̄ − ȳ|`. Triangles exceeding the tolerance are recomputed
/// in `fine` (when given) before being reported.
pub fn cat0_audit<S, F>(space: &S, fine: Option<&F>, cfg: &AuditConfig) -> Result<AuditReport>
where
    S: GeodesicSpace + ?Sized,
    F: GeodesicSpace + ?Sized,
{
    if cfg.triangles == 0 || cfg.pairs_per_triangle == 0 {
        return Ok(AuditReport::empty(cfg.tolerance.unwrap_or(TOLERANCE_FLOOR)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut triangles = Vec::with_capacity(cfg.triangles);
    let mut rejections = 0;
    while triangles.len() < cfg.triangles {
        if rejections > cfg.max_rejections * cfg.triangles {
            return Err(Error::InvalidInput("triangle sampler rejected too many draws".into()));
        }
        let v: Vec<Option<Point>> = (0..3).map(|_| space.sample_vertex(&mut rng)).collect();
        let [Some(a), Some(b), Some(c)] = v[..] else {
            rejections += 1;
            continue;
        };
        let tri = GeodesicTriangle::build(space, a, b, c)?;
        if tri.lengths().iter().any(|&l| l < cfg.min_side) {
            rejections += 1;
            continue;
        }
        triangles.push(tri);
    }
    let pairs: Vec<Vec<PairSample>> = (0..cfg.triangles)
        .map(|_| {
            (0..cfg.pairs_per_triangle)
                .map(|_| PairSample {
                    sides: (Side::ALL[rng.gen_range(0..3)], Side::ALL[rng.gen_range(0..3)]),
                    u: (rng.gen::<f64>(), rng.gen::<f64>()),
                })
                .collect()
        })
        .collect();

    let fine_tris: Option<Vec<GeodesicTriangle>> = match fine {
        Some(f) => Some(
            triangles
                .par_iter()
                .map(|t| GeodesicTriangle::build(f, t.vertices[0], t.vertices[1], t.vertices[2]))
                .collect::<Result<_>>()?,
        ),
        None => None,
    };
    let tolerance = cfg.tolerance.unwrap_or_else(|| {
        let err = fine_tris
            .as_ref()
            .map(|ft| {
                triangles
                    .iter()
                    .zip(ft)
                    .flat_map(|(c, f)| (0..3).map(move |k| (c.lengths()[k] - f.lengths()[k]).abs()))
                    .fold(0.0, f64::max)
            })
            .unwrap_or(0.0);
        (cfg.safety * err).max(TOLERANCE_FLOOR)
    });

    let defect = |t: &GeodesicTriangle| {
        let [ab, bc, ca] = t.lengths();
        triangle_defect(ab, bc, ca).max(0.0)
    };
    let results: Vec<Result<(Option<WorstPair>, bool, f64)>> = triangles
        .par_iter()
        .enumerate()
        .map(|(i, tri)| {
            let coarse = audit_triangle(space, tri, &pairs[i], i, tolerance);
            let retest = match &coarse {
                Ok(Some(wp)) => violation(wp) > tolerance,
                Err(Error::NotATriangle(..)) => true,
                _ => false,
            };
            match (fine, &fine_tris) {
                (Some(f), Some(ft)) if retest => {
                    Ok((audit_triangle(f, &ft[i], &pairs[i], i, tolerance)?, true, defect(&ft[i])))
                }
                _ => Ok((coarse?, false, defect(tri))),
            }
        })
        .collect();
    let mut worst: Option<WorstPair> = None;
    let mut retested = 0;
    let mut max_triangle_defect: f64 = 0.0;
    for r in results {
        let (w, re, def) = r?;
        retested += re as usize;
        max_triangle_defect = max_triangle_defect.max(def);
        if let Some(w) = w {
            // strict comparison keeps the lowest triangle index on ties
            if worst.as_ref().is_none_or(|b| violation(&w) > violation(b)) {
                worst = Some(w);
            }
        }
    }
    let max_violation = worst.as_ref().map(violation).unwrap_or(0.0);
    Ok(AuditReport {
        triangles: cfg.triangles,
        samples: cfg.triangles * cfg.pairs_per_triangle,
        max_violation,
        worst,
        tolerance,
        max_triangle_defect,
        retested,
        verdict: if max_violation <= tolerance { Verdict::Pass } else { Verdict::Fail },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourPointResult {
    pub pass: bool,
    /// `d24 − |x̄2 − x̄4|`.
    pub violation: f64,
    pub x_bar: [Point; 4],
}

/// Glue comparison triangles for `(x1, x2, x3)` and `(x1, x3, x4)` along
/// `[x̄1, x̄3]` with `x̄2`, `x̄4` on opposite sides, and compare `d24` with
/// `|x̄2 − x̄4|`. Triangle-inequality defects up to `tol` are absorbed.
pub fn four_point_check(d12: f64, d13: f64, d14: f64, d23: f64, d24: f64, d34: f64, tol: f64) -> Result<FourPointResult> {
    let d = |i: usize, j: usize| -> f64 {
        let (i, j) = (i.min(j), i.max(j));
        match (i, j) {
            (1, 2) => d12,
            (1, 3) => d13,
            (1, 4) => d14,
            (2, 3) => d23,
            (2, 4) => d24,
            _ => d34,
        }
    };
    let scale = [d12, d13, d14, d23, d24, d34].iter().fold(1.0f64, |m, l| m.max(l.abs()));
    let slack = tol.max(TRIANGLE_TOL * scale);
    for (i, j, k) in [(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)] {
        if comparison_triangle_within(d(i, j), d(j, k), d(k, i), slack).is_err() {
            return Err(Error::NotAQuadruple(i, j, k));
        }
    }
    let upper = comparison_triangle_within(d13, d23, d12, slack)?;
    let lower = comparison_triangle_within(d13, d34, d14, slack)?;
    let x2 = upper.c;
    let x4 = Point::new(lower.c.x, -lower.c.y);
    let violation = d24 - x2.dist(x4);
    Ok(FourPointResult { pass: violation <= tol, violation, x_bar: [upper.a, x2, upper.b, x4] })
}

/// Four-point check on points of a space, using its distances.
pub fn four_point_in<S: GeodesicSpace + ?Sized>(space: &S, x: [Point; 4], tol: f64) -> Result<FourPointResult> {
    let d = |i: usize, j: usize| space.distance(x[i], x[j]);
    four_point_check(d(0, 1)?, d(0, 2)?, d(0, 3)?, d(1, 2)?, d(1, 3)?, d(2, 3)?, tol)
}
