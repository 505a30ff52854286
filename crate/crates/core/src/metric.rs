//! Quasihyperbolic lengths, distances and geodesics, and the classical
//! estimates that bracket them.
//!
//! Distances are reported as an upper bound (the length of an explicit
//! witness path) together with a certified lower bound.

use serde::Serialize;

use crate::density::{Density, QuasihyperbolicDensity, UnitDensity, PATH_REL_TOL};
use crate::domain::{Domain, DomainSpec};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::graph::{GraphConfig, MetricGraph};
use crate::path::Path;
use crate::refine::{refine_geodesic, MoveConstraint, RefineConfig};

#[derive(Debug, Clone)]
pub struct DistanceResult {
    /// Length of `path`: an upper bound for the true distance.
    pub value: f64,
    /// Best available lower bound for the true distance.
    pub lower_bound: f64,
    pub path: Path,
    pub resolution: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceRecord {
    pub value: f64,
    pub lower_bound: f64,
    pub resolution: f64,
}

impl DistanceResult {
    pub fn record(&self) -> DistanceRecord {
        DistanceRecord { value: self.value, lower_bound: self.lower_bound, resolution: self.resolution }
    }
}

/// Graph-initialized, refinement-polished geodesics for a density.
///
/// The metric graph is built once; queries are pure and may run
/// concurrently.
pub struct GeodesicSolver<'a, D: Density> {
    domain: &'a Domain,
    density: D,
    graph: MetricGraph,
    pub refine: RefineConfig,
}

impl<'a, D: Density> GeodesicSolver<'a, D> {
    pub fn new(domain: &'a Domain, density: D, h: f64, cfg: &GraphConfig) -> Result<Self> {
        let window = domain.graph_window(cfg.inflation);
        let graph = MetricGraph::build(domain, window, h, &density, cfg)?;
        Ok(Self { domain, density, graph, refine: RefineConfig::for_resolution(h) })
    }

    pub fn domain(&self) -> &'a Domain {
        self.domain
    }

    pub fn density(&self) -> &D {
        &self.density
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn resolution(&self) -> f64 {
        self.graph.resolution()
    }

    /// Initial polyline from `a` to `b`: the better of the direct segment
    /// and the graph route.
    pub fn initial_path(&self, a: Point, b: Point) -> Result<Path> {
        let direct = self
            .density
            .segment_admissible(a, b)
            .then(|| self.density.segment_length(a, b, PATH_REL_TOL).ok())
            .flatten();
        let src = self.graph.connectors(&self.density, a);
        let dst = self.graph.connectors(&self.density, b);
        let routed = self.graph.shortest_path(&src, &dst);
        match (direct, routed) {
            (Some(d), Some((g, _))) if d <= g => Ok(Path::segment(a, b)),
            (Some(_), None) => Ok(Path::segment(a, b)),
            (_, Some((_, route))) => {
                let mut v = Vec::with_capacity(route.len() + 2);
                v.push(a);
                v.extend(route.iter().map(|&k| self.graph.node(k)));
                v.push(b);
                Path::new(v)
            }
            (None, None) => Err(Error::NoPath),
        }
    }

    /// Shortest path with endpoint order canonicalized, so that
    /// `d(a, b)` and `d(b, a)` run the identical computation.
    pub fn geodesic(&self, a: Point, b: Point) -> Result<(f64, Path)> {
        for z in [a, b] {
            if !self.domain.contains(z) || !self.density.admits(z) {
                return Err(Error::NotContained(z));
            }
        }
        if a == b {
            return Ok((0.0, Path::point(a)));
        }
        let swap = (b.x, b.y) < (a.x, a.y);
        let (p, q) = if swap { (b, a) } else { (a, b) };
        let init = self.initial_path(p, q)?;
        let out = self.refine_path(&init, None)?;
        let path = if swap { out.1.reversed() } else { out.1 };
        Ok((out.0, path))
    }

    pub fn refine_path(&self, path: &Path, constraint: Option<MoveConstraint<'_>>) -> Result<(f64, Path)> {
        let out = refine_geodesic(&self.density, path, &self.refine, constraint)?;
        Ok((out.length, out.path))
    }
}

/// Quasihyperbolic distance solver for a fixed domain and resolution.
pub struct QhSolver<'a> {
    inner: GeodesicSolver<'a, QuasihyperbolicDensity<'a>>,
}

impl<'a> QhSolver<'a> {
    pub fn new(domain: &'a Domain, h: f64) -> Result<Self> {
        Self::with_config(domain, h, &GraphConfig::default())
    }

    pub fn with_config(domain: &'a Domain, h: f64, cfg: &GraphConfig) -> Result<Self> {
        Ok(Self { inner: GeodesicSolver::new(domain, QuasihyperbolicDensity::new(domain), h, cfg)? })
    }

    pub fn solver(&self) -> &GeodesicSolver<'a, QuasihyperbolicDensity<'a>> {
        &self.inner
    }

    pub fn solver_mut(&mut self) -> &mut GeodesicSolver<'a, QuasihyperbolicDensity<'a>> {
        &mut self.inner
    }

    pub fn distance(&self, a: Point, b: Point) -> Result<DistanceResult> {
        let (value, path) = self.inner.geodesic(a, b)?;
        let lower_bound = gp_bounds(self.inner.domain, a, b).strongest();
        Ok(DistanceResult { value, lower_bound, path, resolution: self.inner.resolution() })
    }
}

/// `ℓ_k(γ) = ∫_γ ds/δ`.
pub fn qh_length(domain: &Domain, path: &Path) -> Result<f64> {
    if path.len() == 1 {
        return if domain.contains(path.first()) { Ok(0.0) } else { Err(Error::BoundaryContact(path.first())) };
    }
    crate::density::polyline_length(&QuasihyperbolicDensity::new(domain), path.vertices(), PATH_REL_TOL)
}

/// One-shot quasihyperbolic distance at graph spacing `resolution`.
pub fn qh_distance(domain: &Domain, a: Point, b: Point, resolution: f64) -> Result<DistanceResult> {
    for z in [a, b] {
        if !domain.contains(z) {
            return Err(Error::NotContained(z));
        }
    }
    if a == b {
        return Ok(DistanceResult { value: 0.0, lower_bound: 0.0, path: Path::point(a), resolution });
    }
    QhSolver::new(domain, resolution)?.distance(a, b)
}

/// Intrinsic Euclidean length distance computed on the unit-density graph.
pub fn intrinsic_distance(domain: &Domain, a: Point, b: Point, resolution: f64) -> Result<f64> {
    for z in [a, b] {
        if !domain.contains(z) {
            return Err(Error::NotContained(z));
        }
    }
    if a == b {
        return Ok(0.0);
    }
    let solver = GeodesicSolver::new(domain, UnitDensity::new(domain), resolution, &GraphConfig::default())?;
    Ok(solver.geodesic(a, b)?.0)
}

/// Refine a path as a quasihyperbolic geodesic with default settings for
/// segment spacing `h`.
pub fn refine_qh_geodesic(domain: &Domain, path: &Path, h: f64) -> Result<Path> {
    let out = refine_geodesic(&QuasihyperbolicDensity::new(domain), path, &RefineConfig::for_resolution(h), None)?;
    Ok(out.path)
}

/// `k(a, b)` where a closed form is known: half-planes
/// (`arcosh(1 + |a−b|² / 2δ(a)δ(b))`), once-punctured planes (`|log(b/a)|`)
/// and pairs on a common diameter of a disk.
pub fn closed_form_distance(domain: &Domain, a: Point, b: Point) -> Option<f64> {
    if !domain.contains(a) || !domain.contains(b) {
        return None;
    }
    match domain.to_spec() {
        DomainSpec::HalfPlane { .. } => {
            Some((1.0 + a.dist(b).powi(2) / (2.0 * domain.delta(a) * domain.delta(b))).acosh())
        }
        DomainSpec::PuncturedPlane { punctures, .. } if punctures.len() == 1 => {
            crate::covering::exact_punctured_distance(a, b, Point::from(punctures[0])).ok()
        }
        DomainSpec::Disk { center, radius, .. } => {
            let c = Point::from(center.unwrap_or([0.0, 0.0]));
            let (pa, pb) = (a - c, b - c);
            if pa.cross(pb).abs() > 1e-12 * radius * radius {
                return None;
            }
            let axis = if pa.norm() >= pb.norm() { pa } else { pb };
            if axis.norm() == 0.0 {
                return Some(0.0);
            }
            let u = axis.normalized();
            let f = |s: f64| s.signum() * (radius / (radius - s.abs())).ln();
            Some((f(pb.dot(u)) - f(pa.dot(u))).abs())
        }
        _ => None,
    }
}

/// The Gehring–Palka lower-bound chain for `k(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GpBounds {
    /// `log(1 + l(a,b) / (δ(a) ∧ δ(b)))`, `l` the intrinsic Euclidean distance.
    pub intrinsic: f64,
    /// `log(1 + |a − b| / (δ(a) ∧ δ(b)))`.
    pub euclidean: f64,
    /// `|log(δ(a) / δ(b))|`.
    pub ratio: f64,
}

impl GpBounds {
    pub fn as_tuple(&self) -> (f64, f64, f64) {
        (self.intrinsic, self.euclidean, self.ratio)
    }

    pub fn strongest(&self) -> f64 {
        self.intrinsic.max(self.euclidean).max(self.ratio)
    }

    pub fn is_monotone(&self) -> bool {
        self.intrinsic >= self.euclidean && self.euclidean >= self.ratio
    }
}

pub fn gp_bounds(domain: &Domain, a: Point, b: Point) -> GpBounds {
    let (da, db) = (domain.delta(a), domain.delta(b));
    let m = da.min(db);
    let l = domain.euclidean_geodesic_length(a, b).max(a.dist(b));
    GpBounds {
        intrinsic: (l / m).ln_1p(),
        euclidean: (a.dist(b) / m).ln_1p(),
        ratio: (da / db).ln().abs(),
    }
}

/// `log(1 + ℓ(γ) / dist(|γ|, ∂Ω))`, a lower bound for `ℓ_k(γ)`.
pub fn path_lower_bound(domain: &Domain, path: &Path) -> f64 {
    if path.len() == 1 {
        return 0.0;
    }
    let clearance = path
        .vertices()
        .windows(2)
        .map(|w| domain.segment_clearance(w[0], w[1]).0)
        .fold(f64::INFINITY, f64::min);
    (path.euclidean_length() / clearance).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallScaleReport {
    /// `k ≤ 1` or `|a − b| ≤ δ(a)/2`.
    pub hypothesis: bool,
    pub k: f64,
    /// `|a − b| / δ(a)`.
    pub ratio: f64,
    pub pass: bool,
    /// Passed only because the hypothesis does not hold.
    pub vacuous: bool,
}

pub const SMALL_SCALE_SLACK: f64 = 1e-6;

/// Check `k/2 ≤ |a−b|/δ(a) ≤ 2k` whenever `k ≤ 1` or `|a−b| ≤ δ(a)/2`.
pub fn small_scale_check(domain: &Domain, a: Point, b: Point, k_ab: f64) -> SmallScaleReport {
    small_scale_check_with(domain, a, b, k_ab, SMALL_SCALE_SLACK)
}

pub fn small_scale_check_with(domain: &Domain, a: Point, b: Point, k_ab: f64, slack: f64) -> SmallScaleReport {
    let da = domain.delta(a);
    let dist = a.dist(b);
    let ratio = dist / da;
    let hypothesis = k_ab <= 1.0 || dist <= 0.5 * da;
    let holds = 0.5 * k_ab <= ratio + slack && ratio <= 2.0 * k_ab + slack;
    SmallScaleReport { hypothesis, k: k_ab, ratio, pass: !hypothesis || holds, vacuous: !hypothesis }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityReport {
    /// Max over vertex pairs of `|T_s − T_t| / (2|γ(s) − γ(t)| / δ(γ(s)))`.
    pub max_ratio: f64,
    pub worst: (usize, usize),
    pub pairs: usize,
    pub slack: f64,
    pub pass: bool,
}

pub const REGULARITY_SLACK: f64 = 1.25;

/// Discrete check of `|γ′(s) − γ′(t)| ≤ 2|γ(s) − γ(t)| / δ(γ(s))` with
/// chord tangents at every vertex.
pub fn regularity_check(domain: &Domain, geodesic: &Path) -> RegularityReport {
    let v = geodesic.vertices();
    let n = v.len();
    let mut report = RegularityReport { max_ratio: 0.0, worst: (0, 0), pairs: 0, slack: REGULARITY_SLACK, pass: true };
    if n < 2 {
        return report;
    }
    let tangents: Vec<Point> = (0..n)
        .map(|i| {
            let (p, q) = (v[i.saturating_sub(1)], v[(i + 1).min(n - 1)]);
            (q - p).normalized()
        })
        .collect();
    for s in 0..n {
        let ds = domain.delta(v[s]);
        for t in 0..n {
            if s == t {
                continue;
            }
            report.pairs += 1;
            let lhs = (tangents[s] - tangents[t]).norm();
            let rhs = 2.0 * v[s].dist(v[t]) / ds;
            let r = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
            if r > report.max_ratio {
                report.max_ratio = r;
                report.worst = (s, t);
            }
        }
    }
    report.pass = report.max_ratio <= REGULARITY_SLACK;
    report
}
