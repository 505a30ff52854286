//! Planar domains `Ω ⊊ ℂ` with exact distance-to-boundary queries.
//!
//! Four kinds are supported: disks, half-planes, finitely punctured planes
//! and polygons with polygonal holes. Point and segment boundaries live in an
//! R-tree so nearest-boundary queries stay logarithmic in the number of
//! primitives; disks and half-planes are answered in closed form.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::path::Path as FsPath;

use rstar::{PointDistance, RTree, RTreeObject, AABB};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    closest_on_segment, point_in_ring, segment_segment_distance, segments_intersect, signed_area,
    Point, Rect,
};

/// Points with `δ` at or below this are treated as boundary points.
pub const TOL_BOUNDARY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Disk,
    HalfPlane,
    PuncturedPlane,
    Polygon,
}

/// One piece of `∂Ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    Point(Point),
    Segment(Point, Point),
    Circle { center: Point, radius: f64 },
    /// Line through `origin`; `normal` is the unit normal pointing into `Ω`.
    Line { origin: Point, normal: Point },
}

impl Primitive {
    pub fn closest(&self, z: Point) -> Point {
        match *self {
            Primitive::Point(p) => p,
            Primitive::Segment(a, b) => closest_on_segment(z, a, b).0,
            Primitive::Circle { center, radius } => {
                let d = z - center;
                let n = d.norm();
                if n == 0.0 {
                    center + Point::new(radius, 0.0)
                } else {
                    center + d * (radius / n)
                }
            }
            Primitive::Line { origin, normal } => z - normal * (z - origin).dot(normal),
        }
    }

    pub fn distance(&self, z: Point) -> f64 {
        match *self {
            Primitive::Circle { center, radius } => (radius - z.dist(center)).abs(),
            Primitive::Line { origin, normal } => (z - origin).dot(normal).abs(),
            _ => z.dist(self.closest(z)),
        }
    }

    /// Minimum distance from the primitive to the segment `[a, b]` and the
    /// segment parameter attaining it. Circle and line distances are
    /// measured on the domain side, where they are concave along segments.
    fn segment_distance(&self, a: Point, b: Point) -> (f64, f64) {
        match *self {
            Primitive::Point(p) => {
                let (q, t) = closest_on_segment(p, a, b);
                (p.dist(q), t)
            }
            Primitive::Segment(c, d) => segment_segment_distance(a, b, c, d),
            Primitive::Circle { center, radius } => {
                let (da, db) = (radius - a.dist(center), radius - b.dist(center));
                if da.min(db) <= 0.0 {
                    // an endpoint is outside or on the circle
                    return if da <= db { (da.max(0.0), 0.0) } else { (db.max(0.0), 1.0) };
                }
                if da <= db {
                    (da, 0.0)
                } else {
                    (db, 1.0)
                }
            }
            Primitive::Line { origin, normal } => {
                let (sa, sb) = ((a - origin).dot(normal), (b - origin).dot(normal));
                if sa.signum() != sb.signum() || sa == 0.0 || sb == 0.0 {
                    let t = if sa == sb { 0.0 } else { sa / (sa - sb) };
                    return (0.0, t.clamp(0.0, 1.0));
                }
                if sa.abs() <= sb.abs() {
                    (sa.abs(), 0.0)
                } else {
                    (sb.abs(), 1.0)
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
struct IndexedPrimitive {
    index: usize,
    prim: Primitive,
    envelope: AABB<[f64; 2]>,
}

impl RTreeObject for IndexedPrimitive {
    type Envelope = AABB<[f64; 2]>;
    fn envelope(&self) -> Self::Envelope {
        self.envelope
    }
}

impl PointDistance for IndexedPrimitive {
    fn distance_2(&self, point: &[f64; 2]) -> f64 {
        let d = self.prim.distance(Point::from(*point));
        d * d
    }
}

/// Bounding-volume hierarchy over point and segment boundary primitives.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    tree: RTree<IndexedPrimitive>,
}

impl SpatialIndex {
    pub fn new(prims: &[Primitive]) -> Self {
        let items = prims
            .iter()
            .enumerate()
            .filter_map(|(index, prim)| {
                let envelope = match *prim {
                    Primitive::Point(p) => AABB::from_point(p.into()),
                    Primitive::Segment(a, b) => AABB::from_corners(a.into(), b.into()),
                    _ => return None,
                };
                Some(IndexedPrimitive { index, prim: *prim, envelope })
            })
            .collect();
        Self { tree: RTree::bulk_load(items) }
    }

    /// Nearest primitive as `(index, closest point, distance)`; exact ties
    /// (up to relative round-off) go to the lowest primitive index.
    pub fn nearest(&self, z: Point) -> Option<(usize, Point, f64)> {
        let q: [f64; 2] = z.into();
        let mut it = self.tree.nearest_neighbor_iter_with_distance_2(&q);
        let (first, d2) = it.next()?;
        let mut best = first;
        let cutoff = d2 * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        for (cand, c2) in it {
            if c2 > cutoff {
                break;
            }
            if cand.index < best.index {
                best = cand;
            }
        }
        let p = best.prim.closest(z);
        Some((best.index, p, d2.sqrt()))
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Disk { center: Point, radius: f64 },
    HalfPlane { origin: Point, normal: Point },
    Punctured { punctures: Vec<Point> },
    Polygon { outer: Vec<Point>, holes: Vec<Vec<Point>> },
}

/// A planar domain `Ω ≠ ℂ` together with a window bounding the region of
/// interest. Immutable once built.
#[derive(Debug, Clone)]
pub struct Domain {
    shape: Shape,
    boundary: Vec<Primitive>,
    index: Option<SpatialIndex>,
    window: Rect,
}

impl Domain {
    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidDomain(format!("disk radius must be positive, got {radius}")));
        }
        let window = Rect::new(center.x - radius, center.y - radius, center.x + radius, center.y + radius);
        Ok(Self {
            shape: Shape::Disk { center, radius },
            boundary: vec![Primitive::Circle { center, radius }],
            index: None,
            window,
        })
    }

    pub fn unit_disk() -> Self {
        Self::disk(Point::ORIGIN, 1.0).expect("unit disk is valid")
    }

    /// Half-plane `{z : (z − origin)·normal > 0}`.
    pub fn half_plane(origin: Point, normal: Point, window: Rect) -> Result<Self> {
        if !(normal.norm() > 0.0) || !origin.is_finite() {
            return Err(Error::InvalidDomain("half-plane normal must be non-zero".into()));
        }
        let normal = normal.normalized();
        Ok(Self {
            shape: Shape::HalfPlane { origin, normal },
            boundary: vec![Primitive::Line { origin, normal }],
            index: None,
            window,
        })
    }

    /// The upper half-plane `{y > 0}`.
    pub fn upper_half_plane(window: Rect) -> Self {
        Self::half_plane(Point::ORIGIN, Point::new(0.0, 1.0), window).expect("valid half-plane")
    }

    pub fn punctured_plane(punctures: Vec<Point>, window: Rect) -> Result<Self> {
        if punctures.is_empty() {
            return Err(Error::InvalidDomain("punctured plane needs at least one puncture".into()));
        }
        for (i, p) in punctures.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidDomain(format!("puncture {i} is not finite")));
            }
            if punctures[..i].contains(p) {
                return Err(Error::InvalidDomain(format!("puncture {p} is repeated")));
            }
        }
        let boundary: Vec<Primitive> = punctures.iter().map(|&p| Primitive::Point(p)).collect();
        Ok(Self {
            index: Some(SpatialIndex::new(&boundary)),
            shape: Shape::Punctured { punctures },
            boundary,
            window,
        })
    }

    /// Polygon with optional holes. Loops are re-oriented (outer
    /// counter-clockwise, holes clockwise); they must be simple and the
    /// holes must lie strictly inside the outer loop and apart from each other.
    pub fn polygon(outer: Vec<Point>, holes: Vec<Vec<Point>>) -> Result<Self> {
        let mut outer = clean_ring(outer)?;
        if signed_area(&outer) < 0.0 {
            outer.reverse();
        }
        let mut rings = vec![outer.clone()];
        let mut hs: Vec<Vec<Point>> = Vec::with_capacity(holes.len());
        for h in holes {
            let mut h = clean_ring(h)?;
            if signed_area(&h) > 0.0 {
                h.reverse();
            }
            if !h.iter().all(|&p| point_in_ring(p, &outer)) {
                return Err(Error::InvalidDomain("hole is not strictly inside the outer loop".into()));
            }
            for other in &hs {
                if h.iter().any(|&p| point_in_ring(p, other)) || other.iter().any(|&p| point_in_ring(p, &h)) {
                    return Err(Error::InvalidDomain("holes overlap".into()));
                }
            }
            rings.push(h.clone());
            hs.push(h);
        }
        let mut edges = Vec::new();
        for (ri, r) in rings.iter().enumerate() {
            for i in 0..r.len() {
                edges.push((ri, i, r[i], r[(i + 1) % r.len()]));
            }
        }
        for (x, e) in edges.iter().enumerate() {
            for f in &edges[x + 1..] {
                let adjacent = e.0 == f.0 && {
                    let n = rings[e.0].len();
                    (e.1 + 1) % n == f.1 || (f.1 + 1) % n == e.1
                };
                if !adjacent && segments_intersect(e.2, e.3, f.2, f.3) {
                    return Err(Error::InvalidDomain("polygon loops must be simple and disjoint".into()));
                }
            }
        }
        let boundary: Vec<Primitive> = edges.iter().map(|e| Primitive::Segment(e.2, e.3)).collect();
        let window = Rect::from_points(outer.iter().copied()).expect("non-empty ring");
        Ok(Self {
            index: Some(SpatialIndex::new(&boundary)),
            shape: Shape::Polygon { outer, holes: hs },
            boundary,
            window,
        })
    }

    /// Square `[-s, s]²`.
    pub fn square(s: f64) -> Self {
        Self::polygon(
            vec![Point::new(-s, -s), Point::new(s, -s), Point::new(s, s), Point::new(-s, s)],
            vec![],
        )
        .expect("square is valid")
    }

    /// L-shape `[-1,1]² \ [0,1]×[0,1]` with its reflex corner at the origin.
    pub fn l_shape() -> Self {
        Self::polygon(
            vec![
                Point::new(-1.0, -1.0),
                Point::new(1.0, -1.0),
                Point::new(1.0, 0.0),
                Point::new(0.0, 0.0),
                Point::new(0.0, 1.0),
                Point::new(-1.0, 1.0),
            ],
            vec![],
        )
        .expect("L-shape is valid")
    }

    pub fn with_window(mut self, window: Rect) -> Self {
        self.window = window;
        self
    }

    pub fn kind(&self) -> DomainKind {
        match self.shape {
            Shape::Disk { .. } => DomainKind::Disk,
            Shape::HalfPlane { .. } => DomainKind::HalfPlane,
            Shape::Punctured { .. } => DomainKind::PuncturedPlane,
            Shape::Polygon { .. } => DomainKind::Polygon,
        }
    }

    pub fn boundary(&self) -> &[Primitive] {
        &self.boundary
    }

    pub fn window(&self) -> Rect {
        self.window
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.shape, Shape::Disk { .. } | Shape::Polygon { .. })
    }

    pub fn punctures(&self) -> &[Point] {
        match &self.shape {
            Shape::Punctured { punctures } => punctures,
            _ => &[],
        }
    }

    /// Polygon loops (outer first), empty for other kinds.
    pub fn rings(&self) -> Vec<&[Point]> {
        match &self.shape {
            Shape::Polygon { outer, holes } => {
                let mut v: Vec<&[Point]> = vec![outer.as_slice()];
                v.extend(holes.iter().map(|h| h.as_slice()));
                v
            }
            _ => Vec::new(),
        }
    }

    /// Discretization window: the region of interest inflated about its
    /// center, clipped to the bounding box for bounded domains.
    pub fn graph_window(&self, inflation: f64) -> Rect {
        let w = self.window.inflate(inflation);
        if self.is_bounded() {
            let bb = self.bounding_box();
            Rect::new(
                w.min.x.max(bb.min.x),
                w.min.y.max(bb.min.y),
                w.max.x.min(bb.max.x),
                w.max.y.min(bb.max.y),
            )
        } else {
            w
        }
    }

    fn bounding_box(&self) -> Rect {
        match &self.shape {
            Shape::Disk { center, radius } => {
                Rect::new(center.x - radius, center.y - radius, center.x + radius, center.y + radius)
            }
            Shape::Polygon { outer, .. } => Rect::from_points(outer.iter().copied()).expect("ring"),
            _ => self.window,
        }
    }

    /// Euclidean distance from `z` to `∂Ω`; valid for any `z`.
    pub fn delta(&self, z: Point) -> f64 {
        match &self.shape {
            Shape::Disk { center, radius } => (radius - z.dist(*center)).abs(),
            Shape::HalfPlane { origin, normal } => (z - *origin).dot(*normal).abs(),
            _ => self.index.as_ref().and_then(|ix| ix.nearest(z)).map_or(f64::INFINITY, |n| n.2),
        }
    }

    /// Nearest point of `∂Ω` to `z` (lowest primitive index on ties).
    pub fn nearest_boundary(&self, z: Point) -> Point {
        match &self.shape {
            Shape::Disk { .. } | Shape::HalfPlane { .. } => self.boundary[0].closest(z),
            _ => self.index.as_ref().and_then(|ix| ix.nearest(z)).expect("non-empty boundary").1,
        }
    }

    /// Index of the boundary primitive realizing `δ(z)`; `None` when the
    /// boundary is a single smooth piece.
    pub fn nearest_primitive(&self, z: Point) -> Option<usize> {
        self.index.as_ref().and_then(|ix| ix.nearest(z)).map(|n| n.0)
    }

    /// Whether `z` lies in the open domain; boundary points are excluded.
    pub fn contains(&self, z: Point) -> bool {
        if !z.is_finite() {
            return false;
        }
        let inside = match &self.shape {
            Shape::Disk { center, radius } => z.dist(*center) < *radius,
            Shape::HalfPlane { origin, normal } => (z - *origin).dot(*normal) > 0.0,
            Shape::Punctured { .. } => true,
            Shape::Polygon { outer, holes } => {
                point_in_ring(z, outer) && !holes.iter().any(|h| point_in_ring(z, h))
            }
        };
        inside && self.delta(z) > TOL_BOUNDARY
    }

    /// Minimum of `δ` along the closed segment `[a, b]` and the parameter
    /// where it is attained. Assumes `a ∈ Ω`.
    pub fn segment_clearance(&self, a: Point, b: Point) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0);
        for p in &self.boundary {
            let d = p.segment_distance(a, b);
            if d.0 < best.0 {
                best = d;
            }
        }
        best
    }

    /// Whether the whole segment `[a, b]` lies in `Ω`.
    pub fn segment_inside(&self, a: Point, b: Point) -> bool {
        if !self.contains(a) {
            return false;
        }
        let len = a.dist(b);
        if len < self.delta(a) {
            return true;
        }
        self.contains(b) && self.segment_clearance(a, b).0 > TOL_BOUNDARY
    }

    /// Exact intrinsic Euclidean length distance `l(a, b)` (infimum of the
    /// Euclidean lengths of paths in `Ω`). Convex kinds and punctured planes
    /// give `|a − b|`; polygons use the visibility graph of their vertices.
    pub fn euclidean_geodesic_length(&self, a: Point, b: Point) -> f64 {
        match &self.shape {
            Shape::Polygon { .. } => {
                if self.segment_inside(a, b) {
                    a.dist(b)
                } else {
                    self.visibility_shortest_path(a, b)
                }
            }
            _ => a.dist(b),
        }
    }

    fn visible(&self, p: Point, q: Point) -> bool {
        // cut [p, q] at every boundary contact and require each open piece
        // to lie in the closure of Ω
        let mut ts = vec![0.0, 1.0];
        for prim in &self.boundary {
            if let Primitive::Segment(c, d) = *prim {
                let (dist, t) = segment_segment_distance(p, q, c, d);
                if dist <= 1e-12 {
                    let pq = q - p;
                    let den = pq.cross(d - c);
                    if den.abs() > 1e-14 {
                        let s = (c - p).cross(d - c) / den;
                        let u = (c - p).cross(pq) / den;
                        if u > 1e-9 && u < 1.0 - 1e-9 && s > 1e-9 && s < 1.0 - 1e-9 {
                            return false; // proper crossing of an edge
                        }
                    }
                    ts.push(t);
                    for v in [c, d] {
                        let (w, tv) = closest_on_segment(v, p, q);
                        if w.dist(v) <= 1e-12 {
                            ts.push(tv);
                        }
                    }
                }
            }
        }
        ts.sort_by(f64::total_cmp);
        ts.windows(2).all(|w| {
            if w[1] - w[0] < 1e-12 {
                return true;
            }
            let m = p.lerp(q, 0.5 * (w[0] + w[1]));
            self.contains(m) || self.delta(m) <= 1e-9
        })
    }

    fn visibility_shortest_path(&self, a: Point, b: Point) -> f64 {
        let mut nodes = vec![a, b];
        for r in self.rings() {
            nodes.extend_from_slice(r);
        }
        let n = nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        dist[0] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem(0.0, 0));
        while let Some(HeapItem(d, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if u == 1 {
                return d;
            }
            for v in 0..n {
                if done[v] || v == u {
                    continue;
                }
                let nd = d + nodes[u].dist(nodes[v]);
                if nd < dist[v] && self.visible(nodes[u], nodes[v]) {
                    dist[v] = nd;
                    heap.push(HeapItem(nd, v));
                }
            }
        }
        f64::INFINITY
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Self> {
        let win = |w: &Option<[f64; 4]>| w.map(|w| Rect::new(w[0], w[1], w[2], w[3]));
        let pts = |v: &[[f64; 2]]| v.iter().map(|&p| Point::from(p)).collect::<Vec<_>>();
        let dom = match spec {
            DomainSpec::Disk { center, radius, window } => {
                let d = Self::disk(Point::from(center.unwrap_or([0.0, 0.0])), *radius)?;
                match win(window) {
                    Some(w) => d.with_window(w),
                    None => d,
                }
            }
            DomainSpec::HalfPlane { origin, normal, window } => {
                let w = win(window).ok_or_else(|| Error::InvalidDomain("half_plane needs a window".into()))?;
                Self::half_plane(
                    Point::from(origin.unwrap_or([0.0, 0.0])),
                    Point::from(normal.unwrap_or([0.0, 1.0])),
                    w,
                )?
            }
            DomainSpec::PuncturedPlane { punctures, window } => {
                let w = win(window)
                    .ok_or_else(|| Error::InvalidDomain("punctured_plane needs a window".into()))?;
                Self::punctured_plane(pts(punctures), w)?
            }
            DomainSpec::Polygon { outer, holes, window } => {
                let d = Self::polygon(pts(outer), holes.iter().map(|h| pts(h)).collect())?;
                match win(window) {
                    Some(w) => d.with_window(w),
                    None => d,
                }
            }
        };
        let w = dom.window;
        if !(w.width() > 0.0 && w.height() > 0.0 && w.min.is_finite() && w.max.is_finite()) {
            return Err(Error::InvalidDomain("window must have positive finite extent".into()));
        }
        Ok(dom)
    }

    pub fn to_spec(&self) -> DomainSpec {
        let window = Some(self.window.as_array());
        let arr = |v: &[Point]| v.iter().map(|&p| p.into()).collect::<Vec<[f64; 2]>>();
        match &self.shape {
            Shape::Disk { center, radius } => {
                DomainSpec::Disk { center: Some((*center).into()), radius: *radius, window }
            }
            Shape::HalfPlane { origin, normal } => DomainSpec::HalfPlane {
                origin: Some((*origin).into()),
                normal: Some((*normal).into()),
                window,
            },
            Shape::Punctured { punctures } => DomainSpec::PuncturedPlane { punctures: arr(punctures), window },
            Shape::Polygon { outer, holes } => DomainSpec::Polygon {
                outer: arr(outer),
                holes: holes.iter().map(|h| arr(h)).collect(),
                window,
            },
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: DomainSpec = serde_json::from_str(s)?;
        Self::from_spec(&spec)
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn clean_ring(mut ring: Vec<Point>) -> Result<Vec<Point>> {
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    ring.dedup();
    if ring.len() < 3 || ring.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidDomain("polygon loop needs at least 3 finite vertices".into()));
    }
    if signed_area(&ring).abs() == 0.0 {
        return Err(Error::InvalidDomain("polygon loop has zero area".into()));
    }
    Ok(ring)
}

/// On-disk JSON description of a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disk {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<[f64; 2]>,
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<[f64; 4]>,
    },
    HalfPlane {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        origin: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        normal: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<[f64; 4]>,
    },
    PuncturedPlane {
        punctures: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<[f64; 4]>,
    },
    Polygon {
        outer: Vec<[f64; 2]>,
        #[serde(default)]
        holes: Vec<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<[f64; 4]>,
    },
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}
