//! Planar primitives: points, rectangles and segment helpers.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// A point of the Euclidean plane, identified with a complex number `x + iy`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-d cross product.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn arg(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    pub fn midpoint(self, o: Point) -> Point {
        self.lerp(o, 0.5)
    }

    /// Complex multiplication.
    pub fn cmul(self, o: Point) -> Point {
        Point::new(self.x * o.x - self.y * o.y, self.x * o.y + self.y * o.x)
    }

    /// Complex division `self / o`.
    pub fn cdiv(self, o: Point) -> Point {
        let d = o.norm_sq();
        Point::new(
            (self.x * o.x + self.y * o.y) / d,
            (self.y * o.x - self.x * o.y) / d,
        )
    }

    /// Complex exponential.
    pub fn cexp(self) -> Point {
        Point::from_polar(self.x.exp(), self.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Axis-aligned rectangle `[xmin, xmax] × [ymin, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Self {
            min: Point::new(xmin.min(xmax), ymin.min(ymax)),
            max: Point::new(xmin.max(xmax), ymin.max(ymax)),
        }
    }

    pub fn from_points<I: IntoIterator<Item = Point>>(pts: I) -> Option<Self> {
        let mut it = pts.into_iter();
        let first = it.next()?;
        let mut r = Rect { min: first, max: first };
        for p in it {
            r.min.x = r.min.x.min(p.x);
            r.min.y = r.min.y.min(p.y);
            r.max.x = r.max.x.max(p.x);
            r.max.y = r.max.y.max(p.y);
        }
        Some(r)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point {
        self.min.midpoint(self.max)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn intersects(&self, o: &Rect) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }

    /// Scale about the center by `factor` (2 doubles both side lengths).
    pub fn inflate(&self, factor: f64) -> Rect {
        let c = self.center();
        let hw = 0.5 * self.width() * factor;
        let hh = 0.5 * self.height() * factor;
        Rect::new(c.x - hw, c.y - hh, c.x + hw, c.y + hh)
    }

    /// Grow every side outwards by `margin`.
    pub fn expand(&self, margin: f64) -> Rect {
        Rect::new(self.min.x - margin, self.min.y - margin, self.max.x + margin, self.max.y + margin)
    }

    pub fn union(&self, o: &Rect) -> Rect {
        Rect::new(
            self.min.x.min(o.min.x),
            self.min.y.min(o.min.y),
            self.max.x.max(o.max.x),
            self.max.y.max(o.max.y),
        )
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.min.x, self.min.y, self.max.x, self.max.y]
    }
}

/// Closest point to `p` on segment `[a, b]` and its parameter in `[0, 1]`.
pub fn closest_on_segment(p: Point, a: Point, b: Point) -> (Point, f64) {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return (a, 0.0);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (a.lerp(b, t), t)
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    p.dist(closest_on_segment(p, a, b).0)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Whether closed segments `[a, b]` and `[c, d]` share a point.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, q: Point, r: Point| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    (d1 == 0.0 && on(c, d, a))
        || (d2 == 0.0 && on(c, d, b))
        || (d3 == 0.0 && on(a, b, c))
        || (d4 == 0.0 && on(a, b, d))
}

/// Minimum distance between segments `[a, b]` and `[c, d]`, with the
/// parameter along `[a, b]` where it is attained.
pub fn segment_segment_distance(a: Point, b: Point, c: Point, d: Point) -> (f64, f64) {
    if segments_intersect(a, b, c, d) {
        // parameter of the crossing along [a, b]
        let ab = b - a;
        let cd = d - c;
        let den = ab.cross(cd);
        let t = if den.abs() > 0.0 {
            ((c - a).cross(cd) / den).clamp(0.0, 1.0)
        } else {
            closest_on_segment(c, a, b).1
        };
        return (0.0, t);
    }
    let mut best = (f64::INFINITY, 0.0);
    for (p, t) in [(a, 0.0), (b, 1.0)] {
        let dd = point_segment_distance(p, c, d);
        if dd < best.0 {
            best = (dd, t);
        }
    }
    for p in [c, d] {
        let (q, t) = closest_on_segment(p, a, b);
        let dd = p.dist(q);
        if dd < best.0 {
            best = (dd, t);
        }
    }
    best
}

/// Signed area (positive for counter-clockwise loops).
pub fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    let mut s = 0.0;
    for i in 0..n {
        s += ring[i].cross(ring[(i + 1) % n]);
    }
    0.5 * s
}

/// Crossing-number point-in-ring test; the closing edge is implicit.
pub fn point_in_ring(p: Point, ring: &[Point]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}
