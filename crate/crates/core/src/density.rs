//! Conformal densities `ρ` and their line integrals `ℓ_ρ`.

use crate::domain::{Domain, TOL_BOUNDARY};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quadrature::adaptive_simpson;

/// Relative tolerance for edge weights of metric graphs.
pub const GRAPH_REL_TOL: f64 = 1e-6;
/// Relative tolerance for path lengths.
pub const PATH_REL_TOL: f64 = 1e-8;

/// A positive continuous density `ρ` on (a subset of) a domain.
pub trait Density: Sync {
    /// `ρ(z)`, or `None` outside the support.
    fn value(&self, z: Point) -> Option<f64>;

    /// Whether `z` may serve as a graph node or path vertex.
    fn admits(&self, z: Point) -> bool {
        self.value(z).is_some()
    }

    /// `∫_[a,b] ρ ds`; fails with `BoundaryContact` when the segment leaves
    /// the support.
    fn segment_length(&self, a: Point, b: Point, rel_tol: f64) -> Result<f64>;

    /// Whether the straight segment `[a, b]` lies in the support.
    fn segment_admissible(&self, a: Point, b: Point) -> bool;
}

/// The quasihyperbolic density `1/δ`.
#[derive(Debug, Clone, Copy)]
pub struct QuasihyperbolicDensity<'a> {
    pub domain: &'a Domain,
}

impl<'a> QuasihyperbolicDensity<'a> {
    pub fn new(domain: &'a Domain) -> Self {
        Self { domain }
    }
}

impl QuasihyperbolicDensity<'_> {
    /// Parameters in `(0, 1)` where the nearest primitive along `[a, b]`
    /// changes, located by sampling at spacing about `δ_min / 2` and bisection.
    fn primitive_switches(&self, a: Point, b: Point, dmin: f64) -> Vec<f64> {
        let d = self.domain;
        let id = |t: f64| d.nearest_primitive(a.lerp(b, t));
        if id(0.0).is_none() {
            return Vec::new();
        }
        let n = ((2.0 * a.dist(b) / dmin).ceil() as usize).clamp(4, 64);
        let mut out = Vec::new();
        let (mut t0, mut i0) = (0.0, id(0.0));
        for k in 1..=n {
            let t1 = k as f64 / n as f64;
            let i1 = id(t1);
            if i1 != i0 {
                let (mut lo, mut hi) = (t0, t1);
                while hi - lo > 1e-13 {
                    let mid = 0.5 * (lo + hi);
                    if id(mid) == i0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
            (t0, i0) = (t1, i1);
        }
        out
    }
}

impl Density for QuasihyperbolicDensity<'_> {
    fn value(&self, z: Point) -> Option<f64> {
        self.domain.contains(z).then(|| 1.0 / self.domain.delta(z))
    }

    fn segment_length(&self, a: Point, b: Point, rel_tol: f64) -> Result<f64> {
        if a == b {
            return if self.domain.contains(a) { Ok(0.0) } else { Err(Error::BoundaryContact(a)) };
        }
        if !self.domain.contains(a) {
            return Err(Error::BoundaryContact(a));
        }
        let (dmin, tmin) = self.domain.segment_clearance(a, b);
        if dmin <= TOL_BOUNDARY {
            return Err(Error::BoundaryContact(a.lerp(b, tmin)));
        }
        let len = a.dist(b);
        let mut f = |t: f64| {
            let d = self.domain.delta(a.lerp(b, t));
            (d > 0.0).then(|| len / d)
        };
        // 1/δ is smooth along the segment except at the δ-minimum and where
        // the nearest boundary primitive changes
        let mut cuts = vec![0.0, tmin, 1.0];
        cuts.extend(self.primitive_switches(a, b, dmin));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        // pieces no longer than δ_min, so the first Simpson panels cannot
        // agree by accident over a stretch where 1/δ changes shape
        let max_piece = (dmin / len).min(1.0);
        let mut cuts: Vec<f64> = cuts
            .windows(2)
            .flat_map(|w| {
                let k = ((w[1] - w[0]) / max_piece).ceil().clamp(1.0, 64.0) as usize;
                (0..k).map(move |i| w[0] + (w[1] - w[0]) * i as f64 / k as f64)
            })
            .collect();
        cuts.push(1.0);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                total += adaptive_simpson(&mut f, w[0], w[1], rel_tol).ok_or(Error::BoundaryContact(a.lerp(b, tmin)))?;
            }
        }
        Ok(total)
    }

    fn segment_admissible(&self, a: Point, b: Point) -> bool {
        self.domain.segment_inside(a, b)
    }
}

/// Unit density: Euclidean length of paths inside the domain.
#[derive(Debug, Clone, Copy)]
pub struct UnitDensity<'a> {
    pub domain: &'a Domain,
}

impl<'a> UnitDensity<'a> {
    pub fn new(domain: &'a Domain) -> Self {
        Self { domain }
    }
}

impl Density for UnitDensity<'_> {
    fn value(&self, z: Point) -> Option<f64> {
        self.domain.contains(z).then_some(1.0)
    }

    fn segment_length(&self, a: Point, b: Point, _rel_tol: f64) -> Result<f64> {
        if a == b && self.domain.contains(a) {
            return Ok(0.0);
        }
        if self.domain.segment_inside(a, b) {
            Ok(a.dist(b))
        } else {
            Err(Error::BoundaryContact(a))
        }
    }

    fn segment_admissible(&self, a: Point, b: Point) -> bool {
        self.domain.segment_inside(a, b)
    }
}

/// `∫ ρ ds` along a polyline.
pub fn polyline_length<D: Density + ?Sized>(density: &D, pts: &[Point], rel_tol: f64) -> Result<f64> {
    pts.windows(2).map(|w| density.segment_length(w[0], w[1], rel_tol)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;

    #[test]
    fn radial_segment_in_disk() {
        let d = Domain::unit_disk();
        let v = QuasihyperbolicDensity::new(&d)
            .segment_length(Point::ORIGIN, Point::new(0.9, 0.0), PATH_REL_TOL)
            .unwrap();
        assert!((v - 10f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn segment_through_puncture_is_rejected() {
        let d = Domain::punctured_plane(vec![Point::ORIGIN], Rect::new(-2.0, -2.0, 2.0, 2.0)).unwrap();
        let r = QuasihyperbolicDensity::new(&d).segment_length(Point::new(-1.0, 0.0), Point::new(1.0, 0.0), 1e-8);
        assert!(matches!(r, Err(Error::BoundaryContact(_))));
    }

    #[test]
    fn split_at_clearance_minimum() {
        // chord passing at distance 0.1 from the puncture: ∫ dx / sqrt(x² + 0.01)
        let d = Domain::punctured_plane(vec![Point::ORIGIN], Rect::new(-2.0, -2.0, 2.0, 2.0)).unwrap();
        let v = QuasihyperbolicDensity::new(&d)
            .segment_length(Point::new(-1.0, 0.1), Point::new(1.0, 0.1), 1e-10)
            .unwrap();
        let exact = 2.0 * (1.0f64 / 0.1).asinh();
        assert!((v - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn long_segment_far_from_puncture() {
        // coarse Simpson panels agree by accident here; exact value is
        // asinh(s / d) on each side of the foot of the perpendicular
        let d = Domain::punctured_plane(vec![Point::ORIGIN], Rect::new(-6.0, -6.0, 6.0, 6.0)).unwrap();
        let (a, b) = (Point::new(-2.035469498202798, 2.300296957279211), Point::new(-0.17136487938210088, -0.995661772103678));
        let len = a.dist(b);
        let t0 = -a.dot(b - a) / (len * len);
        let foot = a.lerp(b, t0).norm();
        let exact = (t0 * len / foot).asinh() + ((1.0 - t0) * len / foot).asinh();
        let v = QuasihyperbolicDensity::new(&d).segment_length(a, b, 1e-8).unwrap();
        assert!((v / exact - 1.0).abs() < 1e-8, "{v} vs {exact}");
    }
}
