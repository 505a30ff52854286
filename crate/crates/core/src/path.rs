//! Polyline paths.

use std::fmt::Write as _;

use crate::density::{Density, QuasihyperbolicDensity, PATH_REL_TOL};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::geometry::{closest_on_segment, Point};

/// A polyline with at least one vertex and no consecutive duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    vertices: Vec<Point>,
}

impl Path {
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidInput("path needs at least one vertex".into()));
        }
        if let Some(p) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite path vertex {p}")));
        }
        vertices.dedup();
        Ok(Self { vertices })
    }

    pub fn point(p: Point) -> Self {
        Self { vertices: vec![p] }
    }

    pub fn segment(a: Point, b: Point) -> Self {
        Self::new(vec![a, b]).expect("finite endpoints")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Point> {
        self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn first(&self) -> Point {
        self.vertices[0]
    }

    pub fn last(&self) -> Point {
        *self.vertices.last().expect("non-empty")
    }

    pub fn segments(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn reversed(&self) -> Path {
        let mut v = self.vertices.clone();
        v.reverse();
        Path { vertices: v }
    }

    /// Concatenation; the second path must start where this one ends.
    pub fn concat(&self, other: &Path) -> Path {
        let mut v = self.vertices.clone();
        v.extend_from_slice(&other.vertices);
        Path::new(v).expect("finite")
    }

    /// Every vertex must lie in `Ω`.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        match self.vertices.iter().find(|&&p| !domain.contains(p)) {
            Some(&p) => Err(Error::NotContained(p)),
            None => Ok(()),
        }
    }

    pub fn euclidean_length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].dist(w[1])).sum()
    }

    pub fn cumulative_euclidean(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.vertices.len());
        out.push(0.0);
        for w in self.vertices.windows(2) {
            acc += w[0].dist(w[1]);
            out.push(acc);
        }
        out
    }

    /// Cumulative `ℓ_ρ` at each vertex.
    pub fn cumulative_length<D: Density + ?Sized>(&self, density: &D) -> Result<Vec<f64>> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.vertices.len());
        out.push(0.0);
        for w in self.vertices.windows(2) {
            acc += density.segment_length(w[0], w[1], PATH_REL_TOL)?;
            out.push(acc);
        }
        Ok(out)
    }

    /// Point at Euclidean arclength `s` from the start (clamped).
    pub fn point_at(&self, s: f64) -> Point {
        let cum = self.cumulative_euclidean();
        point_at_table(&self.vertices, &cum, s)
    }

    /// Re-sample at `n` segments of equal Euclidean length.
    pub fn resample_uniform(&self, n: usize) -> Path {
        self.resample_by(&self.cumulative_euclidean(), n)
    }

    /// Re-sample at `n` segments of equal length as measured by a
    /// cumulative table (one entry per vertex), interpolating linearly
    /// inside segments.
    pub fn resample_by(&self, cum: &[f64], n: usize) -> Path {
        if self.vertices.len() < 2 {
            return self.clone();
        }
        let n = n.max(1);
        let total = *cum.last().expect("non-empty");
        let mut v = Vec::with_capacity(n + 1);
        v.push(self.first());
        for k in 1..n {
            v.push(point_at_table(&self.vertices, cum, total * k as f64 / n as f64));
        }
        v.push(self.last());
        Path::new(v).expect("finite")
    }

    /// Insert the midpoint of every segment.
    pub fn subdivide(&self) -> Path {
        let mut v = Vec::with_capacity(2 * self.vertices.len());
        for w in self.vertices.windows(2) {
            v.push(w[0]);
            v.push(w[0].midpoint(w[1]));
        }
        v.push(self.last());
        Path { vertices: v }
    }

    /// Euclidean distance from `p` to the polyline.
    pub fn distance_to(&self, p: Point) -> f64 {
        if self.vertices.len() == 1 {
            return p.dist(self.vertices[0]);
        }
        self.vertices
            .windows(2)
            .map(|w| p.dist(closest_on_segment(p, w[0], w[1]).0))
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV with columns `x,y,delta,cumulative_euclidean_length,cumulative_qh_length`.
    pub fn to_csv(&self, domain: &Domain) -> Result<String> {
        let qh = self.cumulative_length(&QuasihyperbolicDensity::new(domain))?;
        let eu = self.cumulative_euclidean();
        let mut s = String::from("x,y,delta,cumulative_euclidean_length,cumulative_qh_length\n");
        for (i, p) in self.vertices.iter().enumerate() {
            writeln!(s, "{},{},{},{},{}", p.x, p.y, domain.delta(*p), eu[i], qh[i]).expect("string write");
        }
        Ok(s)
    }
}

/// Interpolate along a polyline given its cumulative length table.
pub fn point_at_table(v: &[Point], cum: &[f64], s: f64) -> Point {
    let total = *cum.last().expect("non-empty");
    if s <= 0.0 || v.len() == 1 {
        return v[0];
    }
    if s >= total {
        return *v.last().expect("non-empty");
    }
    let k = cum.partition_point(|&c| c <= s).clamp(1, v.len() - 1);
    let seg = cum[k] - cum[k - 1];
    let t = if seg > 0.0 { (s - cum[k - 1]) / seg } else { 0.0 };
    v[k - 1].lerp(v[k], t)
}

/// Symmetric Hausdorff distance between polylines, with both sampled at
/// spacing at most `spacing`.
pub fn hausdorff_distance(p: &Path, q: &Path, spacing: f64) -> f64 {
    directed(p, q, spacing).max(directed(q, p, spacing))
}

fn directed(p: &Path, q: &Path, spacing: f64) -> f64 {
    let mut worst = q.distance_to(p.first());
    for w in p.vertices.windows(2) {
        let n = ((w[0].dist(w[1]) / spacing).ceil() as usize).max(1);
        for k in 1..=n {
            worst = worst.max(q.distance_to(w[0].lerp(w[1], k as f64 / n as f64)));
        }
    }
    worst
}
