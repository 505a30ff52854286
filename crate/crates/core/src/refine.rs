//! Local descent of `ℓ_ρ` on polylines.
//!
//! Each sweep first tries to re-space the vertices at equal `ρ`-arc
//! length, then moves every interior vertex along the local normal to the
//! position minimizing the length of its two adjacent segments
//! (golden-section search). Both steps are accepted only when they do not
//! increase the length, so `ℓ_ρ` is non-increasing sweep by sweep. Work
//! proceeds coarse to fine: once a level converges every segment is split
//! at its midpoint, which leaves the curve unchanged.

use crate::density::Density;
use crate::error::Result;
use crate::geometry::Point;
use crate::path::Path;

/// Decides whether replacing sub-polyline `old` by `new` (same endpoints)
/// is allowed. Used to keep the homotopy class fixed.
pub type MoveConstraint<'c> = &'c (dyn Fn(&[Point], &[Point]) -> bool + Sync);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    /// Stop a level when one sweep improves the length by less than this
    /// fraction.
    pub sweep_tol: f64,
    /// Total sweep budget across levels.
    pub max_sweeps: usize,
    /// Euclidean segment length aimed for on the finest level.
    pub target_spacing: f64,
    /// `ρ`-length per segment aimed for on the finest level.
    pub target_rho_spacing: f64,
    /// Floor on the segment count of the finest level.
    pub min_segments: usize,
    pub max_segments: usize,
    pub line_search_iters: usize,
    /// Quadrature tolerance for segment lengths.
    pub rel_tol: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            sweep_tol: 1e-8,
            max_sweeps: 10_000,
            target_spacing: 0.05,
            target_rho_spacing: 0.1,
            min_segments: 8,
            max_segments: 256,
            line_search_iters: 30,
            rel_tol: 1e-8,
        }
    }
}

impl RefineConfig {
    /// Defaults tuned for a graph of spacing `h`.
    pub fn for_resolution(h: f64) -> Self {
        Self { target_spacing: 4.0 * h, target_rho_spacing: 5.0 * h, min_segments: (0.4 / h).ceil() as usize, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub path: Path,
    pub length: f64,
    pub sweeps: usize,
    /// Length after every sweep; each level starts with the re-measured
    /// length of its starting polyline.
    pub history: Vec<f64>,
    /// Index into `history` where each level starts.
    pub levels: Vec<usize>,
}

impl RefineOutcome {
    /// History split into levels; lengths are non-increasing within each.
    pub fn level_histories(&self) -> impl Iterator<Item = &[f64]> {
        let ends = self.levels.iter().skip(1).copied().chain([self.history.len()]);
        self.levels.iter().zip(ends).map(|(&s, e)| &self.history[s..e])
    }
}

/// Segment count of the coarsest level.
const COARSE_SEGMENTS: usize = 8;

fn polyline_len<D: Density + ?Sized>(density: &D, v: &[Point], tol: f64) -> f64 {
    let mut s = 0.0;
    for w in v.windows(2) {
        match density.segment_length(w[0], w[1], tol) {
            Ok(x) => s += x,
            Err(_) => return f64::INFINITY,
        }
    }
    s
}

/// Re-space vertices at equal `ρ`-arclength.
fn resample_rho<D: Density + ?Sized>(density: &D, v: &[Point], n: usize) -> Option<Vec<Point>> {
    let mut cum = Vec::with_capacity(v.len());
    cum.push(0.0);
    for w in v.windows(2) {
        cum.push(cum.last().copied()? + density.segment_length(w[0], w[1], 1e-6).ok()?);
    }
    Some(Path::new(v.to_vec()).ok()?.resample_by(&cum, n).into_vertices())
}

/// Refine `path` towards a local `ℓ_ρ` geodesic with fixed endpoints.
pub fn refine_geodesic<D: Density + ?Sized>(
    density: &D,
    path: &Path,
    cfg: &RefineConfig,
    constraint: Option<MoveConstraint<'_>>,
) -> Result<RefineOutcome> {
    let mut v = path.vertices().to_vec();
    let start_len = crate::density::polyline_length(density, &v, cfg.rel_tol)?;
    if v.len() < 2 {
        return Ok(RefineOutcome { path: path.clone(), length: start_len, sweeps: 0, history: vec![start_len], levels: vec![0] });
    }
    let allowed = |old: &[Point], new: &[Point]| constraint.is_none_or(|c| c(old, new));

    let eu = path.euclidean_length();
    let want = (eu / cfg.target_spacing).max(start_len / cfg.target_rho_spacing).ceil().max(1.0) as usize;
    let n_final = want.next_power_of_two().clamp(cfg.min_segments, cfg.max_segments);

    let mut len = start_len;
    // coarse start: the first power-of-two re-sampling that is admissible
    // and no longer than the input
    let mut n = (n_final / 8).max(COARSE_SEGMENTS.min(n_final)).max(1);
    while n <= n_final {
        if let Some(r) = resample_rho(density, &v, n) {
            let lr = polyline_len(density, &r, cfg.rel_tol);
            if lr <= len && allowed(&v, &r) {
                v = r;
                len = lr;
                break;
            }
        }
        n *= 2;
    }

    let mut history = vec![len];
    let mut levels = vec![0];
    let mut sweeps = 0;
    loop {
        loop {
            let before = len;
            sweep(density, &mut v, &mut len, cfg, &allowed);
            sweeps += 1;
            history.push(len);
            if before - len < cfg.sweep_tol * len || sweeps >= cfg.max_sweeps {
                break;
            }
        }
        if v.len() > n_final || sweeps >= cfg.max_sweeps {
            break;
        }
        // midpoints leave the curve unchanged; the finer quadrature of the
        // subdivided polyline becomes the new reference length
        let sub = Path::new(v.clone())?.subdivide();
        let ls = polyline_len(density, sub.vertices(), cfg.rel_tol);
        if !ls.is_finite() {
            break;
        }
        v = sub.into_vertices();
        len = ls;
        levels.push(history.len());
        history.push(len);
    }
    let length = polyline_len(density, &v, cfg.rel_tol);
    Ok(RefineOutcome { path: Path::new(v)?, length, sweeps, history, levels })
}

fn sweep<D: Density + ?Sized>(
    density: &D,
    v: &mut Vec<Point>,
    len: &mut f64,
    cfg: &RefineConfig,
    allowed: &dyn Fn(&[Point], &[Point]) -> bool,
) {
    let segs = v.len() - 1;
    if segs >= 2 {
        if let Some(r) = resample_rho(density, v, segs) {
            let lr = polyline_len(density, &r, cfg.rel_tol);
            if lr <= *len && allowed(v, &r) {
                *v = r;
                *len = lr;
            }
        }
    }
    for i in 1..v.len() - 1 {
        let (prev, cur, next) = (v[i - 1], v[i], v[i + 1]);
        let local = |p: Point| -> f64 {
            match (
                density.segment_length(prev, p, cfg.rel_tol),
                density.segment_length(p, next, cfg.rel_tol),
            ) {
                (Ok(a), Ok(b)) => a + b,
                _ => f64::INFINITY,
            }
        };
        let f0 = local(cur);
        let chord = next - prev;
        let dir = if chord.norm() > 0.0 { chord.perp().normalized() } else { (cur - prev).perp().normalized() };
        let reach = 0.5 * cur.dist(prev).min(cur.dist(next));
        if !(reach > 0.0) || !dir.is_finite() {
            continue;
        }
        let (t, ft) = golden_section(|t| local(cur + dir * t), -reach, reach, cfg.line_search_iters);
        if ft < f0 {
            let cand = cur + dir * t;
            if allowed(&[prev, cur, next], &[prev, cand, next]) {
                v[i] = cand;
                *len += ft - f0;
            }
        }
    }
}

/// Minimize `f` on `[lo, hi]`; returns the best sampled point.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{QuasihyperbolicDensity, UnitDensity};
    use crate::domain::Domain;
    use crate::geometry::Rect;

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section(|t| (t - 0.3) * (t - 0.3) + 1.0, -1.0, 1.0, 60);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zigzag_in_half_plane_straightens() {
        let d = Domain::upper_half_plane(Rect::new(-2.0, 0.0, 2.0, 4.0));
        let zig = Path::new(vec![
            Point::new(0.0, 1.0),
            Point::new(0.2, 1.3),
            Point::new(-0.2, 1.6),
            Point::new(0.1, 1.8),
            Point::new(0.0, 2.0),
        ])
        .unwrap();
        let out = refine_geodesic(&QuasihyperbolicDensity::new(&d), &zig, &RefineConfig::default(), None).unwrap();
        assert!((out.length - 2f64.ln()).abs() < 1e-6, "{}", out.length);
        for w in out.level_histories().flat_map(|l| l.windows(2)) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn straight_segment_is_a_fixed_point() {
        let d = Domain::upper_half_plane(Rect::new(-2.0, 0.0, 2.0, 4.0));
        let seg = Path::segment(Point::new(0.0, 1.0), Point::new(0.0, 2.0));
        let out = refine_geodesic(&QuasihyperbolicDensity::new(&d), &seg, &RefineConfig::default(), None).unwrap();
        assert!((out.length - 2f64.ln()).abs() < 1e-10);
        for p in out.path.vertices() {
            assert!(p.x.abs() < 1e-10);
        }
    }

    #[test]
    fn unit_density_pulls_taut_around_reflex_corner() {
        let l = Domain::l_shape();
        let p = Path::new(vec![Point::new(-0.5, 0.5), Point::new(-0.3, -0.3), Point::new(0.5, -0.5)]).unwrap();
        let out = refine_geodesic(&UnitDensity::new(&l), &p, &RefineConfig::default(), None).unwrap();
        let taut = 2.0 * 0.5f64.hypot(0.5);
        assert!(out.length >= taut - 1e-12);
        assert!(out.length < taut * 1.001, "{}", out.length);
    }
}
