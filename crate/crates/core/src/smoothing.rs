//! Mollification of `u = −log δ`, smoothed densities `ρ_ε = e^{u_ε}` and
//! their Gaussian curvature `K_ρ = −ρ⁻² Δ log ρ`, all on uniform grids.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path as FsPath;

use rayon::prelude::*;
use serde::Serialize;

use crate::density::{Density, PATH_REL_TOL};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::graph::GraphConfig;
use crate::metric::{gp_bounds, DistanceResult, GeodesicSolver};
use crate::quadrature::adaptive_simpson;

const MAGIC: &[u8; 4] = b"QHGF";

/// Stencil constant of the default subharmonicity tolerance `c·h²`.
pub const STENCIL_CONSTANT: f64 = 10.0;

/// Values at cell centers `origin + (i h, j h)`, row-major in `j`, with a
/// mask marking the working subdomain. Unmasked values are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl GridField {
    /// Grid of cell centers covering `window` at spacing `h`; `f` gives the
    /// value, `None` masks the cell out.
    pub fn sample<F>(window: Rect, h: f64, f: F) -> Result<Self>
    where
        F: Fn(Point) -> Option<f64> + Sync,
    {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {h}")));
        }
        let nx = ((window.width() / h).round() as usize).max(1);
        let ny = ((window.height() / h).round() as usize).max(1);
        let origin = window.min + Point::new(0.5 * h, 0.5 * h);
        let cells: Vec<Option<f64>> = (0..nx * ny)
            .into_par_iter()
            .map(|k| {
                let z = origin + Point::new((k % nx) as f64 * h, (k / nx) as f64 * h);
                f(z).filter(|v| v.is_finite())
            })
            .collect();
        Ok(Self {
            origin,
            h,
            nx,
            ny,
            values: cells.iter().map(|c| c.unwrap_or(f64::NAN)).collect(),
            mask: cells.iter().map(Option::is_some).collect(),
        })
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        self.origin + Point::new(i as f64 * self.h, j as f64 * self.h)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = j * self.nx + i;
        self.mask[k].then_some(self.values[k])
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Cell whose center is nearest to `z`, if inside the grid.
    pub fn cell_of(&self, z: Point) -> Option<(usize, usize)> {
        let i = ((z.x - self.origin.x) / self.h).round();
        let j = ((z.y - self.origin.y) / self.h).round();
        (i >= 0.0 && j >= 0.0 && (i as usize) < self.nx && (j as usize) < self.ny).then_some((i as usize, j as usize))
    }

    /// Apply `f` to every masked value; `None` masks the cell out.
    pub fn map<F: Fn(f64) -> Option<f64> + Sync>(&self, f: F) -> GridField {
        let cells: Vec<Option<f64>> = self
            .values
            .par_iter()
            .zip(self.mask.par_iter())
            .map(|(&v, &m)| if m { f(v).filter(|x| x.is_finite()) } else { None })
            .collect();
        GridField {
            values: cells.iter().map(|c| c.unwrap_or(f64::NAN)).collect(),
            mask: cells.iter().map(Option::is_some).collect(),
            ..self.clone_header()
        }
    }

    fn clone_header(&self) -> GridField {
        GridField { origin: self.origin, h: self.h, nx: self.nx, ny: self.ny, values: Vec::new(), mask: Vec::new() }
    }

    /// Minimum over masked cells; ties go to the lowest row-major index.
    pub fn min_masked(&self) -> Option<(f64, usize, usize)> {
        self.extreme(|a, b| a < b)
    }

    pub fn max_masked(&self) -> Option<(f64, usize, usize)> {
        self.extreme(|a, b| a > b)
    }

    fn extreme(&self, better: impl Fn(f64, f64) -> bool) -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (k, (&v, &m)) in self.values.iter().zip(&self.mask).enumerate() {
            if m && best.is_none_or(|(b, _)| better(v, b)) {
                best = Some((v, k));
            }
        }
        best.map(|(v, k)| (v, k % self.nx, k / self.nx))
    }

    /// Flat binary layout: magic, origin, h, nx, ny, row-major f64 values,
    /// mask as packed bits (least significant bit first). Little endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(44 + 8 * self.values.len() + self.mask.len() / 8 + 1);
        out.extend_from_slice(MAGIC);
        for x in [self.origin.x, self.origin.y, self.h] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&(self.nx as u64).to_le_bytes());
        out.extend_from_slice(&(self.ny as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for chunk in self.mask.chunks(8) {
            out.push(chunk.iter().enumerate().fold(0u8, |acc, (b, &m)| acc | ((m as u8) << b)));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |what: &str| Error::InvalidInput(format!("grid file: {what}"));
        if bytes.len() < 44 || &bytes[..4] != MAGIC {
            return Err(bad("bad header"));
        }
        let f = |k: usize| f64::from_le_bytes(bytes[k..k + 8].try_into().expect("8 bytes"));
        let u = |k: usize| u64::from_le_bytes(bytes[k..k + 8].try_into().expect("8 bytes"));
        let (origin, h) = (Point::new(f(4), f(12)), f(20));
        let (nx, ny) = (u(28) as usize, u(36) as usize);
        let n = nx.checked_mul(ny).ok_or_else(|| bad("size overflow"))?;
        let want = n.checked_mul(8).and_then(|v| v.checked_add(44 + n.div_ceil(8))).ok_or_else(|| bad("size overflow"))?;
        if bytes.len() != want || !(h > 0.0) || nx == 0 || ny == 0 {
            return Err(bad("inconsistent size"));
        }
        let values: Vec<f64> = (0..n).map(|k| f(44 + 8 * k)).collect();
        let base = 44 + 8 * n;
        let mask: Vec<bool> = (0..n).map(|k| bytes[base + k / 8] >> (k % 8) & 1 == 1).collect();
        if values.iter().zip(&mask).any(|(v, &m)| m && !v.is_finite()) {
            return Err(bad("non-finite masked value"));
        }
        Ok(Self { origin, h, nx, ny, values, mask })
    }

    pub fn write(&self, path: &FsPath) -> Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &FsPath) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    /// CSV with columns `i,j,x,y,value,mask`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,x,y,value,mask\n");
        for j in 0..self.ny {
            for i in 0..self.nx {
                let p = self.point(i, j);
                let k = j * self.nx + i;
                writeln!(s, "{i},{j},{},{},{},{}", p.x, p.y, self.values[k], self.mask[k] as u8).expect("string write");
            }
        }
        s
    }
}

/// Discretely normalized bump kernel `η_ε(z) = ε⁻² C exp(1/(|z/ε|² − 1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifierKernel {
    pub eps: f64,
    pub h: f64,
    /// Normalization constant making the discrete mass exactly 1.
    pub c: f64,
    /// Grid offsets inside the support with their weights `η_ε h²`.
    pub taps: Vec<(i64, i64, f64)>,
}

fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (1.0 / (r2 - 1.0)).exp()
    } else {
        0.0
    }
}

impl MollifierKernel {
    /// `η(z) = C exp(1/(|z|² − 1))` on the unit disk, with the discrete `C`.
    pub fn eta(&self, z: Point) -> f64 {
        self.c * bump(z.norm_sq())
    }

    pub fn radius_cells(&self) -> i64 {
        self.taps.iter().map(|t| t.0.abs().max(t.1.abs())).max().unwrap_or(0)
    }

    pub fn mass(&self) -> f64 {
        self.taps.iter().map(|t| t.2).sum()
    }
}

pub fn make_kernel(eps: f64, h: f64) -> Result<MollifierKernel> {
    if !(h > 0.0 && h.is_finite() && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("kernel needs positive finite ε and h, got ε={eps}, h={h}")));
    }
    // relative slack so that ε = 3h computed in floating point is accepted
    if eps < 3.0 * h * (1.0 - 1e-12) {
        return Err(Error::KernelUnderresolved { eps, h });
    }
    let r = (eps / h).ceil() as i64;
    let mut taps = Vec::new();
    let mut raw = 0.0;
    for dj in -r..=r {
        for di in -r..=r {
            let w = bump((di * di + dj * dj) as f64 * (h / eps).powi(2));
            if w > 0.0 {
                taps.push((di, dj, w));
                raw += w;
            }
        }
    }
    for t in &mut taps {
        t.2 /= raw;
    }
    let c = (eps / h).powi(2) / raw;
    Ok(MollifierKernel { eps, h, c, taps })
}

/// Continuum normalization `C = 1 / (2π ∫₀¹ exp(1/(r² − 1)) r dr)`.
pub fn continuum_normalization() -> f64 {
    let integral = adaptive_simpson(&mut |r: f64| Some(bump(r * r) * r), 0.0, 1.0, 1e-13).expect("finite integrand");
    1.0 / (std::f64::consts::TAU * integral)
}

/// `u = −log δ` at cell centers over `window`. A cell is kept when the
/// whole cell lies in `Ω`, which `δ(center) > h/√2` guarantees.
pub fn sample_u(domain: &Domain, window: Rect, h: f64) -> Result<GridField> {
    // closed cells touching the boundary at a corner are excluded
    let clearance = h * std::f64::consts::FRAC_1_SQRT_2 * (1.0 + 1e-9);
    GridField::sample(window, h, |z| {
        let d = domain.delta(z);
        (domain.contains(z) && d > clearance).then(|| -d.ln())
    })
}

/// Discrete convolution with the kernel. A cell stays masked only when the
/// whole kernel support lies in the input mask.
pub fn mollify(field: &GridField, kernel: &MollifierKernel) -> Result<GridField> {
    if (field.h - kernel.h).abs() > 1e-12 * field.h {
        return Err(Error::InvalidInput(format!("kernel spacing {} does not match grid spacing {}", kernel.h, field.h)));
    }
    let (nx, ny) = (field.nx as i64, field.ny as i64);
    let cells: Vec<Option<f64>> = (0..field.nx * field.ny)
        .into_par_iter()
        .map(|k| {
            let (i, j) = ((k % field.nx) as i64, (k / field.nx) as i64);
            let mut acc = 0.0;
            for &(di, dj, w) in &kernel.taps {
                let (p, q) = (i + di, j + dj);
                if p < 0 || q < 0 || p >= nx || q >= ny {
                    return None;
                }
                let kk = q as usize * field.nx + p as usize;
                if !field.mask[kk] {
                    return None;
                }
                acc += w * field.values[kk];
            }
            Some(acc)
        })
        .collect();
    Ok(GridField {
        values: cells.iter().map(|c| c.unwrap_or(f64::NAN)).collect(),
        mask: cells.iter().map(Option::is_some).collect(),
        ..field.clone_header()
    })
}

/// Five-point Laplacian; the mask loses every cell with an unmasked neighbour.
pub fn laplacian(field: &GridField) -> GridField {
    let (nx, ny) = (field.nx, field.ny);
    let inv = 1.0 / (field.h * field.h);
    let cells: Vec<Option<f64>> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            if i == 0 || j == 0 || i + 1 == nx || j + 1 == ny {
                return None;
            }
            let c = field.get(i, j)?;
            let s = field.get(i + 1, j)? + field.get(i - 1, j)? + field.get(i, j + 1)? + field.get(i, j - 1)?;
            Some((s - 4.0 * c) * inv)
        })
        .collect();
    GridField {
        values: cells.iter().map(|c| c.unwrap_or(f64::NAN)).collect(),
        mask: cells.iter().map(Option::is_some).collect(),
        ..field.clone_header()
    }
}

/// Outcome of a grid sign check; a failing report is data, not an error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignReport {
    /// Extreme value (min for subharmonicity, max for curvature).
    pub extreme: f64,
    pub location: Option<Point>,
    pub cell: Option<(usize, usize)>,
    pub cells: usize,
    pub tol: f64,
    pub pass: bool,
}

/// Default tolerance `c·h²·scale`.
pub fn stencil_tolerance(h: f64, scale: f64) -> f64 {
    STENCIL_CONSTANT * h * h * scale
}

/// Check `min Δu ≥ −tol` over the masked cells of the Laplacian of `field`.
pub fn check_subharmonic(field: &GridField, tol: f64) -> SignReport {
    let lap = laplacian(field);
    match lap.min_masked() {
        Some((m, i, j)) => SignReport {
            extreme: m,
            location: Some(lap.point(i, j)),
            cell: Some((i, j)),
            cells: lap.masked_count(),
            tol,
            pass: m >= -tol,
        },
        None => SignReport { extreme: f64::INFINITY, location: None, cell: None, cells: 0, tol, pass: true },
    }
}

/// Local size of the five-point stencil error, `h²/12 (|∂⁴ₓu| + |∂⁴ᵧu|)`,
/// with the fourth derivatives estimated by axis differences.
pub fn stencil_error_scale(field: &GridField) -> GridField {
    let (nx, ny) = (field.nx, field.ny);
    let h4 = field.h.powi(4);
    let cells: Vec<Option<f64>> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            if i < 2 || j < 2 || i + 2 >= nx || j + 2 >= ny {
                return None;
            }
            let c = field.get(i, j)?;
            let dx = field.get(i + 2, j)? - 4.0 * field.get(i + 1, j)? + 6.0 * c - 4.0 * field.get(i - 1, j)?
                + field.get(i - 2, j)?;
            let dy = field.get(i, j + 2)? - 4.0 * field.get(i, j + 1)? + 6.0 * c - 4.0 * field.get(i, j - 1)?
                + field.get(i, j - 2)?;
            Some(field.h * field.h * (dx.abs() + dy.abs()) / (12.0 * h4))
        })
        .collect();
    GridField {
        values: cells.iter().map(|c| c.unwrap_or(f64::NAN)).collect(),
        mask: cells.iter().map(Option::is_some).collect(),
        ..field.clone_header()
    }
}

/// Subharmonicity against the local stencil error: `extreme` is the
/// minimum of `Δu / scale` over cells with `Δu < 0`, and the check passes
/// when it is at least `−c`.
pub fn check_subharmonic_local(field: &GridField, c: f64) -> SignReport {
    let lap = laplacian(field);
    let scale = stencil_error_scale(field);
    let mut worst: Option<(f64, usize)> = None;
    let mut cells = 0;
    for k in 0..lap.values.len() {
        if !(lap.mask[k] && scale.mask[k]) {
            continue;
        }
        cells += 1;
        let (l, s) = (lap.values[k], scale.values[k]);
        if l < 0.0 {
            let r = if s > 0.0 { l / s } else { f64::NEG_INFINITY };
            if worst.is_none_or(|(w, _)| r < w) {
                worst = Some((r, k));
            }
        }
    }
    match worst {
        Some((r, k)) => {
            let (i, j) = (k % lap.nx, k / lap.nx);
            SignReport { extreme: r, location: Some(lap.point(i, j)), cell: Some((i, j)), cells, tol: c, pass: r >= -c }
        }
        None => SignReport { extreme: 0.0, location: None, cell: None, cells, tol: c, pass: true },
    }
}

/// Check `max K ≤ tol` over a curvature field.
pub fn check_curvature(k: &GridField, tol: f64) -> SignReport {
    match k.max_masked() {
        Some((m, i, j)) => SignReport {
            extreme: m,
            location: Some(k.point(i, j)),
            cell: Some((i, j)),
            cells: k.masked_count(),
            tol,
            pass: m <= tol,
        },
        None => SignReport { extreme: f64::NEG_INFINITY, location: None, cell: None, cells: 0, tol, pass: true },
    }
}

/// `K = −ρ⁻² Δ log ρ` per cell.
pub fn curvature(density: &GridField) -> Result<GridField> {
    for j in 0..density.ny {
        for i in 0..density.nx {
            if density.get(i, j).is_some_and(|r| r <= 0.0) {
                return Err(Error::NonPositiveDensity { i, j });
            }
        }
    }
    let lap = laplacian(&density.map(|r| Some(r.ln())));
    let cells: Vec<Option<f64>> = (0..lap.values.len())
        .map(|k| lap.mask[k].then(|| -lap.values[k] / (density.values[k] * density.values[k])))
        .collect();
    Ok(GridField {
        values: cells.iter().map(|c| c.unwrap_or(f64::NAN)).collect(),
        mask: cells.iter().map(Option::is_some).collect(),
        ..density.clone_header()
    })
}

/// `u_ε` sampled so that it is fully computed on `window`.
pub fn smoothed_u(domain: &Domain, eps: f64, window: Rect, h: f64) -> Result<GridField> {
    let kernel = make_kernel(eps, h)?;
    let u = sample_u(domain, window.expand(eps + h), h)?;
    mollify(&u, &kernel)
}

/// `ρ_ε = exp(u_ε)`.
pub fn smoothed_density(domain: &Domain, eps: f64, window: Rect, h: f64) -> Result<GridField> {
    Ok(smoothed_u(domain, eps, window, h)?.map(|v| Some(v.exp())))
}

/// Mask of the 4-connected component of `field.mask` containing the cell
/// nearest to `basepoint`.
pub fn component_mask(field: &GridField, basepoint: Point) -> Result<Vec<bool>> {
    let (i, j) = field.cell_of(basepoint).ok_or(Error::ComponentMismatch(basepoint))?;
    if field.get(i, j).is_none() {
        return Err(Error::ComponentMismatch(basepoint));
    }
    let mut comp = vec![false; field.mask.len()];
    let mut queue = VecDeque::from([(i, j)]);
    comp[j * field.nx + i] = true;
    while let Some((i, j)) = queue.pop_front() {
        let nbrs = [
            (i.wrapping_sub(1), j),
            (i + 1, j),
            (i, j.wrapping_sub(1)),
            (i, j + 1),
        ];
        for (p, q) in nbrs {
            if p < field.nx && q < field.ny {
                let k = q * field.nx + p;
                if field.mask[k] && !comp[k] {
                    comp[k] = true;
                    queue.push_back((p, q));
                }
            }
        }
    }
    Ok(comp)
}

/// Bilinear interpolation of a grid density, supported on the patches
/// whose four corner cells lie in a chosen component.
#[derive(Debug, Clone)]
pub struct GridDensity {
    field: GridField,
    component: Vec<bool>,
}

impl GridDensity {
    pub fn new(field: GridField, basepoint: Point) -> Result<Self> {
        let component = component_mask(&field, basepoint)?;
        Ok(Self { field, component })
    }

    pub fn field(&self) -> &GridField {
        &self.field
    }

    fn patch(&self, z: Point) -> Option<(usize, usize, f64, f64)> {
        let f = &self.field;
        let fx = (z.x - f.origin.x) / f.h;
        let fy = (z.y - f.origin.y) / f.h;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (mut i, mut j) = (fx.floor() as usize, fy.floor() as usize);
        // the far grid edge belongs to the last patch
        if i + 1 == f.nx && fx == i as f64 {
            i = i.checked_sub(1)?;
        }
        if j + 1 == f.ny && fy == j as f64 {
            j = j.checked_sub(1)?;
        }
        if i + 1 >= f.nx || j + 1 >= f.ny {
            return None;
        }
        let ok = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)].iter().all(|&(p, q)| self.component[q * f.nx + p]);
        ok.then_some((i, j, fx - i as f64, fy - j as f64))
    }

    /// Breakpoints of `[a, b]` at the patch edges, as parameters in `[0, 1]`.
    fn breakpoints(&self, a: Point, b: Point) -> Vec<f64> {
        let f = &self.field;
        let mut ts = vec![0.0, 1.0];
        for (a0, b0, o) in [(a.x, b.x, f.origin.x), (a.y, b.y, f.origin.y)] {
            if a0 == b0 {
                continue;
            }
            let (lo, hi) = (a0.min(b0), a0.max(b0));
            let k0 = ((lo - o) / f.h).ceil() as i64;
            let k1 = ((hi - o) / f.h).floor() as i64;
            for k in k0..=k1 {
                let t = (o + k as f64 * f.h - a0) / (b0 - a0);
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }
}

impl Density for GridDensity {
    fn value(&self, z: Point) -> Option<f64> {
        let (i, j, tx, ty) = self.patch(z)?;
        let f = &self.field;
        let v = |p: usize, q: usize| f.values[q * f.nx + p];
        Some(
            (1.0 - tx) * (1.0 - ty) * v(i, j)
                + tx * (1.0 - ty) * v(i + 1, j)
                + (1.0 - tx) * ty * v(i, j + 1)
                + tx * ty * v(i + 1, j + 1),
        )
    }

    /// Exact: the bilinear density is quadratic along each piece of the
    /// segment inside one patch, where Simpson's rule is exact.
    fn segment_length(&self, a: Point, b: Point, _rel_tol: f64) -> Result<f64> {
        let len = a.dist(b);
        if len == 0.0 {
            return self.value(a).map(|_| 0.0).ok_or(Error::BoundaryContact(a));
        }
        let ts = self.breakpoints(a, b);
        let mut total = 0.0;
        for w in ts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let tm = 0.5 * (t0 + t1);
            let val = |t: f64| self.value(a.lerp(b, t)).ok_or(Error::BoundaryContact(a.lerp(b, t)));
            // evaluate the piece inside the patch of its midpoint
            let (i, j, _, _) = self.patch(a.lerp(b, tm)).ok_or(Error::BoundaryContact(a.lerp(b, tm)))?;
            let on_patch = |t: f64| self.bilinear_on(i, j, a.lerp(b, t));
            let (f0, fm, f1) = (on_patch(t0), val(tm)?, on_patch(t1));
            total += (t1 - t0) * len * (f0 + 4.0 * fm + f1) / 6.0;
        }
        Ok(total)
    }

    fn segment_admissible(&self, a: Point, b: Point) -> bool {
        let ts = self.breakpoints(a, b);
        self.value(a).is_some()
            && self.value(b).is_some()
            && ts.windows(2).all(|w| self.value(a.lerp(b, 0.5 * (w[0] + w[1]))).is_some())
    }
}

impl GridDensity {
    /// Bilinear form of patch `(i, j)` evaluated at `z`, which may lie on
    /// the patch edge.
    fn bilinear_on(&self, i: usize, j: usize, z: Point) -> f64 {
        let f = &self.field;
        let tx = ((z.x - f.origin.x) / f.h - i as f64).clamp(0.0, 1.0);
        let ty = ((z.y - f.origin.y) / f.h - j as f64).clamp(0.0, 1.0);
        let v = |p: usize, q: usize| f.values[q * f.nx + p];
        (1.0 - tx) * (1.0 - ty) * v(i, j)
            + tx * (1.0 - ty) * v(i + 1, j)
            + (1.0 - tx) * ty * v(i, j + 1)
            + tx * ty * v(i + 1, j + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingConfig {
    /// Grid spacing as a fraction of ε.
    pub grid_fraction: f64,
    /// Region on which `ρ_ε` is computed; the domain's graph window if unset.
    pub window: Option<Rect>,
    pub graph: GraphConfig,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self { grid_fraction: 0.2, window: None, graph: GraphConfig::default() }
    }
}

/// Distances for the smoothed density `ρ_ε` on the component of the grid
/// version of `Ω_ε` containing a basepoint.
pub struct SmoothedSolver<'a> {
    inner: GeodesicSolver<'a, GridDensity>,
    eps: f64,
}

impl<'a> SmoothedSolver<'a> {
    pub fn new(domain: &'a Domain, eps: f64, basepoint: Point, resolution: f64, cfg: &SmoothingConfig) -> Result<Self> {
        let window = cfg.window.unwrap_or_else(|| domain.graph_window(cfg.graph.inflation));
        let rho = smoothed_density(domain, eps, window, cfg.grid_fraction * eps)?;
        let density = GridDensity::new(rho, basepoint)?;
        Ok(Self { inner: GeodesicSolver::new(domain, density, resolution, &cfg.graph)?, eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn solver(&self) -> &GeodesicSolver<'a, GridDensity> {
        &self.inner
    }

    /// `d_ε(a, b)`. The lower bound is the Gehring–Palka bound for `k`,
    /// which `d_ε` dominates because `u_ε ≥ u`.
    pub fn distance(&self, a: Point, b: Point) -> Result<DistanceResult> {
        for z in [a, b] {
            if !self.inner.density().admits(z) {
                return Err(Error::ComponentMismatch(z));
            }
        }
        let (value, path) = self.inner.geodesic(a, b)?;
        let lower_bound = if a == b { 0.0 } else { gp_bounds(self.inner.domain(), a, b).strongest() };
        Ok(DistanceResult { value, lower_bound, path, resolution: self.inner.resolution() })
    }
}

/// One-shot `d_ε(a, b)` with basepoint `a`.
pub fn smoothed_distance(domain: &Domain, eps: f64, a: Point, b: Point, resolution: f64) -> Result<DistanceResult> {
    for z in [a, b] {
        if !domain.contains(z) {
            return Err(Error::NotContained(z));
        }
    }
    SmoothedSolver::new(domain, eps, a, resolution, &SmoothingConfig::default())?.distance(a, b)
}

/// Length of a polyline in the smoothed metric.
pub fn smoothed_length(density: &GridDensity, pts: &[Point]) -> Result<f64> {
    crate::density::polyline_length(density, pts, PATH_REL_TOL)
}
