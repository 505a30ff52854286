//! Command-line experiments: argument parsing, presets, and the commands
//! behind the `qhyp` binary.
//!
//! Every command writes deterministic JSON or CSV (to `--out`, or stdout
//! when unset). Failures map to exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 2 | malformed input (flags, domain file, endpoints, words, grid parameters) |
//! | 3 | no path at this resolution |
//! | 4 | numerical failure (boundary contact, non-positive density, component mismatch) |
//! | 5 | I/O failure |

use std::f64::consts::E;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::cat0::{cat0_audit, four_point_check, AuditConfig, GeodesicSpace, GeodesicTriangle, QhSpace, WorstPair};
use crate::covering::{
    class_distance, exact_punctured_distance, log_lift, spiral_geodesic, word_to_winding, ClassSolver, CrossingWord,
    WindingClass,
};
use crate::domain::{Domain, DomainKind, DomainSpec};
use crate::error::Error;
use crate::geometry::{Point, Rect};
use crate::metric::{closed_form_distance, qh_distance, qh_length, DistanceResult};
use crate::path::Path;
use crate::smoothing::{
    check_curvature, check_subharmonic, check_subharmonic_local, curvature, sample_u, smoothed_density,
    smoothed_distance, smoothed_u, stencil_tolerance, GridField, STENCIL_CONSTANT,
};

pub const EXIT_MALFORMED: i32 = 2;
pub const EXIT_NO_PATH: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// Default graph spacing.
pub const DEFAULT_H: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Distance,
    Geodesic,
    AuditCat0,
    #[value(name = "audit-4pt")]
    Audit4pt,
    Converge,
    Mollify,
    Curvature,
    Spiral,
}

/// Canonical domains and point configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Upper half-plane, `a = i`, `b = 2i`.
    HalfPlaneRay,
    /// `ℂ \ {0}`, `a = 1`, `b = e·i`, class 0.
    PuncturedSpiral,
    /// `ℂ \ {0}` with the quadruple `1, i, −1, −i`.
    CylinderQuadruple,
    /// Unit disk, `a = 0`, `b = 0.9`.
    Disk,
    /// Square `[-1, 1]²`.
    Square,
    /// `[-1, 1]² \ [0, 1]²`.
    LShape,
    /// `ℂ \ {−1, 1}`, `a = b = 2i`, loop class `[+1, +2]`.
    TwoPunctures,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "qhyp", version, about = "Quasihyperbolic distances, geodesics, smoothing and CAT(0) audits")]
pub struct Args {
    /// Domain description (JSON).
    #[arg(long)]
    pub domain: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub cmd: Command,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub a: Option<Point>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub b: Option<Point>,
    /// Graph spacing (distance commands) or grid spacing (mollify, curvature).
    #[arg(long, value_parser = parse_positive)]
    pub h: Option<f64>,
    /// Comma-separated mollifier radii.
    #[arg(long, value_delimiter = ',', value_parser = parse_positive)]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Main JSON/CSV output; stdout when unset.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Path CSV for distance, geodesic and spiral.
    #[arg(long)]
    pub path_out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Grid output; CSV when the name ends in `.csv`, binary otherwise.
    #[arg(long)]
    pub grid_out: Option<PathBuf>,
    /// Homotopy class: a crossing word such as "[+1, -2]", or a winding
    /// number for the spiral command.
    #[arg(long, allow_hyphen_values = true)]
    pub class: Option<String>,
    /// Four points "x,y;x,y;x,y;x,y" for audit-4pt.
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// Use cover distances between chosen lifts in audit-4pt.
    #[arg(long)]
    pub lifted: bool,
    #[arg(long, default_value_t = 50)]
    pub triangles: usize,
    #[arg(long, default_value_t = 20)]
    pub pairs: usize,
    /// Random pairs for converge when `--a/--b` are unset.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, value_parser = parse_positive)]
    pub tolerance: Option<f64>,
    /// Grid window "xmin,ymin,xmax,ymax" for mollify and curvature.
    #[arg(long, value_parser = parse_rect, allow_hyphen_values = true)]
    pub window: Option<Rect>,
}

pub fn parse_point(s: &str) -> Result<Point, String> {
    let v = parse_reals(s)?;
    match v[..] {
        [x, y] => Ok(Point::new(x, y)),
        _ => Err(format!("expected X,Y, got {s:?}")),
    }
}

fn parse_rect(s: &str) -> Result<Rect, String> {
    let v = parse_reals(s)?;
    match v[..] {
        [x0, y0, x1, y1] if x1 > x0 && y1 > y0 => Ok(Rect::new(x0, y0, x1, y1)),
        _ => Err(format!("expected XMIN,YMIN,XMAX,YMAX with positive extent, got {s:?}")),
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{s:?} must be a positive finite number"))
    }
}

fn parse_reals(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("{s:?}: non-finite coordinate"))
            }
        })
        .collect()
}

/// A failed command with its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoPath | Error::EmptyGraph => EXIT_NO_PATH,
            Error::BoundaryContact(_) | Error::NonPositiveDensity { .. } | Error::ComponentMismatch(_) => {
                EXIT_NUMERICAL
            }
            Error::Io(_) => EXIT_IO,
            _ => EXIT_MALFORMED,
        };
        Self { code, message: e.to_string() }
    }
}

fn malformed(msg: impl Into<String>) -> CliError {
    CliError { code: EXIT_MALFORMED, message: msg.into() }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Domain and points after merging a preset with explicit flags.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub domain: Domain,
    pub a: Option<Point>,
    pub b: Option<Point>,
    pub points: Option<[Point; 4]>,
    pub class: Option<String>,
}

pub fn preset(p: Preset) -> Experiment {
    let pt = Point::new;
    let big = Rect::new(-4.0, -4.0, 4.0, 4.0);
    let (domain, a, b, points, class) = match p {
        Preset::HalfPlaneRay => {
            (Domain::upper_half_plane(Rect::new(-3.0, 0.0, 3.0, 6.0)), Some(pt(0.0, 1.0)), Some(pt(0.0, 2.0)), None, None)
        }
        Preset::PuncturedSpiral => (
            Domain::punctured_plane(vec![Point::ORIGIN], big).expect("valid preset"),
            Some(pt(1.0, 0.0)),
            Some(pt(0.0, E)),
            None,
            Some("0".to_string()),
        ),
        Preset::CylinderQuadruple => (
            Domain::punctured_plane(vec![Point::ORIGIN], big).expect("valid preset"),
            None,
            None,
            Some([pt(1.0, 0.0), pt(0.0, 1.0), pt(-1.0, 0.0), pt(0.0, -1.0)]),
            None,
        ),
        Preset::Disk => (Domain::unit_disk(), Some(Point::ORIGIN), Some(pt(0.9, 0.0)), None, None),
        Preset::Square => (Domain::square(1.0), Some(pt(-0.5, -0.5)), Some(pt(0.5, 0.5)), None, None),
        Preset::LShape => (Domain::l_shape(), Some(pt(-0.5, 0.5)), Some(pt(0.5, -0.5)), None, None),
        Preset::TwoPunctures => (
            Domain::punctured_plane(vec![pt(-1.0, 0.0), pt(1.0, 0.0)], big).expect("valid preset"),
            Some(pt(0.0, 2.0)),
            Some(pt(0.0, 2.0)),
            None,
            Some("[+1, +2]".to_string()),
        ),
    };
    Experiment { domain, a, b, points, class }
}

fn parse_points(s: &str) -> CliResult<[Point; 4]> {
    let pts = s.split(';').map(parse_point).collect::<Result<Vec<_>, _>>().map_err(malformed)?;
    pts.try_into().map_err(|_| malformed(format!("expected four points, got {s:?}")))
}

pub fn resolve(args: &Args) -> CliResult<Experiment> {
    let mut exp = match (&args.domain, args.preset) {
        (Some(path), p) => {
            let domain = Domain::load(path)?;
            let mut e = p.map(preset).unwrap_or(Experiment { domain: domain.clone(), a: None, b: None, points: None, class: None });
            e.domain = domain;
            e
        }
        (None, Some(p)) => preset(p),
        (None, None) => return Err(malformed("either --domain or --preset is required")),
    };
    exp.a = args.a.or(exp.a);
    exp.b = args.b.or(exp.b);
    if let Some(s) = &args.points {
        exp.points = Some(parse_points(s)?);
    }
    if args.class.is_some() {
        exp.class = args.class.clone();
    }
    Ok(exp)
}

fn endpoints(exp: &Experiment) -> CliResult<(Point, Point)> {
    match (exp.a, exp.b) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(malformed("--a and --b are required")),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn write_file(path: &PathBuf, data: &[u8]) -> CliResult<()> {
    std::fs::write(path, data).map_err(|e| CliError { code: EXIT_IO, message: format!("{}: {e}", path.display()) })
}

/// Run one command. Returns the text for stdout; files named by the
/// output flags are written as a side effect.
pub fn run(args: &Args) -> CliResult<String> {
    let exp = resolve(args)?;
    let main = match args.cmd {
        Command::Distance => cmd_distance(args, &exp, false)?,
        Command::Geodesic => cmd_distance(args, &exp, true)?,
        Command::AuditCat0 => match exp.points {
            Some(_) => cmd_audit_4pt(args, &exp)?,
            None => cmd_audit_cat0(args, &exp)?,
        },
        Command::Audit4pt => cmd_audit_4pt(args, &exp)?,
        Command::Converge => cmd_converge(args, &exp)?,
        Command::Mollify => cmd_mollify(args, &exp)?,
        Command::Curvature => cmd_curvature(args, &exp)?,
        Command::Spiral => cmd_spiral(args, &exp)?,
    };
    match &args.out {
        Some(p) => {
            write_file(p, main.as_bytes())?;
            Ok(String::new())
        }
        None => Ok(main),
    }
}

fn solve(args: &Args, exp: &Experiment, a: Point, b: Point) -> CliResult<(DistanceResult, Option<CrossingWord>)> {
    let h = args.h.unwrap_or(DEFAULT_H);
    match (&exp.class, exp.domain.kind()) {
        (Some(c), DomainKind::PuncturedPlane) => {
            let word = parse_class_word(c, &exp.domain, a, b)?;
            let solver = ClassSolver::new(&exp.domain, h)?;
            Ok((solver.geodesic_in_class(a, b, &word)?, Some(word)))
        }
        (Some(_), _) => Err(malformed("--class needs a punctured plane")),
        (None, _) => Ok((qh_distance(&exp.domain, a, b, h)?, None)),
    }
}

/// A crossing word, or a winding number on a once-punctured plane.
fn parse_class_word(s: &str, domain: &Domain, a: Point, b: Point) -> CliResult<CrossingWord> {
    if s.trim_start().starts_with('[') {
        return Ok(CrossingWord::parse(s)?);
    }
    let n: i64 = s.trim().parse().map_err(|_| malformed(format!("class {s:?} is neither a word nor an integer")))?;
    match domain.punctures() {
        [p] => Ok(crate::covering::winding_to_word(WindingClass(n), a, b, *p)?),
        _ => Err(malformed("winding numbers need a single puncture; pass a crossing word")),
    }
}

fn cmd_distance(args: &Args, exp: &Experiment, full: bool) -> CliResult<String> {
    let (a, b) = endpoints(exp)?;
    let (r, word) = solve(args, exp, a, b)?;
    if let Some(p) = &args.path_out {
        write_file(p, r.path.to_csv(&exp.domain)?.as_bytes())?;
    }
    if let Some(p) = &args.svg {
        let doc = Svg::new(&exp.domain).path(&r.path, "#c0392b").dot(a, "#000").dot(b, "#000").finish();
        write_file(p, doc.as_bytes())?;
    }
    if !full {
        return Ok(to_json(&r.record()));
    }
    let verts: Vec<[f64; 2]> = r.path.vertices().iter().map(|&p| p.into()).collect();
    Ok(to_json(&json!({
        "value": r.value,
        "lower_bound": r.lower_bound,
        "resolution": r.resolution,
        "class": word,
        "euclidean_length": r.path.euclidean_length(),
        "vertices": verts,
    })))
}

fn cmd_spiral(args: &Args, exp: &Experiment) -> CliResult<String> {
    let (a, b) = endpoints(exp)?;
    let p = match exp.domain.punctures() {
        [p] => *p,
        _ => return Err(malformed("spiral needs a plane with exactly one puncture")),
    };
    let class = match exp.class.as_deref().map(str::trim) {
        None => WindingClass(0),
        Some(s) if s.starts_with('[') => word_to_winding(&CrossingWord::parse(s)?, a, b, p)?,
        Some(s) => WindingClass(s.parse().map_err(|_| malformed(format!("class {s:?} is not an integer")))?),
    };
    let samples = 512;
    let path = spiral_geodesic(a, b, p, class, samples)?;
    if let Some(out) = &args.path_out {
        write_file(out, path.to_csv(&exp.domain)?.as_bytes())?;
    }
    if let Some(out) = &args.svg {
        write_file(out, Svg::new(&exp.domain).path(&path, "#2471a3").dot(a, "#000").dot(b, "#000").finish().as_bytes())?;
    }
    let word = CrossingWord::reduce(crate::covering::CutSystem::new(&[p]).word_of(path.vertices()).letters().iter().copied());
    Ok(to_json(&json!({
        "class": class.0,
        "word": word,
        "length": class_distance(a, b, p, class)?,
        "polyline_qh_length": qh_length(&exp.domain, &path)?,
        "samples": samples,
    })))
}

fn cmd_audit_cat0(args: &Args, exp: &Experiment) -> CliResult<String> {
    let h = args.h.unwrap_or(DEFAULT_H);
    let cfg = AuditConfig {
        triangles: args.triangles,
        pairs_per_triangle: args.pairs,
        seed: args.seed,
        tolerance: args.tolerance,
        ..AuditConfig::default()
    };
    if cfg.triangles == 0 || cfg.pairs_per_triangle == 0 {
        return Ok(to_json(&cat0_audit(&crate::cat0::EuclideanPlane { region: exp.domain.window() }, None::<&QhSpace>, &cfg)?));
    }
    let space = QhSpace::new(&exp.domain, h)?;
    let fine = QhSpace::new(&exp.domain, h / 2.0)?;
    let report = cat0_audit(&space, Some(&fine), &cfg)?;
    if let Some(p) = &args.svg {
        let mut svg = Svg::new(&exp.domain);
        if let Some(w) = &report.worst {
            svg = worst_triangle(svg, &space, w)?;
        }
        write_file(p, svg.finish().as_bytes())?;
    }
    Ok(to_json(&report))
}

fn worst_triangle<'d>(mut svg: Svg<'d>, space: &QhSpace<'_>, w: &WorstPair) -> CliResult<Svg<'d>> {
    let [a, b, c] = w.vertices;
    let tri = GeodesicTriangle::build(space, a, b, c)?;
    for side in &tri.sides {
        svg = svg.path(&side.path, "#2471a3");
    }
    svg = svg.path(&Path::segment(w.x, w.y), "#c0392b").dot(w.x, "#c0392b").dot(w.y, "#c0392b");
    Ok(svg.dot(a, "#000").dot(b, "#000").dot(c, "#000"))
}

fn cmd_audit_4pt(args: &Args, exp: &Experiment) -> CliResult<String> {
    let pts = exp.points.ok_or_else(|| malformed("--points (or a quadruple preset) is required"))?;
    const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let single = match exp.domain.punctures() {
        [p] => Some(*p),
        _ => None,
    };
    let (metric, d, default_tol) = if args.lifted {
        let p = single.ok_or_else(|| malformed("--lifted needs a plane with exactly one puncture"))?;
        let mut lifts = Vec::with_capacity(4);
        let mut branch = 0.0;
        for &z in &pts {
            let l = log_lift(z, p, branch)?;
            branch = l.y;
            lifts.push(l);
        }
        ("lifted", PAIRS.map(|(i, j)| lifts[i].dist(lifts[j])).to_vec(), 1e-9)
    } else if let Some(p) = single {
        let d = PAIRS.iter().map(|&(i, j)| exact_punctured_distance(pts[i], pts[j], p)).collect::<Result<Vec<_>, _>>()?;
        ("exact", d, 1e-9)
    } else {
        let h = args.h.unwrap_or(DEFAULT_H);
        let coarse = QhSpace::new(&exp.domain, h)?;
        let fine = QhSpace::new(&exp.domain, h / 2.0)?;
        let dc = PAIRS.iter().map(|&(i, j)| coarse.distance(pts[i], pts[j])).collect::<Result<Vec<_>, _>>()?;
        let df = PAIRS.iter().map(|&(i, j)| fine.distance(pts[i], pts[j])).collect::<Result<Vec<_>, _>>()?;
        let tol = 3.0 * dc.iter().zip(&df).map(|(c, f)| (c - f).abs()).fold(crate::cat0::TOLERANCE_FLOOR, f64::max);
        ("computed", df, tol)
    };
    let tol = args.tolerance.unwrap_or(default_tol);
    let r = four_point_check(d[0], d[1], d[2], d[3], d[4], d[5], tol)?;
    let coords: Vec<[f64; 2]> = pts.iter().map(|&p| p.into()).collect();
    let x_bar: Vec<[f64; 2]> = r.x_bar.iter().map(|&p| p.into()).collect();
    Ok(to_json(&json!({
        "points": coords,
        "metric": metric,
        "distances": d,
        "tolerance": tol,
        "violation": r.violation,
        "x_bar": x_bar,
        "verdict": if r.pass { "pass" } else { "fail" },
    })))
}

/// Seeded points of `domain` with `δ ≥ min_delta`, drawn from `region`.
pub fn sample_points(domain: &Domain, region: Rect, min_delta: f64, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let z = Point::new(
            region.min.x + region.width() * rng.gen::<f64>(),
            region.min.y + region.height() * rng.gen::<f64>(),
        );
        if domain.contains(z) && domain.delta(z) >= min_delta {
            out.push(z);
        }
    }
    out
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergeRow {
    pub pair: usize,
    pub a: Point,
    pub b: Point,
    pub eps: f64,
    pub value: Option<f64>,
    pub reference: f64,
    pub error: Option<f64>,
    pub status: String,
}

/// `d_ε(a, b)` against the reference for every pair and every `ε`
/// (descending). Failed rows carry a status instead of a value.
pub fn convergence_table(domain: &Domain, pairs: &[(Point, Point)], eps: &[f64], h: f64) -> Result<Vec<ConvergeRow>, Error> {
    let mut eps = eps.to_vec();
    eps.sort_by(|x, y| y.total_cmp(x));
    eps.dedup();
    let refs = pairs
        .par_iter()
        .map(|&(a, b)| match closed_form_distance(domain, a, b) {
            Some(d) => Ok(d),
            None => qh_distance(domain, a, b, h).map(|r| r.value),
        })
        .collect::<Result<Vec<f64>, Error>>()?;
    let jobs: Vec<(usize, f64)> = (0..pairs.len()).flat_map(|k| eps.iter().map(move |&e| (k, e))).collect();
    jobs.par_iter()
        .map(|&(k, e)| {
            let (a, b) = pairs[k];
            let row = |value: Option<f64>, status: &str| ConvergeRow {
                pair: k,
                a,
                b,
                eps: e,
                value,
                reference: refs[k],
                error: value.map(|v| (v - refs[k]).abs()),
                status: status.to_string(),
            };
            match smoothed_distance(domain, e, a, b, h) {
                Ok(r) => Ok(row(Some(r.value), "ok")),
                Err(Error::ComponentMismatch(_)) => Ok(row(None, "component_mismatch")),
                Err(Error::NoPath) => Ok(row(None, "no_path")),
                Err(err) => Err(err),
            }
        })
        .collect()
}

pub fn convergence_csv(rows: &[ConvergeRow]) -> String {
    let mut s = String::from("pair,ax,ay,bx,by,eps,value,reference,error,status\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.pair,
            r.a.x,
            r.a.y,
            r.b.x,
            r.b.y,
            r.eps,
            opt(r.value),
            r.reference,
            opt(r.error),
            r.status
        )
        .expect("string write");
    }
    s
}

fn cmd_converge(args: &Args, exp: &Experiment) -> CliResult<String> {
    if args.eps.is_empty() {
        return Err(malformed("--eps is required"));
    }
    let h = args.h.unwrap_or(DEFAULT_H);
    let pairs = match (exp.a, exp.b) {
        (Some(a), Some(b)) => vec![(a, b)],
        _ => {
            let pts = sample_points(&exp.domain, exp.domain.window(), 4.0 * h, 2 * args.samples, args.seed);
            pts.chunks(2).map(|c| (c[0], c[1])).collect()
        }
    };
    Ok(convergence_csv(&convergence_table(&exp.domain, &pairs, &args.eps, h)?))
}

fn grid_window(args: &Args, exp: &Experiment) -> Rect {
    args.window.unwrap_or_else(|| exp.domain.window())
}

fn write_grid(args: &Args, field: &GridField) -> CliResult<()> {
    if let Some(p) = &args.grid_out {
        if p.extension().is_some_and(|e| e == "csv") {
            write_file(p, field.to_csv().as_bytes())?;
        } else {
            write_file(p, &field.to_bytes())?;
        }
    }
    Ok(())
}

fn single_eps(args: &Args) -> CliResult<Option<f64>> {
    match args.eps[..] {
        [] => Ok(None),
        [e] => Ok(Some(e)),
        _ => Err(malformed("this command takes a single --eps")),
    }
}

fn cmd_mollify(args: &Args, exp: &Experiment) -> CliResult<String> {
    let eps = single_eps(args)?.ok_or_else(|| malformed("--eps is required"))?;
    let h = args.h.unwrap_or(eps / 5.0);
    let u = smoothed_u(&exp.domain, eps, grid_window(args, exp), h)?;
    write_grid(args, &u)?;
    Ok(to_json(&json!({
        "eps": eps,
        "h": h,
        "nx": u.nx,
        "ny": u.ny,
        "cells": u.masked_count(),
        "subharmonic": check_subharmonic(&u, stencil_tolerance(h, 1.0)),
        "subharmonic_local": check_subharmonic_local(&u, STENCIL_CONSTANT),
    })))
}

fn cmd_curvature(args: &Args, exp: &Experiment) -> CliResult<String> {
    let eps = single_eps(args)?;
    let window = grid_window(args, exp);
    let (h, density) = match eps {
        Some(e) => {
            let h = args.h.unwrap_or(e / 5.0);
            (h, smoothed_density(&exp.domain, e, window, h)?)
        }
        None => {
            let h = args.h.unwrap_or(DEFAULT_H);
            (h, sample_u(&exp.domain, window, h)?.map(|v| Some(v.exp())))
        }
    };
    let k = curvature(&density)?;
    write_grid(args, &k)?;
    let min = k.min_masked().map(|m| m.0);
    Ok(to_json(&json!({
        "eps": eps,
        "h": h,
        "nx": k.nx,
        "ny": k.ny,
        "min_curvature": min,
        "report": check_curvature(&k, stencil_tolerance(h, 1.0)),
    })))
}

/// Minimal SVG writer; `y` points up.
struct Svg<'d> {
    domain: &'d Domain,
    view: Rect,
    body: String,
}

impl<'d> Svg<'d> {
    fn new(domain: &'d Domain) -> Self {
        Self { domain, view: domain.window(), body: String::new() }
    }

    fn stroke(&self) -> f64 {
        0.004 * self.view.width().max(self.view.height())
    }

    fn path(mut self, p: &Path, color: &str) -> Self {
        let pts: Vec<String> = p.vertices().iter().map(|q| format!("{:.6},{:.6}", q.x, -q.y)).collect();
        let w = self.stroke();
        writeln!(self.body, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{w:.6}"/>"#, pts.join(" "))
            .expect("string write");
        self
    }

    fn dot(mut self, p: Point, color: &str) -> Self {
        let r = 2.0 * self.stroke();
        writeln!(self.body, r#"<circle cx="{:.6}" cy="{:.6}" r="{r:.6}" fill="{color}"/>"#, p.x, -p.y).expect("string write");
        self
    }

    fn boundary(&self) -> String {
        let w = self.stroke();
        let ring = |v: &[[f64; 2]]| {
            let pts: Vec<String> = v.iter().map(|q| format!("{:.6},{:.6}", q[0], -q[1])).collect();
            format!(r##"<polygon points="{}" fill="#f4f6f7" stroke="#555" stroke-width="{w:.6}"/>"##, pts.join(" "))
        };
        match self.domain.to_spec() {
            DomainSpec::Disk { center, radius, .. } => {
                let c = center.unwrap_or([0.0, 0.0]);
                format!(
                    r##"<circle cx="{:.6}" cy="{:.6}" r="{radius:.6}" fill="#f4f6f7" stroke="#555" stroke-width="{w:.6}"/>"##,
                    c[0], -c[1]
                )
            }
            DomainSpec::Polygon { outer, holes, .. } => {
                let mut s = ring(&outer);
                for h in &holes {
                    s.push('\n');
                    s.push_str(&ring(h).replace("#f4f6f7", "#fff"));
                }
                s
            }
            DomainSpec::HalfPlane { origin, normal, .. } => {
                let o = Point::from(origin.unwrap_or([0.0, 0.0]));
                let t = Point::from(normal.unwrap_or([0.0, 1.0])).normalized().perp();
                let span = 2.0 * (self.view.width() + self.view.height());
                let (p, q) = (o + t * span, o - t * span);
                format!(r##"<line x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}" stroke="#555" stroke-width="{w:.6}"/>"##, p.x, -p.y, q.x, -q.y)
            }
            DomainSpec::PuncturedPlane { punctures, .. } => punctures
                .iter()
                .map(|p| format!(r##"<circle cx="{:.6}" cy="{:.6}" r="{:.6}" fill="#555"/>"##, p[0], -p[1], 3.0 * w))
                .collect::<Vec<_>>()
                .join("\n"),
        }
    }

    fn finish(self) -> String {
        let v = self.view;
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!-- qhyp {} -->\n<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\">\n{}\n{}</svg>\n",
            env!("CARGO_PKG_VERSION"),
            v.min.x,
            -v.max.y,
            v.width(),
            v.height(),
            self.boundary(),
            self.body
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(extra: &[&str]) -> Args {
        let mut v = vec!["qhyp"];
        v.extend_from_slice(extra);
        Args::try_parse_from(v).unwrap()
    }

    #[test]
    fn parses_points_and_rejects_zero_eps() {
        assert_eq!(parse_point("-1.5, 2").unwrap(), Point::new(-1.5, 2.0));
        assert!(parse_point("1").is_err());
        assert!(parse_point("1,nan").is_err());
        assert!(Args::try_parse_from(["qhyp", "--cmd", "converge", "--eps", "0"]).is_err());
        assert!(Args::try_parse_from(["qhyp", "--cmd", "mollify", "--h", "-1"]).is_err());
        let a = args(&["--cmd", "distance", "--a", "-1,0", "--eps", "0.2,0.1"]);
        assert_eq!(a.a, Some(Point::new(-1.0, 0.0)));
        assert_eq!(a.eps, vec![0.2, 0.1]);
    }

    #[test]
    fn distance_examples() {
        let out = run(&args(&["--cmd", "distance", "--preset", "half-plane-ray"])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["value"].as_f64().unwrap() / 2f64.ln() - 1.0).abs() < 1e-3);
        let out = run(&args(&["--cmd", "distance", "--preset", "disk", "--a", "0.3,0.1", "--b", "0.3,0.1"])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["value"].as_f64().unwrap(), 0.0);
    }

    #[test]
    fn failure_codes() {
        let e = run(&args(&["--cmd", "distance", "--preset", "disk", "--a", "2,0"])).unwrap_err();
        assert_eq!(e.code, EXIT_MALFORMED);
        let e = run(&args(&["--cmd", "distance"])).unwrap_err();
        assert_eq!(e.code, EXIT_MALFORMED);
        let e = run(&args(&["--cmd", "mollify", "--preset", "disk", "--eps", "0.05", "--h", "0.02"])).unwrap_err();
        assert_eq!(e.code, EXIT_MALFORMED);
        let e = run(&args(&["--cmd", "geodesic", "--preset", "two-punctures", "--class", "[1,-1]"])).unwrap_err();
        assert_eq!(e.code, EXIT_MALFORMED);
        assert_eq!(CliError::from(Error::NoPath).code, EXIT_NO_PATH);
        assert_eq!(CliError::from(Error::ComponentMismatch(Point::ORIGIN)).code, EXIT_NUMERICAL);
    }

    #[test]
    fn cylinder_quadruple_fails_and_lifts_pass() {
        let out = run(&args(&["--cmd", "audit-cat0", "--preset", "cylinder-quadruple"])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["verdict"], "fail");
        assert!((v["violation"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-9);
        let out = run(&args(&["--cmd", "audit-4pt", "--preset", "cylinder-quadruple", "--lifted"])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["verdict"], "pass");
    }

    #[test]
    fn zero_triangle_audit_is_empty_pass() {
        let out = run(&args(&["--cmd", "audit-cat0", "--preset", "disk", "--triangles", "0"])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["verdict"], "pass");
        assert_eq!(v["samples"], 0);
    }

    #[test]
    fn spiral_preset() {
        let out = run(&args(&["--cmd", "spiral", "--preset", "punctured-spiral"])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let exact = 1.0f64.hypot(std::f64::consts::FRAC_PI_2);
        assert!((v["length"].as_f64().unwrap() - exact).abs() < 1e-14);
        assert!((v["polyline_qh_length"].as_f64().unwrap() / exact - 1.0).abs() < 1e-4);
    }

    #[test]
    fn converge_rows_descend_and_flag_mismatch() {
        let d = Domain::upper_half_plane(Rect::new(-2.0, 0.0, 2.0, 4.0));
        let pairs = [(Point::new(0.0, 1.0), Point::new(0.0, 2.0))];
        let rows = convergence_table(&d, &pairs, &[0.1, 1.5, 0.2], 0.04).unwrap();
        let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
        assert_eq!(eps, vec![1.5, 0.2, 0.1]);
        assert_eq!(rows[0].status, "component_mismatch");
        assert!(rows[1].error.unwrap() >= rows[2].error.unwrap() * 0.9);
        let csv = convergence_csv(&rows);
        assert!(csv.lines().nth(1).unwrap().ends_with(",,component_mismatch"));
    }

    #[test]
    fn curvature_of_half_plane_density() {
        let out = run(&args(&["--cmd", "curvature", "--preset", "half-plane-ray", "--window", "-0.5,0.5,0.5,1.5", "--h", "0.01"])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["report"]["extreme"].as_f64().unwrap() + 1.0).abs() < 1e-2);
        assert!((v["min_curvature"].as_f64().unwrap() + 1.0).abs() < 1e-2);
    }
}
