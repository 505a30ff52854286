//! The exponential cover of a punctured plane, logarithmic spirals, and
//! geodesics in prescribed homotopy classes of finitely punctured planes.
//!
//! Homotopy classes are encoded by crossing words: each puncture drops a
//! vertical cut ray downwards, and a path records the signed index of every
//! cut it crosses (`+i` when crossing cut `i` from west to east, i.e.
//! counterclockwise around puncture `i`). Freely reduced words are the
//! elements of the fundamental group, so two paths with the same endpoints
//! are homotopic exactly when their reduced words agree.

use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::density::QuasihyperbolicDensity;
use crate::domain::{Domain, DomainKind};
use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, Point};
use crate::graph::{GraphConfig, MetricGraph};
use crate::metric::{gp_bounds, DistanceResult, GeodesicSolver};
use crate::path::Path;
use crate::refine::MoveConstraint;

/// Winding offset `n` of the logarithm branch at the end point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindingClass(pub i64);

fn shifted(z: Point, puncture: Point) -> Result<Point> {
    let w = z - puncture;
    if w == Point::ORIGIN {
        Err(Error::AtPuncture(z))
    } else {
        Ok(w)
    }
}

/// `log|b/a|` and the principal `Δθ = arg(b/a) ∈ (−π, π]`.
fn log_ratio(a: Point, b: Point, puncture: Point) -> Result<(f64, f64)> {
    let (wa, wb) = (shifted(a, puncture)?, shifted(b, puncture)?);
    let r = wb.cdiv(wa);
    let mut theta = r.arg();
    if theta == -PI {
        theta = PI;
    }
    Ok(((wb.norm() / wa.norm()).ln(), theta))
}

/// `k_*(a, b) = |log(b/a)|` on `ℂ \ {puncture}`.
pub fn exact_punctured_distance(a: Point, b: Point, puncture: Point) -> Result<f64> {
    let (l, t) = log_ratio(a, b, puncture)?;
    Ok(l.hypot(t))
}

/// `|log|b/a| + i(Δθ + 2πn)|`, the length of the geodesic in class `n`.
pub fn class_distance(a: Point, b: Point, puncture: Point, class: WindingClass) -> Result<f64> {
    let (l, t) = log_ratio(a, b, puncture)?;
    Ok(l.hypot(t + TAU * class.0 as f64))
}

/// `log(z − puncture)` with the argument taken within `π` of `branch`.
pub fn log_lift(z: Point, puncture: Point, branch: f64) -> Result<Point> {
    let w = shifted(z, puncture)?;
    let mut theta = w.arg();
    theta += TAU * ((branch - theta) / TAU).round();
    Ok(Point::new(w.norm().ln(), theta))
}

/// `puncture + exp(w)`.
pub fn exp_point(w: Point, puncture: Point) -> Point {
    puncture + w.cexp()
}

/// The logarithmic spiral from `a` to `b` in class `n`: the image under
/// `exp` of the segment from `log a` to `log b + 2πin`, sampled at
/// `samples` equal parameter steps.
pub fn spiral_geodesic(a: Point, b: Point, puncture: Point, class: WindingClass, samples: usize) -> Result<Path> {
    let (l, t) = log_ratio(a, b, puncture)?;
    let la = log_lift(a, puncture, 0.0)?;
    let lb = la + Point::new(l, t + TAU * class.0 as f64);
    let n = samples.max(1);
    let mut v: Vec<Point> = (0..=n).map(|k| exp_point(la.lerp(lb, k as f64 / n as f64), puncture)).collect();
    v[0] = a;
    v[n] = b;
    Path::new(v)
}

fn principal(t: f64) -> f64 {
    let r = t - TAU * (t / TAU).round();
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Continuous logarithm at the vertices of `path`, starting on the branch
/// nearest `base_branch`.
pub fn lift_vertices(path: &Path, puncture: Point, base_branch: f64) -> Result<Path> {
    let v = path.vertices();
    let mut out = Vec::with_capacity(v.len());
    let mut cur = log_lift(v[0], puncture, base_branch)?;
    out.push(cur);
    for w in v.windows(2) {
        if point_segment_distance(puncture, w[0], w[1]) == 0.0 {
            return Err(Error::AtPuncture(puncture));
        }
        let (p, q) = (shifted(w[0], puncture)?, shifted(w[1], puncture)?);
        cur = Point::new(q.norm().ln(), cur.y + principal(q.cdiv(p).arg()));
        out.push(cur);
    }
    Path::new(out)
}

/// Relative sagitta below which a lifted piece is treated as straight.
const LIFT_SAGITTA: f64 = 1e-5;

/// Dense continuous logarithm of `path`: each segment is subdivided until
/// its image in the cover is straight to within a relative sagitta of
/// `1e-5`, so the Euclidean length of the lift matches the quasihyperbolic
/// length of `path` to about `1e-9`.
pub fn lift_path(path: &Path, puncture: Point, base_branch: f64) -> Result<Path> {
    let coarse = lift_vertices(path, puncture, base_branch)?;
    let (v, lv) = (path.vertices(), coarse.vertices());
    let mut out = vec![lv[0]];
    for k in 1..v.len() {
        lift_segment(v[k - 1], v[k], lv[k - 1], lv[k], puncture, 0, &mut out);
    }
    Path::new(out)
}

fn lift_segment(p: Point, q: Point, lp: Point, lq: Point, puncture: Point, depth: u32, out: &mut Vec<Point>) {
    let m = p.midpoint(q);
    let lm = log_lift(m, puncture, 0.5 * (lp.y + lq.y)).expect("segment avoids the puncture");
    let chord = lp.dist(lq);
    if depth < 40 && point_segment_distance(lm, lp, lq) > LIFT_SAGITTA * chord {
        lift_segment(p, m, lp, lm, puncture, depth + 1, out);
        lift_segment(m, q, lm, lq, puncture, depth + 1, out);
    } else {
        out.push(lq);
    }
}

/// `exp` of a lifted path.
pub fn exp_path(lifted: &Path, puncture: Point) -> Result<Path> {
    Path::new(lifted.vertices().iter().map(|&w| exp_point(w, puncture)).collect())
}

/// A freely reduced word in the cut crossings, serialized as a signed list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i32>", into = "Vec<i32>")]
pub struct CrossingWord(Vec<i32>);

impl CrossingWord {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Accepts only reduced words with non-zero letters.
    pub fn new(letters: Vec<i32>) -> Result<Self> {
        if letters.contains(&0) || letters.windows(2).any(|w| w[0] == -w[1]) {
            return Err(Error::InvalidWord(letters));
        }
        Ok(Self(letters))
    }

    /// Free reduction of an arbitrary letter sequence.
    pub fn reduce<I: IntoIterator<Item = i32>>(letters: I) -> Self {
        let mut w = Self::empty();
        for l in letters {
            w.push(l);
        }
        w
    }

    pub fn push(&mut self, letter: i32) {
        if self.0.last() == Some(&-letter) {
            self.0.pop();
        } else {
            self.0.push(letter);
        }
    }

    pub fn append(&mut self, other: &[i32]) {
        for &l in other {
            self.push(l);
        }
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().rev().map(|l| -l).collect())
    }

    /// Parse `"[+1, -2]"` or `"+1,-2"`.
    pub fn parse(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
        let letters = inner
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.trim_start_matches('+').parse::<i32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidInput(format!("crossing word {s:?}: {e}")))?;
        Self::new(letters)
    }
}

impl TryFrom<Vec<i32>> for CrossingWord {
    type Error = Error;

    fn try_from(v: Vec<i32>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CrossingWord> for Vec<i32> {
    fn from(w: CrossingWord) -> Self {
        w.0
    }
}

impl std::fmt::Display for CrossingWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|l| format!("{l:+}")).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Shift applied to a cut that would share its line with an earlier one.
pub const CUT_JITTER: f64 = 1e-9;

/// Vertical rays `{x = c_i, y < y_i}` dropped from each puncture.
#[derive(Debug, Clone, PartialEq)]
pub struct CutSystem {
    cuts: Vec<(f64, f64)>,
}

impl CutSystem {
    pub fn new(punctures: &[Point]) -> Self {
        let mut cuts: Vec<(f64, f64)> = Vec::with_capacity(punctures.len());
        for p in punctures {
            let mut x = p.x;
            while cuts.iter().any(|&(c, _)| c == x) {
                x += CUT_JITTER * x.abs().max(1.0);
            }
            cuts.push((x, p.y));
        }
        Self { cuts }
    }

    pub fn for_domain(domain: &Domain) -> Result<Self> {
        if domain.kind() != DomainKind::PuncturedPlane {
            return Err(Error::InvalidDomain("crossing words need a punctured plane".into()));
        }
        Ok(Self::new(domain.punctures()))
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    /// Signed crossings of `[p, q]` in order along the segment. A point
    /// with `x = c` counts as east of the cut.
    pub fn crossings(&self, p: Point, q: Point) -> Vec<i32> {
        let mut hits: Vec<(f64, i32)> = Vec::new();
        for (k, &(c, top)) in self.cuts.iter().enumerate() {
            if (p.x < c) == (q.x < c) {
                continue;
            }
            let t = (c - p.x) / (q.x - p.x);
            if p.y + t * (q.y - p.y) < top {
                let sign = if q.x > p.x { 1 } else { -1 };
                hits.push((t, sign * (k as i32 + 1)));
            }
        }
        hits.sort_by(|a, b| a.0.total_cmp(&b.0));
        hits.into_iter().map(|h| h.1).collect()
    }

    pub fn word_of(&self, pts: &[Point]) -> CrossingWord {
        let mut w = CrossingWord::empty();
        for s in pts.windows(2) {
            w.append(&self.crossings(s[0], s[1]));
        }
        w
    }

    pub fn check_word(&self, word: &CrossingWord) -> Result<()> {
        if word.letters().iter().any(|l| l.unsigned_abs() as usize > self.cuts.len()) {
            return Err(Error::InvalidWord(word.letters().to_vec()));
        }
        Ok(())
    }
}

/// Winding class `n` of a path from `a` to `b` with crossing word `word`
/// around a single puncture, relative to the principal branch.
pub fn word_to_winding(word: &CrossingWord, a: Point, b: Point, puncture: Point) -> Result<WindingClass> {
    let cut_arg = |z: Point| -> Result<f64> {
        // argument continuous off the downward ray, in (−π/2, 3π/2]
        let t = shifted(z, puncture)?.arg();
        Ok(if t <= -PI / 2.0 { t + TAU } else { t })
    };
    let total = cut_arg(b)? - cut_arg(a)? + TAU * word.letters().iter().map(|&l| l.signum() as f64).sum::<f64>();
    let (_, principal_dt) = log_ratio(a, b, puncture)?;
    Ok(WindingClass(((total - principal_dt) / TAU).round() as i64))
}

/// Crossing word of the class-`n` spiral from `a` to `b` around a single
/// puncture.
pub fn winding_to_word(class: WindingClass, a: Point, b: Point, puncture: Point) -> Result<CrossingWord> {
    let spiral = spiral_geodesic(a, b, puncture, class, 256)?;
    Ok(CutSystem::new(&[puncture]).word_of(spiral.vertices()))
}

/// Default cap on lifted word length.
pub const DEFAULT_WORD_CAP: usize = 6;

#[derive(Clone, Copy, PartialEq)]
struct LiftState(f64, u32, u32);

impl Eq for LiftState {}

impl PartialOrd for LiftState {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LiftState {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.total_cmp(&self.0).then_with(|| (other.1, other.2).cmp(&(self.1, self.2)))
    }
}

/// Quasihyperbolic geodesics of a punctured plane in prescribed classes.
pub struct ClassSolver<'a> {
    inner: GeodesicSolver<'a, QuasihyperbolicDensity<'a>>,
    cuts: CutSystem,
    pub word_cap: usize,
}

impl<'a> ClassSolver<'a> {
    pub fn new(domain: &'a Domain, h: f64) -> Result<Self> {
        Self::with_config(domain, h, &GraphConfig::default())
    }

    pub fn with_config(domain: &'a Domain, h: f64, cfg: &GraphConfig) -> Result<Self> {
        let cuts = CutSystem::for_domain(domain)?;
        let inner = GeodesicSolver::new(domain, QuasihyperbolicDensity::new(domain), h, cfg)?;
        Ok(Self { inner, cuts, word_cap: DEFAULT_WORD_CAP })
    }

    pub fn cuts(&self) -> &CutSystem {
        &self.cuts
    }

    pub fn solver(&self) -> &GeodesicSolver<'a, QuasihyperbolicDensity<'a>> {
        &self.inner
    }

    pub fn resolution(&self) -> f64 {
        self.inner.resolution()
    }

    fn graph(&self) -> &MetricGraph {
        self.inner.graph()
    }

    /// Dijkstra on (node, word) states, explored lazily, from `(a, ∅)` to
    /// `(b, word)`. Returns the initial polyline.
    pub fn lifted_path(&self, a: Point, b: Point, word: &CrossingWord) -> Result<Path> {
        let g = self.graph();
        let mut words: Vec<CrossingWord> = Vec::new();
        let mut ids: HashMap<CrossingWord, u32> = HashMap::new();
        let mut intern = |w: CrossingWord, words: &mut Vec<CrossingWord>| -> u32 {
            *ids.entry(w.clone()).or_insert_with(|| {
                words.push(w);
                (words.len() - 1) as u32
            })
        };
        let mut dist: HashMap<(u32, u32), f64> = HashMap::new();
        let mut prev: HashMap<(u32, u32), (u32, u32)> = HashMap::new();
        let mut heap = BinaryHeap::new();
        for (s, w) in g.connectors(self.inner.density(), a) {
            let sw = CrossingWord::reduce(self.cuts.crossings(a, g.node(s)));
            if sw.len() > self.word_cap {
                continue;
            }
            let id = intern(sw, &mut words);
            if dist.get(&(s, id)).is_none_or(|&d| w < d) {
                dist.insert((s, id), w);
                heap.push(LiftState(w, s, id));
            }
        }
        // exit legs: from node t with word x we finish when x·c(t→b) = word
        let exits: HashMap<u32, (f64, Vec<i32>)> = g
            .connectors(self.inner.density(), b)
            .into_iter()
            .map(|(t, w)| (t, (w, self.cuts.crossings(g.node(t), b))))
            .collect();
        let mut best: Option<(f64, (u32, u32))> = None;
        let mut done: HashMap<(u32, u32), ()> = HashMap::new();
        while let Some(LiftState(d, u, wid)) = heap.pop() {
            if best.is_some_and(|(bd, _)| d >= bd) {
                break;
            }
            if done.insert((u, wid), ()).is_some() {
                continue;
            }
            if let Some((w, tail)) = exits.get(&u) {
                let mut fin = words[wid as usize].clone();
                fin.append(tail);
                if &fin == word && best.is_none_or(|(bd, _)| d + w < bd) {
                    best = Some((d + w, (u, wid)));
                }
            }
            let here = g.node(u);
            for (v, w) in g.neighbors(u) {
                let mut nw = words[wid as usize].clone();
                nw.append(&self.cuts.crossings(here, g.node(v)));
                if nw.len() > self.word_cap {
                    continue;
                }
                let nid = intern(nw, &mut words);
                let nd = d + w;
                if dist.get(&(v, nid)).is_none_or(|&old| nd < old) {
                    dist.insert((v, nid), nd);
                    prev.insert((v, nid), (u, wid));
                    heap.push(LiftState(nd, v, nid));
                }
            }
        }
        let (_, mut state) = best.ok_or(Error::NoPath)?;
        let mut route = vec![state.0];
        while let Some(&p) = prev.get(&state) {
            route.push(p.0);
            state = p;
        }
        route.reverse();
        let mut v = Vec::with_capacity(route.len() + 2);
        v.push(a);
        v.extend(route.iter().map(|&k| g.node(k)));
        v.push(b);
        Path::new(v)
    }

    /// Refine `path` without leaving its homotopy class.
    pub fn refine_in_class(&self, path: &Path) -> Result<(f64, Path)> {
        let cuts = &self.cuts;
        let same_class = |old: &[Point], new: &[Point]| cuts.word_of(old) == cuts.word_of(new);
        let constraint: MoveConstraint<'_> = &same_class;
        self.inner.refine_path(path, Some(constraint))
    }

    /// The geodesic from `a` to `b` whose crossing word is `word`.
    pub fn geodesic_in_class(&self, a: Point, b: Point, word: &CrossingWord) -> Result<DistanceResult> {
        self.cuts.check_word(word)?;
        let domain = self.inner.domain();
        for z in [a, b] {
            if !domain.contains(z) {
                return Err(Error::NotContained(z));
            }
        }
        if word.len() > self.word_cap {
            return Err(Error::NoPath);
        }
        if a == b && word.is_empty() {
            return Ok(DistanceResult { value: 0.0, lower_bound: 0.0, path: Path::point(a), resolution: self.resolution() });
        }
        let init = self.lifted_path(a, b, word)?;
        let (value, path) = self.refine_in_class(&init)?;
        let lower_bound = if a == b { 0.0 } else { gp_bounds(domain, a, b).strongest() };
        Ok(DistanceResult { value, lower_bound, path, resolution: self.resolution() })
    }
}

/// One-shot class-constrained geodesic.
pub fn geodesic_in_class(domain: &Domain, a: Point, b: Point, word: &CrossingWord, resolution: f64) -> Result<DistanceResult> {
    CutSystem::for_domain(domain)?.check_word(word)?;
    ClassSolver::new(domain, resolution)?.geodesic_in_class(a, b, word)
}
