//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line
//! (with indented detail lines above it) and then asserts.

use std::f64::consts::{E, PI};
use std::sync::OnceLock;
use std::time::Instant;

use qhyp::cat0::{cat0_audit, four_point_check, AuditConfig, QhSpace};
use qhyp::cli::sample_points;
use qhyp::covering::{
    class_distance, exact_punctured_distance, log_lift, winding_to_word, ClassSolver, CrossingWord, WindingClass,
};
use qhyp::density::{Density, QuasihyperbolicDensity};
use qhyp::graph::GraphConfig;
use qhyp::metric::{closed_form_distance, gp_bounds, qh_distance, small_scale_check, QhSolver, SMALL_SCALE_SLACK};
use qhyp::path::hausdorff_distance;
use qhyp::smoothing::{
    check_curvature, check_subharmonic, check_subharmonic_local, curvature, smoothed_density, smoothed_distance,
    smoothed_u, stencil_tolerance, GridField, STENCIL_CONSTANT,
};
use qhyp::{Domain, Path, Point, Rect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn line(n: u32, name: &str, pass: bool, detail: &str) {
    println!("criterion {n} [{name}]: {} ({detail})", verdict(pass));
}

fn pt(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

fn punctured(punctures: Vec<Point>, half: f64) -> Domain {
    Domain::punctured_plane(punctures, Rect::new(-half, -half, half, half)).unwrap()
}

#[test]
fn criterion_01_punctured_plane_oracle() {
    let start = Instant::now();
    let domain = punctured(vec![Point::ORIGIN], 5.0);
    let cfg = GraphConfig { inflation: 1.2, ..GraphConfig::default() };
    let solver = QhSolver::with_config(&domain, 0.02, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs: Vec<(Point, Point)> = (0..200)
        .map(|_| {
            let mut draw = || Point::from_polar(rng.gen_range(0.2f64.ln()..5f64.ln()).exp(), rng.gen_range(-PI..PI));
            (draw(), draw())
        })
        .collect();
    let errs: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let exact = exact_punctured_distance(a, b, Point::ORIGIN).unwrap();
            (solver.distance(a, b).unwrap().value / exact - 1.0).abs()
        })
        .collect();
    let worst = errs.iter().copied().fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 0.02 && secs <= 300.0;
    line(1, "punctured-plane oracle", pass, &format!("200 pairs, max rel err {worst:.3e} <= 2e-2, {secs:.1} s <= 300 s"));
    assert!(pass);
}

#[test]
fn criterion_02_radial_exactness() {
    let hp = Domain::upper_half_plane(Rect::new(-2.0, 0.0, 2.0, 4.0));
    let k_hp = qh_distance(&hp, pt(0.0, 1.0), pt(0.0, 2.0), 0.02).unwrap().value;
    let k_disk = qh_distance(&Domain::unit_disk(), Point::ORIGIN, pt(0.9, 0.0), 0.02).unwrap().value;
    let e_hp = (k_hp / 2f64.ln() - 1.0).abs();
    let e_disk = (k_disk / 10f64.ln() - 1.0).abs();
    println!("    k(i, 2i) = {k_hp:.9} (log 2 = {:.9}), rel err {e_hp:.2e}", 2f64.ln());
    println!("    k(0, 0.9) = {k_disk:.9} (log 10 = {:.9}), rel err {e_disk:.2e}", 10f64.ln());
    let pass = e_hp <= 1e-3 && e_disk <= 1e-3;
    line(2, "half-plane/disk radial exactness", pass, &format!("rel errs {e_hp:.2e}, {e_disk:.2e} <= 1e-3"));
    assert!(pass);
}

struct SuiteSample {
    domain: usize,
    a: Point,
    b: Point,
    value: f64,
}

const SUITE_H: f64 = 0.05;

fn suite_domains() -> Vec<(&'static str, Domain)> {
    vec![
        ("disk", Domain::unit_disk()),
        ("square", Domain::square(1.0)),
        ("l-shape", Domain::l_shape()),
        ("half-plane", Domain::upper_half_plane(Rect::new(-2.0, 0.0, 2.0, 4.0))),
        ("punctured plane", punctured(vec![Point::ORIGIN], 3.0)),
        ("two-puncture plane", punctured(vec![pt(-1.0, 0.0), pt(1.0, 0.0)], 3.0)),
    ]
}

/// 1002 pairs over the suite, half of them at small scale
/// (`|a − b| ≤ δ(a)/2`).
fn suite() -> &'static (Vec<(&'static str, Domain)>, Vec<SuiteSample>) {
    static SUITE: OnceLock<(Vec<(&'static str, Domain)>, Vec<SuiteSample>)> = OnceLock::new();
    SUITE.get_or_init(|| {
        let domains = suite_domains();
        let per = 167;
        let mut samples = Vec::new();
        for (k, (_, d)) in domains.iter().enumerate() {
            let solver = QhSolver::new(d, SUITE_H).unwrap();
            let pts = sample_points(d, d.window(), 2.0 * SUITE_H, 2 * per, 100 + k as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(200 + k as u64);
            let pairs: Vec<(Point, Point)> = pts
                .chunks(2)
                .enumerate()
                .map(|(i, c)| {
                    if i % 2 == 0 {
                        return (c[0], c[1]);
                    }
                    loop {
                        let r = d.delta(c[0]) * rng.gen_range(0.01..0.5);
                        let b = c[0] + Point::from_polar(r, rng.gen_range(-PI..PI));
                        if d.contains(b) && d.delta(b) >= 2.0 * SUITE_H {
                            return (c[0], b);
                        }
                    }
                })
                .collect();
            let values: Vec<f64> = pairs.par_iter().map(|&(a, b)| solver.distance(a, b).unwrap().value).collect();
            samples.extend(pairs.iter().zip(values).map(|(&(a, b), value)| SuiteSample { domain: k, a, b, value }));
        }
        (domains, samples)
    })
}

#[test]
fn criterion_03_gp_bound_chain() {
    let (domains, samples) = suite();
    let mut worst_slack = f64::INFINITY;
    let mut monotone = true;
    for s in samples {
        let g = gp_bounds(&domains[s.domain].1, s.a, s.b);
        let (i, e, r) = g.as_tuple();
        worst_slack = worst_slack.min(s.value - i).min(s.value - e).min(s.value - r);
        monotone &= g.is_monotone();
    }
    let pass = samples.len() >= 1000 && worst_slack >= -1e-9 && monotone;
    line(
        3,
        "Gehring-Palka chain",
        pass,
        &format!("{} pairs, min(k - bound) = {worst_slack:.3e} >= -1e-9, chain monotone: {monotone}", samples.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_04_small_scale_bound() {
    let (domains, samples) = suite();
    let mut tested = 0;
    let mut failures = 0;
    for s in samples {
        let r = small_scale_check(&domains[s.domain].1, s.a, s.b, s.value);
        if r.hypothesis {
            tested += 1;
            failures += (!r.pass) as usize;
        }
    }
    let pass = tested > 0 && failures == 0;
    line(
        4,
        "small-scale two-sided bound",
        pass,
        &format!("{tested} pairs meet the hypothesis, {failures} violations at slack {SMALL_SCALE_SLACK:e}"),
    );
    assert!(pass);
}

fn smoothing_suite() -> Vec<(&'static str, Domain, Rect)> {
    vec![
        ("disk", Domain::unit_disk(), Rect::new(-1.0, -1.0, 1.0, 1.0)),
        ("square", Domain::square(1.0), Rect::new(-1.0, -1.0, 1.0, 1.0)),
        ("l-shape", Domain::l_shape(), Rect::new(-1.0, -1.0, 1.0, 1.0)),
        ("two-puncture plane", punctured(vec![pt(-1.0, 0.0), pt(1.0, 0.0)], 2.0), Rect::new(-2.0, -2.0, 2.0, 2.0)),
    ]
}

const SMOOTHING_EPS: [f64; 3] = [0.02, 0.05, 0.1];

#[test]
fn criterion_05_subharmonicity() {
    let mut pass = true;
    for (name, d, w) in smoothing_suite() {
        for eps in SMOOTHING_EPS {
            let h = eps / 5.0;
            let u = smoothed_u(&d, eps, w, h).unwrap();
            let tol = stencil_tolerance(h, 1.0);
            let r = check_subharmonic(&u, tol);
            let local = check_subharmonic_local(&u, STENCIL_CONSTANT);
            println!(
                "    {name:<18} eps={eps:<5} min lap = {:>11.4e} vs -{tol:.1e}: {}   [local stencil-error model: {:.3} >= -{STENCIL_CONSTANT}: {}]",
                r.extreme,
                verdict(r.pass),
                local.extreme,
                verdict(local.pass)
            );
            pass &= r.pass;
        }
    }
    line(5, "subharmonicity of u_eps", pass, "min grid Laplacian >= -10h^2 over 4 domains x 3 eps at h = eps/5");
    assert!(pass);
}

fn control_max_error(window: Rect, f: impl Fn(Point) -> f64 + Sync, expected: f64) -> f64 {
    let rho = GridField::sample(window, 1e-3, |z| Some(f(z))).unwrap();
    let k = curvature(&rho).unwrap();
    let (lo, hi) = (k.min_masked().unwrap().0, k.max_masked().unwrap().0);
    (lo - expected).abs().max((hi - expected).abs())
}

#[test]
fn criterion_06_curvature_sign() {
    let mut pass = true;
    for (name, d, w) in smoothing_suite() {
        for eps in SMOOTHING_EPS {
            let h = eps / 5.0;
            let k = curvature(&smoothed_density(&d, eps, w, h).unwrap()).unwrap();
            let r = check_curvature(&k, stencil_tolerance(h, 1.0));
            println!("    {name:<18} eps={eps:<5} max K = {:>11.4e} vs {:.1e}: {}", r.extreme, r.tol, verdict(r.pass));
            pass &= r.pass;
        }
    }
    let win = Rect::new(0.5, 0.5, 1.5, 1.5);
    let hyp = control_max_error(win, |z| 1.0 / z.y, -1.0);
    let flat = control_max_error(win, |z| 1.0 / z.norm(), 0.0);
    println!("    control 1/y:   max |K + 1| = {hyp:.3e} <= 1e-2: {}", verdict(hyp <= 1e-2));
    println!("    control 1/|z|: max |K|     = {flat:.3e} <= 1e-2: {}", verdict(flat <= 1e-2));
    pass &= hyp <= 1e-2 && flat <= 1e-2;
    line(6, "curvature sign", pass, "max K <= 10h^2 over the suite; analytic controls within 1e-2 at h = 1e-3");
    assert!(pass);
}

#[test]
fn criterion_07_cat0_audit() {
    let h = 0.04;
    let mut pass = true;
    for (name, d) in [("disk", Domain::unit_disk()), ("square", Domain::square(1.0)), ("l-shape", Domain::l_shape())] {
        let space = QhSpace::new(&d, h).unwrap();
        let fine = QhSpace::new(&d, h / 2.0).unwrap();
        let r = cat0_audit(&space, Some(&fine), &AuditConfig { seed: 7, ..AuditConfig::default() }).unwrap();
        println!(
            "    {name:<7} {} triangles x {} pairs: max violation {:.3e} vs tolerance {:.3e} ({} retested): {}",
            r.triangles,
            r.samples / r.triangles.max(1),
            r.max_violation,
            r.tolerance,
            r.retested,
            verdict(r.passed())
        );
        pass &= r.passed() && r.triangles == 50 && r.samples == 1000;
    }
    let quad = [pt(1.0, 0.0), pt(0.0, 1.0), pt(-1.0, 0.0), pt(0.0, -1.0)];
    let d = |i: usize, j: usize| exact_punctured_distance(quad[i], quad[j], Point::ORIGIN).unwrap();
    let exact = four_point_check(d(0, 1), d(0, 2), d(0, 3), d(1, 2), d(1, 3), d(2, 3), 1e-9).unwrap();
    let mut lifts = Vec::new();
    let mut branch = 0.0;
    for z in quad {
        let l = log_lift(z, Point::ORIGIN, branch).unwrap();
        branch = l.y;
        lifts.push(l);
    }
    let e = |i: usize, j: usize| lifts[i].dist(lifts[j]);
    let lifted = four_point_check(e(0, 1), e(0, 2), e(0, 3), e(1, 2), e(1, 3), e(2, 3), 1e-9).unwrap();
    let control = !exact.pass && exact.violation >= PI - 1e-6 && lifted.pass;
    println!(
        "    cylinder quadruple: exact violation {:.9} (>= pi - 1e-6, expected fail: {}), lifted violation {:.3e} ({})",
        exact.violation,
        verdict(!exact.pass),
        lifted.violation,
        verdict(lifted.pass)
    );
    pass &= control;
    line(7, "CAT(0) audit", pass, "disk, square, L-shape audits pass; cylinder quadruple fails exactly and passes lifted");
    assert!(pass);
}

#[test]
fn criterion_08_convergence() {
    let h = 0.02;
    let eps = [0.2, 0.1, 0.05, 0.025];
    let domains = [
        ("disk", Domain::unit_disk()),
        ("square", Domain::square(1.0)),
        ("l-shape", Domain::l_shape()),
        ("half-plane", Domain::upper_half_plane(Rect::new(-2.0, 0.0, 2.0, 4.0))),
    ];
    let mut total = 0;
    let mut good = 0;
    for (k, (name, d)) in domains.iter().enumerate() {
        let region = if d.is_bounded() { d.window() } else { Rect::new(-1.0, 0.3, 1.0, 2.0) };
        let pts = sample_points(d, region, 0.3, 20, 300 + k as u64);
        let rows: Vec<(f64, Vec<Option<f64>>)> = pts
            .chunks(2)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|c| {
                let (a, b) = (c[0], c[1]);
                let reference =
                    closed_form_distance(d, a, b).unwrap_or_else(|| qh_distance(d, a, b, h / 2.0).unwrap().value);
                let errs = eps.iter().map(|&e| smoothed_distance(d, e, a, b, h).ok().map(|r| (r.value - reference).abs())).collect();
                (reference, errs)
            })
            .collect();
        let mut ok_here = 0;
        for (_, errs) in &rows {
            let monotone = errs.iter().all(Option::is_some)
                && errs.windows(2).all(|w| w[1].unwrap() <= 1.1 * w[0].unwrap());
            ok_here += monotone as usize;
        }
        let sample: Vec<String> =
            rows[0].1.iter().map(|e| e.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "mismatch".into())).collect();
        println!("    {name:<10} {ok_here}/{} pairs non-increasing; first pair errors [{}]", rows.len(), sample.join(", "));
        total += rows.len();
        good += ok_here;
    }
    let frac = good as f64 / total as f64;
    let pass = frac >= 0.9;
    line(8, "convergence d_eps -> k", pass, &format!("{good}/{total} pairs non-increasing within 10% as eps halves 0.2 -> 0.025"));
    assert!(pass);
}

/// Move each interior vertex by up to `frac·δ`, keeping segments admissible
/// and `keep` true.
fn perturb<D: Density>(path: &Path, density: &D, domain: &Domain, frac: f64, rng: &mut ChaCha8Rng, keep: impl Fn(&[Point]) -> bool) -> Path {
    let base = path.resample_uniform(16);
    loop {
        let mut v = base.vertices().to_vec();
        let n = v.len();
        for z in &mut v[1..n - 1] {
            let r = frac * domain.delta(*z) * rng.gen::<f64>();
            *z = *z + Point::from_polar(r, rng.gen_range(-PI..PI));
        }
        if v.windows(2).all(|s| density.segment_admissible(s[0], s[1])) && keep(&v) {
            return Path::new(v).unwrap();
        }
    }
}

fn spread(paths: &[Path], spacing: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for p in &paths[1..] {
        worst = worst.max(hausdorff_distance(&paths[0], p, spacing));
    }
    worst
}

#[test]
fn criterion_09_uniqueness() {
    let h = 0.04;
    let mut pass = true;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let simple = [
        ("disk", Domain::unit_disk(), pt(-0.6, 0.2), pt(0.5, -0.5)),
        ("square", Domain::square(1.0), pt(-0.7, -0.6), pt(0.6, 0.7)),
        ("l-shape", Domain::l_shape(), pt(-0.5, 0.6), pt(0.6, -0.5)),
    ];
    for (name, d, a, b) in &simple {
        let solver = QhSolver::new(d, h).unwrap();
        let s = solver.solver();
        let density = QuasihyperbolicDensity::new(d);
        let init = s.initial_path(*a, *b).unwrap();
        let runs: Vec<Path> = (0..5)
            .map(|_| s.refine_path(&perturb(&init, &density, d, 0.3, &mut rng, |_| true), None).unwrap().1)
            .collect();
        let spr = spread(&runs, h / 4.0);
        println!("    {name:<7} 5 restarts: Hausdorff spread {spr:.3e} <= {:.2}: {}", 5.0 * h, verdict(spr <= 5.0 * h));
        pass &= spr <= 5.0 * h;
    }

    let two = punctured(vec![pt(-1.0, 0.0), pt(1.0, 0.0)], 3.0);
    let cs = ClassSolver::new(&two, h).unwrap();
    let density = QuasihyperbolicDensity::new(&two);
    let (a, b) = (pt(0.2, 1.5), pt(-0.3, -1.2));
    for letters in [vec![], vec![1], vec![-2], vec![1, 2]] {
        let word = CrossingWord::new(letters).unwrap();
        let init = cs.lifted_path(a, b, &word).unwrap();
        let runs: Vec<Path> = (0..5)
            .map(|_| {
                let p = perturb(&init, &density, &two, 0.3, &mut rng, |v| cs.cuts().word_of(v) == word);
                cs.refine_in_class(&p).unwrap().1
            })
            .collect();
        let same_class = runs.iter().all(|p| cs.cuts().word_of(p.vertices()) == word);
        let spr = spread(&runs, h / 4.0);
        println!("    two punctures, class {word}: spread {spr:.3e} <= {:.2}, class kept {same_class}", 5.0 * h);
        pass &= spr <= 5.0 * h && same_class;
    }

    let one = punctured(vec![Point::ORIGIN], 3.0);
    let cs1 = ClassSolver::new(&one, h).unwrap();
    let (a, b) = (pt(1.0, 0.0), pt(0.0, 1.5));
    for n in -1..=1 {
        let word = winding_to_word(WindingClass(n), a, b, Point::ORIGIN).unwrap();
        let got = cs1.geodesic_in_class(a, b, &word).unwrap().value;
        let exact = class_distance(a, b, Point::ORIGIN, WindingClass(n)).unwrap();
        let err = (got / exact - 1.0).abs();
        println!("    single puncture n={n:+}: {got:.6} vs {exact:.6}, rel err {err:.2e} <= 2e-2");
        pass &= err <= 0.02;
    }
    let (a, b) = (pt(1.0, 0.0), pt(0.0, E));
    let got = cs1.geodesic_in_class(a, b, &CrossingWord::empty()).unwrap().value;
    let exact = 1.0f64.hypot(PI / 2.0);
    println!("    spiral 1 -> e i: {got:.6} vs {exact:.6}");
    pass &= (got / exact - 1.0).abs() <= 0.02;
    line(9, "geodesic uniqueness", pass, "5 perturbed restarts agree within 5h; class lengths within 2%");
    assert!(pass);
}

fn run_cli(dir: &std::path::Path, tag: &str, threads: &str, args: &[&str], outputs: &[&str]) -> Vec<Vec<u8>> {
    let mut full: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    for o in outputs {
        let (flag, ext) = o.split_once('=').unwrap();
        full.push(format!("--{flag}"));
        full.push(dir.join(format!("{tag}.{ext}")).to_string_lossy().into_owned());
    }
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_qhyp"))
        .args(&full)
        .env("QHYP_THREADS", threads)
        .status()
        .unwrap();
    assert!(status.success(), "qhyp {full:?} failed");
    outputs
        .iter()
        .map(|o| std::fs::read(dir.join(format!("{tag}.{}", o.split_once('=').unwrap().1))).unwrap())
        .collect()
}

#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str], &[&str]); 6] = [
        ("distance", &["--cmd", "distance", "--preset", "l-shape", "--h", "0.05"], &["out=json", "path-out=csv"]),
        (
            "audit",
            &["--cmd", "audit-cat0", "--preset", "disk", "--h", "0.08", "--triangles", "4", "--pairs", "5", "--seed", "3"],
            &["out=json"],
        ),
        ("quadruple", &["--cmd", "audit-4pt", "--preset", "cylinder-quadruple"], &["out=json"]),
        (
            "converge",
            &["--cmd", "converge", "--preset", "square", "--h", "0.08", "--eps", "0.4,0.2", "--samples", "3", "--seed", "5"],
            &["out=csv"],
        ),
        ("mollify", &["--cmd", "mollify", "--preset", "l-shape", "--eps", "0.1"], &["out=json", "grid-out=bin"]),
        ("curvature", &["--cmd", "curvature", "--preset", "disk", "--eps", "0.1"], &["out=json", "grid-out=csv"]),
    ];
    let mut pass = true;
    for (tag, args, outs) in cases {
        let first = run_cli(dir.path(), &format!("{tag}-1"), "1", args, outs);
        let second = run_cli(dir.path(), &format!("{tag}-2"), "3", args, outs);
        let same = first == second && first.iter().all(|b| !b.is_empty());
        println!("    {tag:<10} byte-identical across runs (1 vs 3 threads): {same}");
        pass &= same;
    }
    line(10, "determinism", pass, "repeated CLI runs with a fixed seed produce identical JSON/CSV/grid bytes");
    assert!(pass);
}
