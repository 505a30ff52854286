use proptest::prelude::*;
use qhyp::cat0::{
    cat0_audit, comparison_triangle, four_point_check, four_point_in, AuditConfig, EuclideanPlane, Tripod,
};
use qhyp::{Point, Rect};

fn sorted_pairwise(p: [Point; 3]) -> [f64; 3] {
    let mut d = [p[0].dist(p[1]), p[1].dist(p[2]), p[2].dist(p[0])];
    d.sort_by(f64::total_cmp);
    d
}

fn plane() -> EuclideanPlane {
    EuclideanPlane { region: Rect::new(-3.0, -3.0, 3.0, 3.0) }
}

proptest! {
    #[test]
    fn comparison_reproduces_sides(x in 0.1f64..5.0, y in 0.1f64..5.0, t in 0.0f64..1.0) {
        // third side strictly inside the triangle-inequality range
        let z = (x - y).abs() + t * (x + y - (x - y).abs());
        let c = comparison_triangle(x, y, z).unwrap();
        prop_assert!((c.a.dist(c.b) - x).abs() <= 1e-9);
        prop_assert!((c.b.dist(c.c) - y).abs() <= 1e-9);
        prop_assert!((c.c.dist(c.a) - z).abs() <= 1e-9);
        let p = comparison_triangle(y, z, x).unwrap();
        let (s, q) = (sorted_pairwise([c.a, c.b, c.c]), sorted_pairwise([p.a, p.b, p.c]));
        for k in 0..3 {
            prop_assert!((s[k] - q[k]).abs() <= 1e-9);
        }
    }

    #[test]
    fn euclidean_plane_has_no_violation(seed in any::<u64>()) {
        let cfg = AuditConfig { triangles: 10, pairs_per_triangle: 10, seed, ..AuditConfig::default() };
        let r = cat0_audit(&plane(), None::<&EuclideanPlane>, &cfg).unwrap();
        prop_assert!(r.max_violation <= 1e-12);
        prop_assert!(r.passed());
    }

    #[test]
    fn euclidean_quadruples_pass(c in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 4)) {
        let x = [0, 1, 2, 3].map(|k| Point::new(c[k].0, c[k].1));
        prop_assume!((0..4).all(|i| (i + 1..4).all(|j| x[i].dist(x[j]) > 1e-3)));
        let r = four_point_in(&plane(), x, 1e-9).unwrap();
        prop_assert!(r.pass, "violation {}", r.violation);
    }

    #[test]
    fn tripod_is_cat0(seed in any::<u64>()) {
        let cfg = AuditConfig { triangles: 8, pairs_per_triangle: 8, seed, tolerance: Some(1e-9), ..AuditConfig::default() };
        let r = cat0_audit(&Tripod { leg: 2.0 }, None::<&Tripod>, &cfg).unwrap();
        prop_assert!(r.passed(), "violation {}", r.max_violation);
    }
}

#[test]
fn four_point_flags_non_metric_input() {
    assert!(four_point_check(1.0, 1.0, 5.0, 1.0, 1.0, 1.0, 1e-9).is_err());
}

#[test]
fn refinement_does_not_grow_violations_and_four_point_agrees() {
    use qhyp::cat0::{GeodesicSpace, GeodesicTriangle, QhSpace};
    let d = qhyp::Domain::unit_disk();
    let coarse = QhSpace::new(&d, 0.08).unwrap();
    let fine = QhSpace::new(&d, 0.04).unwrap();
    let cfg = AuditConfig { triangles: 4, pairs_per_triangle: 6, seed: 11, ..AuditConfig::default() };
    let rc = cat0_audit(&coarse, Some(&fine), &cfg).unwrap();
    let rf = cat0_audit(&fine, None::<&QhSpace>, &AuditConfig { tolerance: Some(rc.tolerance), ..cfg }).unwrap();
    assert!(rf.max_violation <= rc.max_violation + rc.tolerance, "{} vs {}", rf.max_violation, rc.max_violation);
    assert!(rc.passed() && rf.passed());
    let w = rc.worst.expect("audited pairs");
    let [a, b, c] = w.vertices;
    let tri = GeodesicTriangle::build(&fine, a, b, c).unwrap();
    let mid = fine.point_at(&tri.sides[1], 0.5 * tri.sides[1].length());
    let r = four_point_in(&fine, [a, b, mid, c], rc.tolerance).unwrap();
    assert_eq!(r.pass, rf.passed(), "four-point violation {}", r.violation);
}
