use proptest::prelude::*;
use qhyp::covering::{
    class_distance, exact_punctured_distance, exp_path, lift_path, lift_vertices, spiral_geodesic, word_to_winding,
    winding_to_word, CrossingWord, CutSystem, WindingClass,
};
use qhyp::geometry::point_segment_distance;
use qhyp::metric::qh_length;
use qhyp::{Domain, Path, Point, Rect};

fn annulus_point() -> impl Strategy<Value = Point> {
    (0.2f64.ln()..5f64.ln(), -3.2f64..3.2).prop_map(|(r, t)| Point::from_polar(r.exp(), t))
}

fn plane() -> Domain {
    Domain::punctured_plane(vec![Point::ORIGIN], Rect::new(-6.0, -6.0, 6.0, 6.0)).unwrap()
}

fn clear_polyline() -> impl Strategy<Value = Path> {
    prop::collection::vec(annulus_point(), 2..8)
        .prop_filter("segments avoid the puncture", |v| {
            v.windows(2).all(|s| point_segment_distance(Point::ORIGIN, s[0], s[1]) > 0.05)
        })
        .prop_map(|v| Path::new(v).unwrap())
}

proptest! {
    #[test]
    fn min_over_classes_is_exact(a in annulus_point(), b in annulus_point()) {
        let exact = exact_punctured_distance(a, b, Point::ORIGIN).unwrap();
        let best = (-2..=2)
            .map(|n| class_distance(a, b, Point::ORIGIN, WindingClass(n)).unwrap())
            .fold(f64::INFINITY, f64::min);
        prop_assert!((best - exact).abs() <= 1e-12 * exact.max(1.0));
        prop_assert!((class_distance(a, b, Point::ORIGIN, WindingClass(0)).unwrap() - exact).abs() <= 1e-12 * exact.max(1.0));
    }

    #[test]
    fn lift_is_a_local_isometry(path in clear_polyline()) {
        let lifted = lift_path(&path, Point::ORIGIN, 0.0).unwrap();
        let qh = qh_length(&plane(), &path).unwrap();
        prop_assert!((lifted.euclidean_length() / qh - 1.0).abs() <= 1e-6, "{} vs {}", lifted.euclidean_length(), qh);
    }

    #[test]
    fn lift_round_trips(path in clear_polyline(), branch in -20.0f64..20.0) {
        let back = exp_path(&lift_vertices(&path, Point::ORIGIN, branch).unwrap(), Point::ORIGIN).unwrap();
        for (p, q) in path.vertices().iter().zip(back.vertices()) {
            prop_assert!(p.dist(*q) <= 1e-12 * p.norm().max(1.0));
        }
        let dense = exp_path(&lift_path(&path, Point::ORIGIN, branch).unwrap(), Point::ORIGIN).unwrap();
        prop_assert!(dense.vertices().iter().all(|&z| path.distance_to(z) <= 1e-12 * z.norm().max(1.0)));
    }

    #[test]
    fn lift_is_functorial(p in clear_polyline(), q in clear_polyline()) {
        let joined = Path::new([p.vertices(), &[q.first()][..]].concat())
            .unwrap();
        prop_assume!(joined.vertices().windows(2).all(|s| point_segment_distance(Point::ORIGIN, s[0], s[1]) > 0.05));
        let whole = lift_vertices(&joined, Point::ORIGIN, 0.0).unwrap();
        let first = lift_vertices(&p, Point::ORIGIN, 0.0).unwrap();
        let tail = lift_vertices(&Path::segment(p.last(), q.first()), Point::ORIGIN, first.last().y).unwrap();
        prop_assert!(whole.last().dist(tail.last()) <= 1e-12);
    }

    #[test]
    fn winding_word_round_trip(a in annulus_point(), b in annulus_point(), n in -3i64..=3) {
        let w = winding_to_word(WindingClass(n), a, b, Point::ORIGIN).unwrap();
        prop_assert_eq!(word_to_winding(&w, a, b, Point::ORIGIN).unwrap(), WindingClass(n));
        let s = spiral_geodesic(a, b, Point::ORIGIN, WindingClass(n), 4096).unwrap();
        let exact = class_distance(a, b, Point::ORIGIN, WindingClass(n)).unwrap();
        prop_assume!(exact > 1e-3);
        prop_assert!((qh_length(&plane(), &s).unwrap() / exact - 1.0).abs() <= 1e-4);
    }

    #[test]
    fn words_reduce_and_serialize(letters in prop::collection::vec(prop_oneof![Just(1), Just(-1), Just(2), Just(-2)], 0..12)) {
        let w = CrossingWord::reduce(letters.iter().copied());
        prop_assert!(w.letters().windows(2).all(|p| p[0] != -p[1]));
        prop_assert_eq!(CrossingWord::reduce(w.letters().iter().copied()), w.clone());
        let json = serde_json::to_string(&w).unwrap();
        prop_assert_eq!(serde_json::from_str::<CrossingWord>(&json).unwrap(), w.clone());
        prop_assert_eq!(CrossingWord::parse(&w.to_string()).unwrap(), w.clone());
        let mut id = w.clone();
        id.append(w.inverse().letters());
        prop_assert!(id.is_empty());
    }

    #[test]
    fn crossing_words_are_additive(v in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 3..10), split in 1usize..8) {
        let pts: Vec<Point> = v.iter().map(|&(x, y)| Point::new(x, y)).collect();
        let k = split.min(pts.len() - 1);
        let cuts = CutSystem::new(&[Point::new(-1.0, 0.0), Point::new(1.0, 0.5)]);
        let mut head = cuts.word_of(&pts[..=k]);
        head.append(cuts.word_of(&pts[k..]).letters());
        prop_assert_eq!(head, cuts.word_of(&pts));
    }
}
