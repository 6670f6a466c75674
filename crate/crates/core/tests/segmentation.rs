mod common;

use atree::bench::{gen_linear, gen_periodic, gen_step, Dataset};
use atree::cost_model::profile_segments;
use atree::segmentation::{
    max_deviation, max_error, non_linearity_ratio, optimal_segmentation, optimal_segmentation_capped,
    points_from_keys, segment_keys, shrinking_cone, validate_segment, Cone, ShrinkingCone,
};
use atree::{Error, ErrorThreshold, FloatKey, Point, Segment};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn e(v: u64) -> ErrorThreshold {
    ErrorThreshold::new(v)
}

/// Sorted keys built from gaps; zero gaps make duplicates.
fn keys_strategy(max_len: usize) -> impl Strategy<Value = Vec<u64>> {
    (1..max_len, 1u64..5000).prop_flat_map(|(n, max_gap)| {
        proptest::collection::vec(prop_oneof![2 => Just(0u64), 8 => 0..=max_gap], n).prop_map(|gaps| {
            let mut k = 0u64;
            gaps.into_iter()
                .map(|g| {
                    k += g;
                    k
                })
                .collect()
        })
    })
}

fn covered<'a, K>(points: &'a [Point<K>], seg: &Segment<K>) -> &'a [Point<K>] {
    let lo = (seg.start_loc - points[0].loc) as usize;
    &points[lo..lo + seg.n_locs as usize]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn greedy_segments_respect_error(keys in keys_strategy(600), err in prop_oneof![Just(0u64), Just(1), Just(2), Just(10), Just(100), 0u64..300]) {
        let points = points_from_keys(keys, 0);
        let segs = shrinking_cone(&points, e(err)).unwrap();
        prop_assert_eq!(segs.iter().map(|s| s.n_locs).sum::<u64>(), points.len() as u64);
        for s in &segs {
            let pts = covered(&points, s);
            prop_assert_eq!(pts[0].key, s.start_key);
            prop_assert!(validate_segment(pts, s, e(err)));
            prop_assert!(common::brute_force_max_dev(pts, s) <= err as f64 + 1e-6);
        }
        prop_assert!(max_error(&points, &segs).unwrap() <= err);
    }

    #[test]
    fn non_trailing_segments_are_long(keys in keys_strategy(600), err in 0u64..60) {
        let points = points_from_keys(keys, 0);
        let segs = shrinking_cone(&points, e(err)).unwrap();
        for s in &segs[..segs.len() - 1] {
            prop_assert!(s.n_locs > err);
        }
    }

    #[test]
    fn cone_only_narrows(keys in keys_strategy(300), err in 0u64..50) {
        let points = points_from_keys(keys, 0);
        let mut cone = Cone::new(points[0]);
        for &p in &points[1..] {
            let (hi, lo) = (cone.sl_high(), cone.sl_low());
            if !cone.try_extend(p, err as f64) {
                cone = Cone::new(p);
                continue;
            }
            prop_assert!(cone.sl_high() <= hi);
            prop_assert!(cone.sl_low() >= lo);
            prop_assert!(cone.sl_low() <= cone.sl_high());
        }
    }

    #[test]
    fn segmentation_is_deterministic(keys in keys_strategy(400), err in 0u64..100) {
        let points = points_from_keys(keys.clone(), 0);
        prop_assert_eq!(shrinking_cone(&points, e(err)).unwrap(), shrinking_cone(&points, e(err)).unwrap());
        prop_assert_eq!(segment_keys(&keys, e(err)).unwrap(), segment_keys(&keys, e(err)).unwrap());
    }

    #[test]
    fn streaming_matches_batch(keys in keys_strategy(400), err in 0u64..100) {
        let points = points_from_keys(keys, 7);
        let mut sc = ShrinkingCone::new(e(err));
        let mut out = Vec::new();
        for &p in &points {
            out.extend(sc.push(p).unwrap());
        }
        out.extend(sc.finish());
        prop_assert_eq!(out, shrinking_cone(&points, e(err)).unwrap());
    }

    #[test]
    fn index_segmentation_covers_every_entry(keys in keys_strategy(600), err in 0u64..100) {
        let segs = segment_keys(&keys, e(err)).unwrap();
        prop_assert_eq!(segs.iter().map(|s| s.n_locs).sum::<u64>(), keys.len() as u64);
        for w in segs.windows(2) {
            prop_assert_eq!(w[0].end_loc(), w[1].start_loc);
            prop_assert!(w[0].end_key < w[1].start_key);
        }
        // First occurrences are what lookups search for.
        let first: Vec<Point<u64>> = keys
            .iter()
            .enumerate()
            .filter(|&(i, k)| i == 0 || keys[i - 1] != *k)
            .map(|(i, &k)| Point::new(k, i as u64))
            .collect();
        for s in &segs {
            let pts: Vec<_> = first.iter().copied().filter(|p| p.loc >= s.start_loc && p.loc < s.end_loc()).collect();
            prop_assert!(common::brute_force_max_dev(&pts, s) <= err as f64 + 1e-6);
        }
    }

    #[test]
    fn optimal_never_loses(keys in keys_strategy(250), err in 0u64..40) {
        let points = points_from_keys(keys, 0);
        let greedy = shrinking_cone(&points, e(err)).unwrap();
        let optimal = optimal_segmentation(&points, e(err)).unwrap();
        prop_assert!(optimal.len() <= greedy.len());
        for s in &optimal {
            prop_assert!(validate_segment(covered(&points, s), s, e(err)));
        }
        prop_assert!(max_error(&points, &optimal).unwrap() <= err);
    }

    #[test]
    fn float_keys_respect_error(keys in keys_strategy(300), err in 0u64..50, scale in 0.001f64..1000.0) {
        let points = common::float_points(&keys, scale);
        let segs = shrinking_cone(&points, e(err)).unwrap();
        for s in &segs {
            prop_assert!(validate_segment(covered(&points, s), s, e(err)));
        }
    }
}

#[test]
fn validate_agrees_with_per_point_recheck() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for _ in 0..500 {
        let keys = common::fuzz_keys(&mut rng, 50);
        let points = points_from_keys(keys, 0);
        let err = e(rng.random_range(0..20));
        let first = points[0];
        let last = points[49];
        let dx = last.key.saturating_sub(first.key).max(1) as f64;
        let seg = Segment {
            start_key: first.key,
            start_loc: 0,
            slope: 49.0 / dx * rng.random_range(0.5..1.5),
            n_locs: 50,
            end_key: last.key,
        };
        let brute = points.iter().all(|p| {
            let pred = (p.key - first.key) as f64 * seg.slope;
            (pred - p.loc as f64).abs() <= err.as_f64() + 1e-6
        });
        assert_eq!(validate_segment(&points, &seg, err), brute);
    }
}

#[test]
fn line_through_endpoints_rejects_point_off_it() {
    // The line (0,0) -> (100,5) predicts 0.2 for key 4, which sits at 4.
    let points = points_from_keys([0u64, 1, 2, 3, 4, 100], 0);
    let seg = Segment {
        start_key: 0,
        start_loc: 0,
        slope: 0.05,
        n_locs: 6,
        end_key: 100,
    };
    assert!(!validate_segment(&points, &seg, e(3)));
    assert!(validate_segment(&points, &seg, e(4)));
    let dev = max_deviation(&points, &[seg]).unwrap();
    assert!((dev - 3.8).abs() < 1e-12, "{dev}");
    assert_eq!(max_error(&points, &[seg]).unwrap(), 3);
}

#[test]
fn middle_point_deviation_is_exact() {
    // Line from (0,0) to (100,2): slope 0.02, middle point (40,1) predicted 0.8.
    let points = vec![Point::new(0u64, 0), Point::new(40, 1), Point::new(100, 2)];
    let seg = Segment {
        start_key: 0,
        start_loc: 0,
        slope: 0.02,
        n_locs: 3,
        end_key: 100,
    };
    let dev = max_deviation(&points, &[seg]).unwrap();
    assert!((dev - 0.2).abs() < 1e-12, "{dev}");
    assert_eq!(max_error(&points, &[seg]).unwrap(), 0);
}

#[test]
fn linear_data_is_one_segment() {
    let points: Vec<_> = (0..1000u64).map(|i| Point::new(i, i)).collect();
    let segs = shrinking_cone(&points, e(0)).unwrap();
    assert_eq!(segs.len(), 1);
    assert_eq!(segs[0].slope, 1.0);
    assert_eq!(optimal_segmentation(&points, e(0)).unwrap().len(), 1);
}

#[test]
fn plateaus_match_the_optimal_count() {
    let keys: Vec<u64> = (0..1000u64).map(|i| (i / 100) * 1_000_000 + i % 100).collect();
    let points = points_from_keys(keys, 0);
    let greedy = shrinking_cone(&points, e(10)).unwrap();
    let optimal = optimal_segmentation(&points, e(10)).unwrap();
    assert_eq!(greedy.len(), 10);
    assert_eq!(optimal.len(), greedy.len());
}

#[test]
fn greedy_anchors_at_plateau_starts() {
    // Between half a plateau and a full one, a line through plateau middles
    // fits, but every greedy cone opens at a plateau's first key.
    let d = gen_step(10_000, 100, 1_000_000, 2).unwrap();
    let points = d.points();
    let greedy = shrinking_cone(&points, e(64)).unwrap();
    let optimal = optimal_segmentation(&points, e(64)).unwrap();
    assert_eq!(greedy.len(), 100);
    assert!(optimal.len() <= 3, "{}", optimal.len());
}

#[test]
fn empty_and_malformed_inputs() {
    let none: Vec<Point<u64>> = Vec::new();
    assert!(matches!(shrinking_cone(&none, e(1)), Err(Error::EmptyInput)));
    assert!(matches!(optimal_segmentation(&none, e(1)), Err(Error::EmptyInput)));
    let backwards = vec![Point::new(5u64, 0), Point::new(4, 1)];
    assert!(matches!(shrinking_cone(&backwards, e(1)), Err(Error::MalformedInput(_))));
    let stalled = vec![Point::new(1u64, 3), Point::new(2, 3)];
    assert!(matches!(shrinking_cone(&stalled, e(1)), Err(Error::MalformedInput(_))));
    let nan = vec![Point::new(FloatKey::from(f64::NAN), 0)];
    assert!(matches!(shrinking_cone(&nan, e(1)), Err(Error::MalformedInput(_))));
    let big = points_from_keys(0..20u64, 0);
    assert!(matches!(
        optimal_segmentation_capped(&big, e(1), 10),
        Err(Error::Capacity { len: 20, cap: 10 })
    ));
}

#[test]
fn origin_duplicates_within_error_share_a_segment() {
    let keys = vec![5u64, 5, 5, 6, 7];
    let points = points_from_keys(keys, 0);
    assert_eq!(shrinking_cone(&points, e(2)).unwrap().len(), 1);
    // Three copies of the origin key need error 2; at error 1 the third opens
    // a new segment.
    assert!(shrinking_cone(&points, e(1)).unwrap().len() > 1);
}

fn ratio(d: &Dataset<u64>, err: u64) -> f64 {
    non_linearity_ratio(&d.points(), e(err)).unwrap()
}

#[test]
fn plateau_data_is_the_worst_case() {
    let n = 20_000u64;
    for err in [10u64, 50, 100] {
        // A plateau of error + 2 locations cannot reach the next plateau, so
        // each costs one segment and the ratio is (e + 1) / (e + 2).
        let step = err + 2;
        let d = gen_step(n as usize, step as usize, 1_000_000_000, 3).unwrap();
        let segs = shrinking_cone(&d.points(), e(err)).unwrap().len() as u64;
        assert_eq!(segs, n.div_ceil(step), "error {err}");
        let expect = n.div_ceil(step) as f64 / n.div_ceil(err + 1) as f64;
        let r = ratio(&d, err);
        assert!((r - expect).abs() < 1e-12 && r > 0.9, "error {err}: ratio {r}");
    }
    // With exactly error + 1 locations per plateau the cone can take the
    // next plateau's first key, so the count drops below one per plateau.
    let d = gen_step(n as usize, 101, 1_000_000_000, 3).unwrap();
    let segs = shrinking_cone(&d.points(), e(100)).unwrap().len() as u64;
    assert!(segs < n.div_ceil(101), "{segs}");
}

#[test]
fn generator_ratios_order_by_shape() {
    let n = 100_000;
    // Plateaus just wider than the error, the worst case at that error.
    let step = ratio(&gen_step(n, 102, 1_000_000, 4).unwrap(), 100);
    let periodic = ratio(&gen_periodic(n, 1000, 100, 5).unwrap(), 100);
    let linear = ratio(&gen_linear(n, 6).unwrap(), 100);
    assert!(step > 2.0 * periodic, "step {step} periodic {periodic}");
    assert!(periodic > 2.0 * linear, "periodic {periodic} linear {linear}");
}

#[test]
fn profiles_do_not_grow_with_error() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let candidates: Vec<_> = [0u64, 1, 2, 4, 10, 32, 100, 316, 1000].map(e).to_vec();
    let mut grew = 0;
    for _ in 0..100 {
        let n = rng.random_range(100..5000);
        let points = points_from_keys(common::fuzz_keys(&mut rng, n), 0);
        let profile = profile_segments(&points, &candidates).unwrap();
        if !profile.is_non_increasing() {
            grew += 1;
        }
        let first = profile.segments(e(0)).unwrap();
        let last = profile.segments(e(1000)).unwrap();
        assert!(last <= first);
    }
    assert_eq!(grew, 0);
}
