use proptest::prelude::*;

use qsf_core::crack::{capped_hausdorff, SegmentSet};

fn polyline() -> impl Strategy<Value = SegmentSet> {
    prop::collection::vec(prop::array::uniform2(0.0..1.0f64), 2..6).prop_map(|p| SegmentSet::polyline(&p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_a_capped_metric(a in polyline(), b in polyline(), c in polyline()) {
        let (ab, ba) = (capped_hausdorff(&a, &b), capped_hausdorff(&b, &a));
        prop_assert!((ab - ba).abs() <= 1e-9);
        prop_assert!(capped_hausdorff(&a, &a) <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&ab));
        let ac = capped_hausdorff(&a, &c);
        let cb = capped_hausdorff(&c, &b);
        prop_assert!(ab <= ac + cb + 1e-6, "{ab} > {ac} + {cb}");
    }

    #[test]
    fn empty_set_is_at_distance_one(a in polyline()) {
        let empty = SegmentSet::polyline(&[]);
        prop_assert_eq!(capped_hausdorff(&a, &empty), 1.0);
        prop_assert_eq!(capped_hausdorff(&empty, &empty), 0.0);
    }

    #[test]
    fn translation_moves_by_the_shift(a in polyline(), dx in 0.0..0.3f64) {
        let pts: Vec<[f64; 2]> = (0..=8).map(|k| [k as f64 / 8.0, 0.2]).collect();
        let shifted: Vec<[f64; 2]> = pts.iter().map(|p| [p[0], p[1] + dx]).collect();
        let d = capped_hausdorff(&SegmentSet::polyline(&pts), &SegmentSet::polyline(&shifted));
        prop_assert!((d - dx).abs() <= 1e-6);
        prop_assert!(capped_hausdorff(&a, &a) <= 1e-9);
    }
}
