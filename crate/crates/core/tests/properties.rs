use std::collections::BTreeSet;

use proptest::prelude::*;

use passrate::classifier::{risk, softmax_probs, MlrModel, RiskKind};
use passrate::evaluation::{cohens_kappa, geometric_grid, kfold, stratified_split};
use passrate::geometry::{Point, Polygon};
use passrate::labels::{aggregate_to_three, merge_labels, LabelSet, Rating};

fn rating() -> impl Strategy<Value = Rating> {
    (1usize..=6).prop_map(|c| Rating::from_code(c).unwrap())
}

fn single(r: Rating) -> LabelSet {
    let mut s = LabelSet::new("obs");
    s.ratings.insert(0, r);
    s
}

proptest! {
    #[test]
    fn merge_returns_an_input_and_is_symmetric_off_ties(a in rating(), b in rating()) {
        let ab = merge_labels(&single(a), &single(b)).unwrap().ratings[&0];
        let ba = merge_labels(&single(b), &single(a)).unwrap().ratings[&0];
        prop_assert!(ab == a || ab == b);
        if (2 * a.code()).abs_diff(7) != (2 * b.code()).abs_diff(7) {
            prop_assert_eq!(ab, ba);
        }
    }

    #[test]
    fn aggregation_preserves_order(a in rating(), b in rating()) {
        if a.code() <= b.code() {
            prop_assert!(aggregate_to_three(a).code() <= aggregate_to_three(b).code());
        }
    }

    #[test]
    fn kappa_is_symmetric_and_bounded(pairs in prop::collection::vec((1usize..=3, 1usize..=3), 2..200)) {
        let (a, b): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let ab = cohens_kappa(&a, &b).unwrap();
        let ba = cohens_kappa(&b, &a).unwrap();
        prop_assert!((ab.kappa - ba.kappa).abs() < 1e-12);
        prop_assert!(ab.kappa <= 1.0 + 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p_o));
    }

    #[test]
    fn split_partitions_every_index(y in prop::collection::vec(1usize..=3, 1..150), seed in any::<u64>(), f in 0.05f64..0.6) {
        let (train, test) = stratified_split(&y, f, seed).unwrap();
        let all: BTreeSet<usize> = train.iter().chain(&test).copied().collect();
        prop_assert_eq!(all.len(), y.len());
        prop_assert_eq!(train.len() + test.len(), y.len());
    }

    #[test]
    fn folds_partition_every_index(y in prop::collection::vec(1usize..=3, 10..120), seed in any::<u64>(), folds in 2usize..8) {
        let parts = kfold(&y, folds, seed, true).unwrap();
        prop_assert_eq!(parts.len(), folds);
        let mut seen: Vec<usize> = parts.concat();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..y.len()).collect::<Vec<_>>());
    }

    #[test]
    fn softmax_is_a_distribution(theta in prop::collection::vec(-30.0f64..30.0, 12), x in prop::collection::vec(-5.0f64..5.0, 3)) {
        let mut model = MlrModel::zeros(3, 3);
        model.theta = theta;
        let p = softmax_probs(&model, &x).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn quadratic_risk_dominates_arithmetic(
        rows in prop::collection::vec((prop::collection::vec(-3.0f64..3.0, 2), 1usize..=3), 3..60),
        theta in prop::collection::vec(-2.0f64..2.0, 9),
    ) {
        let (x, y): (Vec<Vec<f64>>, Vec<usize>) = rows.into_iter().unzip();
        let ra = risk(RiskKind::Arithmetic, &x, &y, 3, &theta).unwrap();
        let rq = risk(RiskKind::Quadratic, &x, &y, 3, &theta).unwrap();
        prop_assert!(ra >= 0.0);
        prop_assert!(rq >= ra - 1e-12);
    }

    #[test]
    fn regular_polygon_contains_its_centre(cx in -40.0f64..40.0, cy in -25.0f64..25.0, r in 0.1f64..20.0, n in 3usize..64) {
        let c = Point::new(cx, cy);
        let poly = Polygon::regular(c, r, n);
        prop_assert!(poly.contains(c, 0.0));
        prop_assert!(poly.area() <= std::f64::consts::PI * r * r + 1e-9);
        prop_assert!(poly.is_simple());
    }

    #[test]
    fn geometric_grid_is_increasing(lo_exp in -6.0f64..-1.0, span in 0.5f64..5.0, count in 2usize..20) {
        let lo = 10f64.powf(lo_exp);
        let hi = lo * 10f64.powf(span);
        let g = geometric_grid(lo, hi, count);
        prop_assert_eq!(g.len(), count);
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(*g.last().unwrap(), hi);
    }
}
