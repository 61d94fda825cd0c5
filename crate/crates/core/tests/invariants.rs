//! Property tests over randomized inputs.

mod common;

use common::{normalize, record, record_from_members};
use posthead_core::metrics::{auroc, brier_multiclass, ece, jsd_bits, kl_nats, spearman, tv};
use posthead_core::model::{log_softmax, softmax};
use posthead_core::stats::holm;
use posthead_core::uncertainty::decompose;
use proptest::prelude::*;

fn dist(c: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, c).prop_filter_map("nonzero mass", |w| {
        (w.iter().sum::<f64>() > 1e-6).then(|| normalize(&w))
    })
}

fn member_logits() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (2usize..8, 1usize..12)
        .prop_flat_map(|(c, m)| (prop::collection::vec(-20.0f64..20.0, c * m), Just(c)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn decomposition_is_exact_and_epistemic_nonnegative((logits, c) in member_logits()) {
        let r = record_from_members(0, &logits, c);
        prop_assert!((r.h_tot - r.h_ale - r.h_epi).abs() <= 1e-9);
        prop_assert!(r.h_epi >= -1e-12);
        prop_assert!(r.h_tot <= (c as f64).ln() + 1e-12);
        prop_assert!((r.mean_dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_member_has_zero_epistemic_entropy(logits in prop::collection::vec(-30.0f64..30.0, 2..10)) {
        let c = logits.len();
        let r = record_from_members(0, &logits, c);
        prop_assert_eq!(r.h_epi, 0.0);
    }

    #[test]
    fn epistemic_entropy_ignores_member_order((logits, c) in member_logits()) {
        let mut rows: Vec<Vec<f64>> = logits.chunks(c).map(|r| softmax(r)).collect();
        let a = decompose(&rows.concat(), c);
        rows.reverse();
        let b = decompose(&rows.concat(), c);
        prop_assert!((a.h_epi - b.h_epi).abs() < 1e-12);
    }

    #[test]
    fn softmax_is_shift_invariant(z in prop::collection::vec(-50.0f64..50.0, 2..12), s in -100.0f64..100.0) {
        let shifted: Vec<f64> = z.iter().map(|v| v + s).collect();
        for (a, b) in softmax(&z).iter().zip(softmax(&shifted)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in log_softmax(&z).iter().zip(log_softmax(&shifted)) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn jsd_is_symmetric_and_bounded(q in dist(5), p in dist(5)) {
        let a = jsd_bits(&q, &p);
        prop_assert!((a - jsd_bits(&p, &q)).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        prop_assert!(jsd_bits(&q, &q) < 1e-12);
        prop_assert!(kl_nats(&q, &p) >= -1e-12);
        let t = tv(&q, &p);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&t));
    }

    #[test]
    fn auroc_is_invariant_under_monotone_maps(
        s in prop::collection::vec(-5.0f64..5.0, 2..40),
        flags in prop::collection::vec(any::<bool>(), 40),
    ) {
        let correct = &flags[..s.len()];
        let mapped: Vec<f64> = s.iter().map(|v| v.exp() * 3.0 + 1.0).collect();
        prop_assert_eq!(auroc(&s, correct), auroc(&mapped, correct));
    }

    #[test]
    fn spearman_is_invariant_under_monotone_maps(
        pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..30),
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let xm: Vec<f64> = x.iter().map(|v| v.powi(3) - 7.0).collect();
        match (spearman(&x, &y), spearman(&xm, &y)) {
            (Some(a), Some(b)) => {
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&a));
            }
            (None, None) => {}
            other => prop_assert!(false, "definedness differs: {:?}", other),
        }
    }

    #[test]
    fn holm_is_monotone_and_dominates_raw(p in prop::collection::vec(0.0f64..1.0, 1..12)) {
        let adj = holm(&p);
        prop_assert_eq!(adj.len(), p.len());
        let mut order: Vec<usize> = (0..p.len()).collect();
        order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
        for w in order.windows(2) {
            prop_assert!(adj[w[0]] <= adj[w[1]] + 1e-15);
        }
        for (a, r) in adj.iter().zip(&p) {
            prop_assert!(*a >= *r - 1e-15 && *a <= 1.0);
        }
    }

    #[test]
    fn calibration_metrics_ignore_example_order(
        rows in prop::collection::vec((dist(4), 0usize..4), 1..40),
        rot in 0usize..40,
    ) {
        let records: Vec<_> = rows.iter().enumerate().map(|(i, (p, _))| record(i, p)).collect();
        let labels: Vec<usize> = rows.iter().map(|r| r.1).collect();
        let k = rot % records.len();
        let mut r2 = records.clone();
        let mut l2 = labels.clone();
        r2.rotate_left(k);
        l2.rotate_left(k);
        prop_assert!((ece(&records, &labels, 15) - ece(&r2, &l2, 15)).abs() < 1e-12);
        prop_assert!((brier_multiclass(&records, &labels) - brier_multiclass(&r2, &l2)).abs() < 1e-12);
    }
}
