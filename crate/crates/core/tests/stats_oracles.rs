//! The statistical protocol against reference implementations.

use std::collections::BTreeMap;

use posthead_core::stats::{
    anova_balanced, anova_two_way_type2, cohens_d_paired, cohens_d_pooled, f_upper, holm,
    one_way_anova, paired_t, strict_dominance, t_two_sided, Direction, RunRow, RunTable,
};
use posthead_core::{LabelMode, Method};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

#[test]
fn t_tails_match_statrs() {
    for df in [1.0, 2.0, 3.0, 7.5, 16.0, 120.0] {
        let d = StudentsT::new(0.0, 1.0, df).unwrap();
        for t in [0.0, 0.1, 0.9, 2.3, 6.0, 25.8] {
            let want = 2.0 * d.sf(t);
            let got = t_two_sided(t, df);
            assert!(
                (got - want).abs() < 1e-10 * want.max(1e-300) + 1e-14,
                "t={t} df={df}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn f_tails_match_statrs() {
    for (d1, d2) in [
        (1.0, 16.0),
        (3.0, 16.0),
        (2.0, 6.0),
        (5.0, 2.0),
        (12.0, 30.0),
    ] {
        let d = FisherSnedecor::new(d1, d2).unwrap();
        for f in [0.0, 0.2, 1.0, 3.3, 12.0, 400.0] {
            let want = d.sf(f);
            let got = f_upper(f, d1, d2);
            assert!(
                (got - want).abs() < 1e-9 * want.max(1e-300) + 1e-14,
                "F={f} ({d1},{d2}): {got} vs {want}"
            );
        }
    }
}

/// Sums of squares computed straight from their definitions.
fn direct_ss(cells: &[Vec<Vec<f64>>]) -> [f64; 5] {
    let a = cells.len();
    let b = cells[0].len();
    let r = cells[0][0].len();
    let all: Vec<f64> = cells.iter().flatten().flatten().copied().collect();
    let grand = all.iter().sum::<f64>() / all.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let row_mean: Vec<f64> = cells.iter().map(|row| mean(&row.concat())).collect();
    let col_mean: Vec<f64> = (0..b)
        .map(|j| {
            mean(
                &cells
                    .iter()
                    .flat_map(|row| row[j].clone())
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let mut ss_a = 0.0;
    let mut ss_b = 0.0;
    let mut ss_ab = 0.0;
    let mut ss_e = 0.0;
    for i in 0..a {
        ss_a += (b * r) as f64 * (row_mean[i] - grand).powi(2);
        for j in 0..b {
            let m = mean(&cells[i][j]);
            if i == 0 {
                ss_b += (a * r) as f64 * (col_mean[j] - grand).powi(2);
            }
            ss_ab += r as f64 * (m - row_mean[i] - col_mean[j] + grand).powi(2);
            ss_e += cells[i][j].iter().map(|v| (v - m).powi(2)).sum::<f64>();
        }
    }
    let ss_t = all.iter().map(|v| (v - grand).powi(2)).sum();
    [ss_a, ss_b, ss_ab, ss_e, ss_t]
}

#[test]
fn balanced_anova_matches_direct_sums_of_squares() {
    let mut state = 12345u64;
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..50 {
        let cells: Vec<Vec<Vec<f64>>> = (0..4)
            .map(|i| {
                (0..2)
                    .map(|j| {
                        (0..3)
                            .map(|_| next() + 0.3 * i as f64 - 0.2 * j as f64)
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let got = anova_balanced(&cells).unwrap();
        let want = direct_ss(&cells);
        assert_eq!(
            (
                got.method.df,
                got.label.df,
                got.interaction.df,
                got.residual_df
            ),
            (3, 1, 3, 16)
        );
        for (g, w) in [
            got.method.ss,
            got.label.ss,
            got.interaction.ss,
            got.residual_ss,
            got.total_ss,
        ]
        .iter()
        .zip(want)
        {
            assert!((g - w).abs() < 1e-9, "{g} vs {w}");
        }
        let f = (want[0] / 3.0) / (want[3] / 16.0);
        assert!((got.method.f.unwrap() - f).abs() < 1e-9 * f.max(1.0));
        let d = FisherSnedecor::new(3.0, 16.0).unwrap();
        assert!((got.method.p.unwrap() - d.sf(f)).abs() < 1e-9);
    }
}

#[test]
fn run_table_anova_orders_by_seed() {
    let mut rows = Vec::new();
    for (mi, m) in Method::ALL.iter().enumerate() {
        for (li, l) in LabelMode::ALL.iter().enumerate() {
            for (si, s) in [44u64, 42, 43].iter().enumerate() {
                rows.push(RunRow {
                    method: *m,
                    label_mode: *l,
                    seed: *s,
                    value: (mi * 7 + li * 3 + si) as f64 * 0.1,
                });
            }
        }
    }
    let shuffled = RunTable {
        rows: rows.iter().rev().copied().collect(),
    };
    let a = anova_two_way_type2(&RunTable { rows }).unwrap();
    let b = anova_two_way_type2(&shuffled).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.residual_df, 16);
}

#[test]
fn one_way_anova_matches_definition() {
    let groups = vec![
        vec![1.0, 2.0, 3.0],
        vec![2.0, 4.0, 6.0],
        vec![0.5, 0.7, 0.2],
    ];
    let a = one_way_anova(&groups).unwrap();
    let all: Vec<f64> = groups.concat();
    let g = all.iter().sum::<f64>() / 9.0;
    let ssb: f64 = groups
        .iter()
        .map(|v| 3.0 * (v.iter().sum::<f64>() / 3.0 - g).powi(2))
        .sum();
    let ssw: f64 = groups
        .iter()
        .map(|v| {
            let m = v.iter().sum::<f64>() / 3.0;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>()
        })
        .sum();
    assert!((a.ss_between - ssb).abs() < 1e-12 && (a.ss_within - ssw).abs() < 1e-12);
    let f = (ssb / 2.0) / (ssw / 6.0);
    assert!((a.f.unwrap() - f).abs() < 1e-12);
    assert!((a.p.unwrap() - FisherSnedecor::new(2.0, 6.0).unwrap().sf(f)).abs() < 1e-10);
}

#[test]
fn paired_t_matches_statrs() {
    let a = [0.12, 0.15, 0.11, 0.19];
    let b = [0.10, 0.16, 0.07, 0.12];
    let t = paired_t(&a, &b).unwrap();
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let m = d.iter().sum::<f64>() / 4.0;
    let sd = (d.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 3.0).sqrt();
    let want_t = m / (sd / 2.0);
    assert!((t.t.unwrap() - want_t).abs() < 1e-12);
    let p = 2.0 * StudentsT::new(0.0, 1.0, 3.0).unwrap().sf(want_t.abs());
    assert!((t.p.unwrap() - p).abs() < 1e-10);
    assert!((cohens_d_paired(&a, &b).unwrap() - m / sd).abs() < 1e-12);
    let pooled = ((variance(&a) + variance(&b)) / 2.0).sqrt();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!((cohens_d_pooled(&a, &b).unwrap() - (mean(&a) - mean(&b)) / pooled).abs() < 1e-12);
}

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

#[test]
fn holm_reference_case() {
    let adj = holm(&[0.01, 0.02, 0.04]);
    for (a, w) in adj.iter().zip([0.03, 0.04, 0.04]) {
        assert!((a - w).abs() < 1e-15);
    }
    let adj = holm(&[0.04, 0.01, 0.02]);
    for (a, w) in adj.iter().zip([0.04, 0.03, 0.04]) {
        assert!((a - w).abs() < 1e-15);
    }
}

#[test]
fn dominance_truth_table() {
    let base = |v: &[(&str, [f64; 3])]| -> BTreeMap<String, Vec<f64>> {
        v.iter().map(|(k, x)| (k.to_string(), x.to_vec())).collect()
    };
    let proposed = [0.10, 0.11, 0.12];
    // Large, consistent improvements over every baseline.
    let clear = base(&[
        ("b0", [0.20, 0.215, 0.22]),
        ("b1", [0.30, 0.305, 0.32]),
        ("b2", [0.25, 0.262, 0.27]),
    ]);
    assert!(
        strict_dominance(&proposed, &clear, Direction::LowerIsBetter, 0.05)
            .unwrap()
            .dominates
    );
    // Same data, wrong direction.
    assert!(
        !strict_dominance(&proposed, &clear, Direction::HigherIsBetter, 0.05)
            .unwrap()
            .dominates
    );
    // One seed fails to improve on one baseline.
    let sign = base(&[("b0", [0.20, 0.21, 0.11]), ("b2", [0.25, 0.26, 0.27])]);
    let d = strict_dominance(&proposed, &sign, Direction::LowerIsBetter, 0.05).unwrap();
    assert!(!d.dominates && !d.evidence[0].all_improve);
    // Every sign improves but the differences are noisy.
    let noisy = base(&[("b0", [0.101, 0.30, 0.125])]);
    let d = strict_dominance(&proposed, &noisy, Direction::LowerIsBetter, 0.05).unwrap();
    assert!(d.evidence[0].all_improve && !d.evidence[0].significant && !d.dominates);
    // No baselines: nothing to dominate.
    assert!(
        !strict_dominance(&proposed, &BTreeMap::new(), Direction::LowerIsBetter, 0.05)
            .unwrap()
            .dominates
    );
}
