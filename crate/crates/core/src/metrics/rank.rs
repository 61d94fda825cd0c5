//! Rank correlation and the per-category aleatoric/disagreement analysis.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::math;
use crate::rng::Rng;
use crate::stats::bootstrap::percentile_interval;
use crate::uncertainty::PredictiveRecord;

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; absent when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let mx = math::mean(x);
    let my = math::mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / math::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Spearman correlation: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: usize,
    pub support: usize,
    pub mean_h_ale_nats: Option<f64>,
    pub disagreement_rate: Option<f64>,
    pub qualifies: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCorrelation {
    /// Absent with fewer than three qualifying categories.
    pub rho: Option<f64>,
    /// Number of qualifying categories.
    pub k: usize,
    pub table: Vec<CategoryRow>,
}

impl CategoryCorrelation {
    /// `(mean aleatoric entropy, disagreement rate)` of qualifying categories.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.table
            .iter()
            .filter(|r| r.qualifies)
            .filter_map(|r| Some((r.mean_h_ale_nats?, r.disagreement_rate?)))
            .collect()
    }
}

/// Group records by hard label and correlate each qualifying category's
/// mean aleatoric entropy with its disagreement rate.
pub fn spearman_per_category(
    records: &[PredictiveRecord],
    hard_labels: &[usize],
    disagreement: &[Option<f64>],
    min_support: usize,
) -> CategoryCorrelation {
    let classes = disagreement.len();
    let mut sums = vec![0.0; classes];
    let mut counts = vec![0usize; classes];
    for (r, &y) in records.iter().zip(hard_labels) {
        sums[y] += r.h_ale;
        counts[y] += 1;
    }
    let table: Vec<CategoryRow> = (0..classes)
        .map(|c| {
            let mean = (counts[c] > 0).then(|| sums[c] / counts[c] as f64);
            CategoryRow {
                category: c,
                support: counts[c],
                mean_h_ale_nats: mean,
                disagreement_rate: disagreement[c],
                qualifies: counts[c] >= min_support.max(1) && disagreement[c].is_some(),
            }
        })
        .collect();
    let mut out = CategoryCorrelation {
        rho: None,
        k: 0,
        table,
    };
    let pairs = out.pairs();
    out.k = pairs.len();
    if pairs.len() >= 3 {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        out.rho = spearman(&x, &y);
    }
    out
}

/// Percentile bootstrap over category pairs. Resamples whose correlation is
/// undefined (a constant side) are skipped; absent if all are.
pub fn bootstrap_rho_ci(pairs: &[(f64, f64)], n_boot: usize, rng: &mut Rng) -> Option<(f64, f64)> {
    let k = pairs.len();
    if k < 3 {
        return None;
    }
    let mut stats = Vec::with_capacity(n_boot);
    let mut x = vec![0.0; k];
    let mut y = vec![0.0; k];
    for _ in 0..n_boot {
        for j in 0..k {
            let (a, b) = pairs[rng.random_range(0..k)];
            x[j] = a;
            y[j] = b;
        }
        if let Some(r) = spearman(&x, &y) {
            stats.push(r);
        }
    }
    percentile_interval(&mut stats, 0.95)
}
