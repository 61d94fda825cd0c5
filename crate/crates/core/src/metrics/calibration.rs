//! Hard-label calibration: ECE, reliability bins, Brier score and NLL.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::uncertainty::PredictiveRecord;

/// Probability floor applied inside logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// Mean confidence of the bin; zero when empty.
    pub mean_confidence: f64,
    /// Fraction correct in the bin; zero when empty.
    pub accuracy: f64,
}

fn bin_index(confidence: f64, n_bins: usize) -> usize {
    let b = math::floor(confidence * n_bins as f64) as usize;
    b.min(n_bins - 1)
}

/// Equal-width bins on `[0, 1]` over the top-1 confidence of each record.
pub fn reliability_bins(
    records: &[PredictiveRecord],
    hard_labels: &[usize],
    n_bins: usize,
) -> Vec<ReliabilityBin> {
    assert!(n_bins >= 1, "need at least one bin");
    let mut count = vec![0usize; n_bins];
    let mut conf = vec![0.0f64; n_bins];
    let mut hits = vec![0usize; n_bins];
    for (r, &y) in records.iter().zip(hard_labels) {
        let c = r.confidence();
        let b = bin_index(c, n_bins);
        count[b] += 1;
        conf[b] += c;
        if r.predicted() == y {
            hits[b] += 1;
        }
    }
    (0..n_bins)
        .map(|b| {
            let n = count[b];
            ReliabilityBin {
                lower: b as f64 / n_bins as f64,
                upper: (b + 1) as f64 / n_bins as f64,
                count: n,
                mean_confidence: if n > 0 { conf[b] / n as f64 } else { 0.0 },
                accuracy: if n > 0 {
                    hits[b] as f64 / n as f64
                } else {
                    0.0
                },
            }
        })
        .collect()
}

/// `sum_b |b|/n * |acc(b) - conf(b)|` from a bin table.
pub fn ece_from_bins(bins: &[ReliabilityBin]) -> f64 {
    let n: usize = bins.iter().map(|b| b.count).sum();
    if n == 0 {
        return 0.0;
    }
    math::sum(
        bins.iter()
            .filter(|b| b.count > 0)
            .map(|b| b.count as f64 / n as f64 * math::abs(b.accuracy - b.mean_confidence)),
    )
}

pub fn ece(records: &[PredictiveRecord], hard_labels: &[usize], n_bins: usize) -> f64 {
    ece_from_bins(&reliability_bins(records, hard_labels, n_bins))
}

/// Mean of `sum_c (p_c - 1[c = y])^2`.
pub fn brier_multiclass(records: &[PredictiveRecord], hard_labels: &[usize]) -> f64 {
    let total = math::sum(records.iter().zip(hard_labels).map(|(r, &y)| {
        math::sum(r.mean_dist.iter().enumerate().map(|(c, &p)| {
            let t = if c == y { 1.0 } else { 0.0 };
            (p - t) * (p - t)
        }))
    }));
    total / records.len() as f64
}

/// `-mean log max(p(y), floor)` in nats.
pub fn nll_hard(records: &[PredictiveRecord], hard_labels: &[usize]) -> f64 {
    let total = math::sum(
        records
            .iter()
            .zip(hard_labels)
            .map(|(r, &y)| -math::ln(r.mean_dist[y].max(PROB_FLOOR))),
    );
    total / records.len() as f64
}
