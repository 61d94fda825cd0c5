//! Selective prediction: risk-coverage curves and misclassification AUROC.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::rank::average_ranks;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCoverage {
    /// `k / n` for `k = 1..=n`.
    pub coverage: Vec<f64>,
    /// Error rate among the `k` most confident examples.
    pub risk: Vec<f64>,
    pub aurc: f64,
}

/// Examples are accepted in ascending `score` order (lower score = more
/// confident); ties keep input order.
pub fn risk_coverage(scores: &[f64], correct: &[bool]) -> Result<RiskCoverage> {
    if scores.is_empty() {
        return Err(Error::Empty("risk-coverage input"));
    }
    if scores.len() != correct.len() {
        return Err(Error::validation("scores and correctness differ in length"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let n = scores.len();
    let mut errors = 0usize;
    let mut coverage = Vec::with_capacity(n);
    let mut risk = Vec::with_capacity(n);
    let mut total = 0.0;
    for (k, &i) in order.iter().enumerate() {
        if !correct[i] {
            errors += 1;
        }
        let r = errors as f64 / (k + 1) as f64;
        coverage.push((k + 1) as f64 / n as f64);
        risk.push(r);
        total += r;
    }
    Ok(RiskCoverage {
        coverage,
        risk,
        aurc: total / n as f64,
    })
}

pub fn aurc(scores: &[f64], correct: &[bool]) -> Result<f64> {
    risk_coverage(scores, correct).map(|rc| rc.aurc)
}

/// Probability that a misclassified example scores higher than a correct
/// one, ties counting one half. Absent unless both groups are present.
pub fn auroc(scores: &[f64], correct: &[bool]) -> Option<f64> {
    let n_wrong = correct.iter().filter(|c| !**c).count();
    let n_right = correct.len() - n_wrong;
    if n_wrong == 0 || n_right == 0 {
        return None;
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(correct)
        .filter(|(_, c)| !**c)
        .map(|(r, _)| *r)
        .sum();
    let u = rank_sum - (n_wrong * (n_wrong + 1)) as f64 / 2.0;
    Some(u / (n_wrong as f64 * n_right as f64))
}
