//! Accuracy, macro-F1 and the failure-case entropy ratio.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::uncertainty::PredictiveRecord;

/// Accuracy and the unweighted mean of per-class F1 over all `classes`;
/// a class with no support and no predictions scores F1 = 0.
pub fn accuracy_macro_f1(
    records: &[PredictiveRecord],
    hard_labels: &[usize],
    classes: usize,
) -> (f64, f64) {
    let preds: Vec<usize> = records.iter().map(|r| r.predicted()).collect();
    accuracy_macro_f1_from_predictions(&preds, hard_labels, classes)
}

pub fn accuracy_macro_f1_from_predictions(
    preds: &[usize],
    truth: &[usize],
    classes: usize,
) -> (f64, f64) {
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fneg = vec![0usize; classes];
    let mut correct = 0usize;
    for (&p, &y) in preds.iter().zip(truth) {
        if p == y {
            tp[y] += 1;
            correct += 1;
        } else {
            fp[p] += 1;
            fneg[y] += 1;
        }
    }
    let f1 = (0..classes).map(|c| {
        let denom = 2 * tp[c] + fp[c] + fneg[c];
        if denom == 0 {
            0.0
        } else {
            2.0 * tp[c] as f64 / denom as f64
        }
    });
    let macro_f1 = math::sum(f1) / classes as f64;
    (correct as f64 / preds.len().max(1) as f64, macro_f1)
}

/// Mean total entropy of misclassified examples over that of correct ones.
pub fn failure_entropy_ratio(records: &[PredictiveRecord], hard_labels: &[usize]) -> Option<f64> {
    let (mut wrong, mut nw, mut right, mut nr) = (0.0, 0usize, 0.0, 0usize);
    for (r, &y) in records.iter().zip(hard_labels) {
        if r.predicted() == y {
            right += r.h_tot;
            nr += 1;
        } else {
            wrong += r.h_tot;
            nw += 1;
        }
    }
    if nw == 0 || nr == 0 {
        return None;
    }
    let right = right / nr as f64;
    (right > 0.0).then(|| (wrong / nw as f64) / right)
}

/// Ids of examples `primary` gets wrong and `reference` gets right, ranked
/// by the primary's total entropy (highest first), at most `k` of them.
pub fn failure_listing(
    primary: &[PredictiveRecord],
    reference: &[PredictiveRecord],
    hard_labels: &[usize],
    k: usize,
) -> Vec<String> {
    let mut hits: Vec<&PredictiveRecord> = primary
        .iter()
        .zip(reference)
        .zip(hard_labels)
        .filter(|((p, r), &y)| p.predicted() != y && r.predicted() == y)
        .map(|((p, _), _)| p)
        .collect();
    hits.sort_by(|a, b| b.h_tot.total_cmp(&a.h_tot));
    hits.into_iter().take(k).map(|r| r.id.clone()).collect()
}
