#![allow(dead_code)]

use posthead_core::data::ExampleRecord;
use posthead_core::uncertainty::record_from_logits;
use posthead_core::{Dataset, FeatureMatrix, PredictiveRecord, Split};

/// A record whose mean distribution is exactly `p` (single member, no
/// softmax round trip).
pub fn record(example: usize, p: &[f64]) -> PredictiveRecord {
    let h: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
    PredictiveRecord {
        example,
        id: format!("r{example}"),
        mean_dist: p.to_vec(),
        h_tot: h,
        h_ale: h,
        h_epi: 0.0,
        member_logits: None,
    }
}

/// A record built from `M x C` member logits.
pub fn record_from_members(example: usize, logits: &[f64], classes: usize) -> PredictiveRecord {
    record_from_logits(
        example,
        format!("r{example}"),
        logits.to_vec(),
        classes,
        1.0,
        true,
    )
}

/// Normalize non-negative weights into a distribution.
pub fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// A dataset with the given per-example votes and splits; features are a
/// deterministic function of the index.
pub fn dataset(votes: &[Vec<usize>], splits: &[Split], classes: usize, dim: usize) -> Dataset {
    let n = votes.len();
    let values: Vec<f32> = (0..n * dim)
        .map(|i| ((i * 37 % 101) as f32 / 101.0) - 0.5)
        .collect();
    let records = votes
        .iter()
        .zip(splits)
        .enumerate()
        .map(|(i, (v, &s))| ExampleRecord {
            id: format!("e{i}"),
            row: None,
            split: s,
            votes: v.clone(),
            high_disagreement: false,
        })
        .collect();
    Dataset::from_records(
        FeatureMatrix::new(n, dim, values).unwrap(),
        records,
        classes,
        Vec::new(),
    )
    .unwrap()
}
