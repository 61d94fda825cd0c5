//! Posterior-mean prediction and the entropy decomposition
//!
//! ```text
//! H_tot = H[ mean_m p_m ]
//! H_ale = mean_m H[ p_m ]
//! H_epi = H_tot - H_ale
//! ```
//!
//! All entropies are in nats.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::math;
use crate::model::{self, softmax_in_place};
use crate::rng::Rng;
use crate::trainers::PosteriorSamples;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveRecord {
    /// Index of the example in its dataset.
    #[serde(skip)]
    pub example: usize,
    pub id: String,
    pub mean_dist: Vec<f64>,
    pub h_tot: f64,
    pub h_ale: f64,
    pub h_epi: f64,
    /// Per-member logits (`M x C`, row-major), kept on request.
    #[serde(skip)]
    pub member_logits: Option<Vec<f64>>,
}

impl PredictiveRecord {
    pub fn confidence(&self) -> f64 {
        self.mean_dist.iter().copied().fold(0.0, f64::max)
    }

    /// Argmax of the mean distribution; ties go to the lowest index.
    pub fn predicted(&self) -> usize {
        argmax(&self.mean_dist)
    }
}

pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = c;
        }
    }
    best
}

/// Shannon entropy in nats, with `0 log 0 = 0`.
pub fn entropy(p: &[f64]) -> Result<f64> {
    if p.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::validation(
            "probability vector has a negative or non-finite entry",
        ));
    }
    let total: f64 = p.iter().sum();
    if math::abs(total - 1.0) > 1e-6 {
        return Err(Error::validation("probability vector does not sum to 1"));
    }
    Ok(entropy_unchecked(p))
}

pub(crate) fn entropy_unchecked(p: &[f64]) -> f64 {
    let mut h = 0.0;
    for &v in p {
        if v > 0.0 {
            h -= v * math::ln(v);
        }
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub mean_dist: Vec<f64>,
    pub h_tot: f64,
    pub h_ale: f64,
    pub h_epi: f64,
}

/// Decompose a set of member distributions (`M x C`, row-major).
pub fn decompose(member_dists: &[f64], classes: usize) -> Decomposition {
    let m = member_dists.len() / classes;
    let mut mean = vec![0.0; classes];
    let mut h_ale = 0.0;
    for row in member_dists.chunks_exact(classes) {
        for (acc, &v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
        h_ale += entropy_unchecked(row);
    }
    let inv = 1.0 / m as f64;
    mean.iter_mut().for_each(|v| *v *= inv);
    h_ale *= inv;
    let h_tot = entropy_unchecked(&mean);
    Decomposition {
        mean_dist: mean,
        h_tot,
        h_ale,
        h_epi: h_tot - h_ale,
    }
}

/// `mean_m KL(p_m || mean)`, the mutual information between the label and
/// the member index.
pub fn mutual_information(member_dists: &[f64], classes: usize) -> f64 {
    let d = decompose(member_dists, classes);
    let m = member_dists.len() / classes;
    let mut mi = 0.0;
    for row in member_dists.chunks_exact(classes) {
        for (&p, &q) in row.iter().zip(&d.mean_dist) {
            if p > 0.0 {
                mi += p * math::ln(p / q);
            }
        }
    }
    mi / m as f64
}

/// Build a record from member logits, dividing them by `temperature`
/// before the softmax.
pub fn record_from_logits(
    example: usize,
    id: String,
    member_logits: Vec<f64>,
    classes: usize,
    temperature: f64,
    retain: bool,
) -> PredictiveRecord {
    let mut dists = member_logits.clone();
    for row in dists.chunks_exact_mut(classes) {
        if temperature != 1.0 {
            row.iter_mut().for_each(|z| *z /= temperature);
        }
        softmax_in_place(row);
    }
    let d = decompose(&dists, classes);
    PredictiveRecord {
        example,
        id,
        mean_dist: d.mean_dist,
        h_tot: d.h_tot,
        h_ale: d.h_ale,
        h_epi: d.h_epi,
        member_logits: retain.then_some(member_logits),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictOptions {
    /// Keep per-member logits on each record.
    pub retain_members: bool,
    pub temperature: f64,
}

impl Default for PredictOptions {
    fn default() -> Self {
        Self {
            retain_members: false,
            temperature: 1.0,
        }
    }
}

/// Member logits for one example, `M x C`.
pub fn member_logits(samples: &PosteriorSamples, x: &[f32], rng: &mut Rng) -> Vec<f64> {
    let c = samples.classes();
    let mut out = vec![0.0; samples.effective_members() * c];
    match samples.dropout {
        None => {
            for (m, theta) in samples.members.iter().enumerate() {
                theta.logits_into(x, &mut out[m * c..(m + 1) * c]);
            }
        }
        Some(spec) => {
            let mut xm = vec![0.0f32; x.len()];
            let mut k = 0;
            for theta in &samples.members {
                for _ in 0..spec.passes {
                    xm.copy_from_slice(x);
                    model::dropout_mask_in_place(&mut xm, spec.rate, rng);
                    theta.logits_into(&xm, &mut out[k * c..(k + 1) * c]);
                    k += 1;
                }
            }
        }
    }
    out
}

/// Posterior-mean predictions for `examples` of `dataset`.
///
/// `rng` drives the dropout passes of MC-Dropout posteriors and is unused
/// otherwise.
pub fn predict(
    samples: &PosteriorSamples,
    dataset: &Dataset,
    examples: &[usize],
    rng: &mut Rng,
    options: PredictOptions,
) -> Result<Vec<PredictiveRecord>> {
    if samples.members.is_empty() {
        return Err(Error::Empty("posterior samples"));
    }
    if samples.dim() != dataset.features().dim() || samples.classes() != dataset.n_categories() {
        return Err(Error::validation(
            "posterior shape does not match the dataset",
        ));
    }
    if !(options.temperature > 0.0) {
        return Err(Error::validation("temperature must be positive"));
    }
    let c = samples.classes();
    let mut out = Vec::with_capacity(examples.len());
    for &i in examples {
        let ex = dataset.example(i);
        let logits = member_logits(samples, dataset.features().row(ex.row), rng);
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: ex.row });
        }
        out.push(record_from_logits(
            i,
            ex.id.clone(),
            logits,
            c,
            options.temperature,
            options.retain_members,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_2;

    #[test]
    fn entropy_cases() {
        assert_eq!(entropy(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
        assert!((entropy(&[0.5, 0.5]).unwrap() - LN_2).abs() < 1e-15);
        let u = vec![1.0 / 28.0; 28];
        assert!((entropy(&u).unwrap() - libm::log(28.0)).abs() < 1e-12);
        assert!((entropy(&u).unwrap() - 3.3322).abs() < 1e-4);
        assert!(entropy(&[1.2, -0.2]).is_err());
    }

    #[test]
    fn opposed_members() {
        let d = decompose(&[1.0, 0.0, 0.0, 1.0], 2);
        assert_eq!(d.mean_dist, vec![0.5, 0.5]);
        assert!((d.h_tot - LN_2).abs() < 1e-15);
        assert_eq!(d.h_ale, 0.0);
        assert!((d.h_epi - LN_2).abs() < 1e-15);
    }

    #[test]
    fn single_member_has_no_epistemic_part() {
        let d = decompose(&[0.2, 0.3, 0.5], 3);
        assert_eq!(d.h_epi, 0.0);
    }

    #[test]
    fn identical_members() {
        let p = [0.1, 0.6, 0.3];
        let rows: Vec<f64> = p.iter().copied().cycle().take(15).collect();
        let d = decompose(&rows, 3);
        assert!(d.h_epi.abs() < 1e-12);
    }

    #[test]
    fn epistemic_equals_mutual_information() {
        let rows = [0.7, 0.2, 0.1, 0.1, 0.3, 0.6, 0.34, 0.33, 0.33];
        let d = decompose(&rows, 3);
        assert!((d.h_epi - mutual_information(&rows, 3)).abs() < 1e-12);
    }
}
