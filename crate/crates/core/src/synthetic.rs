//! Synthetic corpora with a known annotator-noise model.
//!
//! Each example has a latent class `z` drawn uniformly and features
//! `x = mu_z + sigma * noise`. An annotator of an example with latent class
//! `z` reports `z` with probability `1 - eps_z` and each other class with
//! probability `eps_z / (C - 1)`. Conditioned on `x` alone, a single
//! annotation then follows `pi(x) = sum_z p(z | x) pi_z`, which is the
//! generative annotator distribution returned with the corpus.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ExampleRecord, FeatureMatrix, Split};
use crate::error::{Error, Result};
use crate::math;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_examples: usize,
    pub dim: usize,
    /// Per-class annotator noise `eps_c`; its length sets the class count.
    pub class_noise: Vec<f64>,
    /// Distance of each class mean from the origin.
    pub separation: f64,
    pub feature_std: f64,
    pub initial_raters: usize,
    /// Raters added when the initial ones disagree.
    pub extra_raters: usize,
    /// Train and validation fractions; the rest is test.
    pub train_fraction: f64,
    pub validation_fraction: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_examples: 5000,
            dim: 16,
            class_noise: vec![0.1, 0.3, 0.5],
            separation: 2.0,
            feature_std: 1.0,
            initial_raters: 3,
            extra_raters: 2,
            train_fraction: 0.7,
            validation_fraction: 0.15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub dataset: Dataset,
    /// `pi(x)` per example, aligned with the dataset's examples.
    pub generative: Vec<Vec<f64>>,
    pub latent: Vec<usize>,
    pub class_means: Vec<Vec<f64>>,
    /// Expected `1 - max vote share` of `initial_raters` annotators of an
    /// example of each latent class.
    pub generative_disagreement: Vec<f64>,
}

/// Annotation distribution of an example with latent class `z`.
pub fn class_annotation_dist(z: usize, eps: f64, classes: usize) -> Vec<f64> {
    let mut p = vec![eps / (classes - 1) as f64; classes];
    p[z] = 1.0 - eps;
    p
}

/// `pi(x)` under isotropic Gaussian classes with a uniform prior.
pub fn generative_dist(x: &[f64], means: &[Vec<f64>], std: f64, class_noise: &[f64]) -> Vec<f64> {
    let classes = means.len();
    let log_lik: Vec<f64> = means
        .iter()
        .map(|mu| -math::sum(x.iter().zip(mu).map(|(a, b)| (a - b) * (a - b))) / (2.0 * std * std))
        .collect();
    let max = log_lik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_lik.iter().map(|l| math::exp(l - max)).collect();
    let total = math::sum(w.iter().copied());
    let mut pi = vec![0.0; classes];
    for z in 0..classes {
        let q = class_annotation_dist(z, class_noise[z], classes);
        for (acc, v) in pi.iter_mut().zip(q) {
            *acc += w[z] / total * v;
        }
    }
    pi
}

/// Expected `1 - max share` of `raters` iid draws from `p`, summed over
/// vote-count compositions with multinomial weights.
pub fn expected_disagreement(p: &[f64], raters: usize) -> f64 {
    fn walk(p: &[f64], left: usize, raters: usize, ln_w: f64, max: usize, out: &mut f64) {
        let (&first, rest) = p.split_first().expect("nonempty");
        if rest.is_empty() {
            let k = left;
            let ln_w = ln_w - math::ln_gamma(k as f64 + 1.0);
            let prob = if k == 0 {
                math::exp(ln_w)
            } else if first == 0.0 {
                0.0
            } else {
                math::exp(ln_w + k as f64 * math::ln(first))
            };
            *out += prob * (1.0 - max.max(k) as f64 / raters as f64);
            return;
        }
        for k in 0..=left {
            if k > 0 && first == 0.0 {
                break;
            }
            let term = if k == 0 {
                0.0
            } else {
                k as f64 * math::ln(first)
            };
            walk(
                rest,
                left - k,
                raters,
                ln_w - math::ln_gamma(k as f64 + 1.0) + term,
                max.max(k),
                out,
            );
        }
    }
    let mut total = 0.0;
    walk(
        p,
        raters,
        raters,
        math::ln_gamma(raters as f64 + 1.0),
        0,
        &mut total,
    );
    total
}

fn draw_category(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &v) in p.iter().enumerate() {
        acc += v;
        if u < acc {
            return k;
        }
    }
    p.len() - 1
}

pub fn generate(config: &SyntheticConfig, seed: u64) -> Result<SyntheticCorpus> {
    let classes = config.class_noise.len();
    if classes < 2 || config.dim == 0 || config.n_examples == 0 {
        return Err(Error::config(
            "synthetic corpus needs two or more classes, a positive dimension and examples",
        ));
    }
    if config.class_noise.iter().any(|e| !(0.0..1.0).contains(e)) {
        return Err(Error::config("class noise must lie in [0, 1)"));
    }
    if config.initial_raters == 0 || config.train_fraction + config.validation_fraction > 1.0 {
        return Err(Error::config(
            "synthetic corpus needs raters and split fractions summing to at most 1",
        ));
    }
    let mut mean_rng = rng::stream(seed, &["synthetic", "means"]);
    let means: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            let v: Vec<f64> = (0..config.dim)
                .map(|_| StandardNormal.sample(&mut mean_rng))
                .collect();
            let norm = math::sqrt(math::sum(v.iter().map(|a| a * a)));
            v.into_iter()
                .map(|a| a / norm * config.separation)
                .collect()
        })
        .collect();

    let mut x_rng = rng::stream(seed, &["synthetic", "features"]);
    let mut vote_rng = rng::stream(seed, &["synthetic", "votes"]);
    let mut split_rng = rng::stream(seed, &["synthetic", "splits"]);

    let n_train = (config.n_examples as f64 * config.train_fraction) as usize;
    let n_val = (config.n_examples as f64 * config.validation_fraction) as usize;
    let mut splits: Vec<Split> = (0..config.n_examples)
        .map(|i| {
            if i < n_train {
                Split::Train
            } else if i < n_train + n_val {
                Split::Validation
            } else {
                Split::Test
            }
        })
        .collect();
    rand::seq::SliceRandom::shuffle(splits.as_mut_slice(), &mut split_rng);

    let mut values = Vec::with_capacity(config.n_examples * config.dim);
    let mut records = Vec::with_capacity(config.n_examples);
    let mut generative = Vec::with_capacity(config.n_examples);
    let mut latent = Vec::with_capacity(config.n_examples);
    let mut x = vec![0.0; config.dim];
    for i in 0..config.n_examples {
        let z = x_rng.random_range(0..classes);
        for (xk, mk) in x.iter_mut().zip(&means[z]) {
            let e: f64 = StandardNormal.sample(&mut x_rng);
            *xk = mk + config.feature_std * e;
        }
        // Store the f32 value and compute pi on exactly what the model sees.
        let xf: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let xd: Vec<f64> = xf.iter().map(|&v| v as f64).collect();
        values.extend_from_slice(&xf);
        generative.push(generative_dist(
            &xd,
            &means,
            config.feature_std,
            &config.class_noise,
        ));

        let q = class_annotation_dist(z, config.class_noise[z], classes);
        let mut votes: Vec<usize> = (0..config.initial_raters)
            .map(|_| draw_category(&q, vote_rng.random::<f64>()))
            .collect();
        if votes.iter().any(|&v| v != votes[0]) {
            votes.extend(
                (0..config.extra_raters).map(|_| draw_category(&q, vote_rng.random::<f64>())),
            );
        }
        let extended = votes.len() > config.initial_raters;
        records.push(ExampleRecord {
            id: format!("syn-{i:05}"),
            row: Some(i),
            split: splits[i],
            votes,
            high_disagreement: extended && splits[i] == Split::Validation,
        });
        latent.push(z);
    }
    let features = FeatureMatrix::new(config.n_examples, config.dim, values)?;
    let dataset = Dataset::from_records(features, records, classes, Vec::new())?;
    let generative_disagreement = (0..classes)
        .map(|z| {
            expected_disagreement(
                &class_annotation_dist(z, config.class_noise[z], classes),
                config.initial_raters,
            )
        })
        .collect();
    Ok(SyntheticCorpus {
        dataset,
        generative,
        latent,
        class_means: means,
        generative_disagreement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generative_dist_is_a_distribution() {
        let means = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]];
        let p = generative_dist(&[0.3, -0.2], &means, 1.0, &[0.1, 0.2, 0.3]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expected_disagreement_cases() {
        assert_eq!(expected_disagreement(&[1.0, 0.0, 0.0], 3), 0.0);
        // Two raters over two equiprobable classes disagree half the time.
        assert!((expected_disagreement(&[0.5, 0.5], 2) - 0.25).abs() < 1e-15);
        let lo = expected_disagreement(&class_annotation_dist(0, 0.1, 3), 3);
        let hi = expected_disagreement(&class_annotation_dist(0, 0.5, 3), 3);
        assert!(lo < hi);
    }

    #[test]
    fn deterministic_and_shaped() {
        let cfg = SyntheticConfig {
            n_examples: 200,
            ..SyntheticConfig::default()
        };
        let a = generate(&cfg, 5).unwrap();
        let b = generate(&cfg, 5).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.dataset.split_sizes(), [140, 30, 30]);
        for ex in a.dataset.examples() {
            let n = ex.votes.total();
            assert!(n == 3 || n == 5);
        }
    }
}
