//! Pool-based active learning with the cyclical sampler as base predictor.
//!
//! Every iteration retrains from scratch on the labeled set, scores the
//! pool, and moves the highest-scoring batch into the labeled set. Pool
//! management draws from its own random streams, so two strategies run
//! under one seed differ only through their scores.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LabelMode, Split};
use crate::error::{Error, Result};
use crate::metrics::accuracy_macro_f1;
use crate::rng::{self, Rng};
use crate::trainers::{train_csgmcmc, PosteriorSamples, SamplerConfig, TrainingSet};
use crate::uncertainty::{predict, PredictOptions, PredictiveRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Epistemic entropy, the mutual information between label and weights.
    Bald,
    /// Total predictive entropy.
    Entropy,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Bald, Strategy::Entropy, Strategy::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Bald => "bald",
            Strategy::Entropy => "entropy",
            Strategy::Random => "random",
        }
    }
}

impl core::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bald" => Ok(Strategy::Bald),
            "entropy" => Ok(Strategy::Entropy),
            "random" => Ok(Strategy::Random),
            other => Err(Error::validation(format!(
                "unknown acquisition strategy `{other}`"
            ))),
        }
    }
}

/// Sampler settings scaled down so that twenty retrains stay affordable.
pub fn scaled_sampler() -> SamplerConfig {
    SamplerConfig {
        n_cycles: 4,
        cycle_len: 500,
        ..SamplerConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlConfig {
    pub n_iterations: usize,
    pub batch_per_iter: usize,
    /// Size of the stratified random initial labeled set.
    pub initial_size: usize,
    pub strategy: Strategy,
    pub label_mode: LabelMode,
    pub sampler: SamplerConfig,
    /// Hard-label categories removed before the loop starts.
    pub exclude_categories: Vec<usize>,
}

impl Default for AlConfig {
    fn default() -> Self {
        Self {
            n_iterations: 20,
            batch_per_iter: 500,
            initial_size: 500,
            strategy: Strategy::Entropy,
            label_mode: LabelMode::Soft,
            sampler: scaled_sampler(),
            exclude_categories: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    /// Labeled-set size the predictor of this iteration was trained on.
    pub n_labeled: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Hard-label counts of the examples acquired after this iteration.
    pub acquired_per_class: Vec<usize>,
    /// Dataset indices acquired after this iteration, in selection order.
    pub acquired: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub strategy: Strategy,
    pub seed: u64,
    pub initial: Vec<usize>,
    pub points: Vec<CurvePoint>,
    /// Set when every score of some iteration was identical, as happens for
    /// BALD on a single-member posterior.
    pub degenerate_scores: bool,
}

/// Per-pool-example acquisition score; higher is acquired first.
pub fn acquisition_scores(
    records: &[PredictiveRecord],
    strategy: Strategy,
    rng: &mut Rng,
) -> Vec<f64> {
    match strategy {
        Strategy::Bald => records.iter().map(|r| r.h_epi).collect(),
        Strategy::Entropy => records.iter().map(|r| r.h_tot).collect(),
        Strategy::Random => records.iter().map(|_| rng.random::<f64>()).collect(),
    }
}

/// Positions of the `k` highest scores; equal scores keep position order.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order.truncate(k);
    order
}

/// Stratified random sample of `size` indices by hard label, allocating
/// per class by largest remainder.
pub fn stratified_initial(
    dataset: &Dataset,
    candidates: &[usize],
    size: usize,
    rng: &mut Rng,
) -> Result<Vec<usize>> {
    if size > candidates.len() {
        return Err(Error::PoolExhausted {
            iteration: 0,
            needed: size,
            available: candidates.len(),
        });
    }
    let classes = dataset.n_categories();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for &i in candidates {
        groups[dataset.example(i).hard_label].push(i);
    }
    let n = candidates.len();
    let mut alloc: Vec<usize> = groups.iter().map(|g| g.len() * size / n).collect();
    let mut remainders: Vec<(usize, usize)> = groups
        .iter()
        .enumerate()
        .map(|(c, g)| ((g.len() * size) % n, c))
        .collect();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut left = size - alloc.iter().sum::<usize>();
    for &(_, c) in &remainders {
        if left == 0 {
            break;
        }
        if alloc[c] < groups[c].len() {
            alloc[c] += 1;
            left -= 1;
        }
    }
    let mut out = Vec::with_capacity(size);
    for (g, &k) in groups.iter_mut().zip(&alloc) {
        g.shuffle(rng);
        out.extend_from_slice(&g[..k]);
    }
    out.sort_unstable();
    Ok(out)
}

/// Scores the pool given the current posterior and its pool predictions.
pub type Scorer<'a> = dyn FnMut(&PosteriorSamples, &[PredictiveRecord], &mut Rng) -> Vec<f64> + 'a;

/// Run the loop with the configured strategy.
pub fn run_al_loop(dataset: &Dataset, config: &AlConfig, seed: u64) -> Result<LearningCurve> {
    let strategy = config.strategy;
    run_al_loop_with(dataset, config, seed, &mut |_, records, rng| {
        acquisition_scores(records, strategy, rng)
    })
}

/// Run the loop with a custom scorer.
pub fn run_al_loop_with(
    dataset: &Dataset,
    config: &AlConfig,
    seed: u64,
    scorer: &mut Scorer<'_>,
) -> Result<LearningCurve> {
    config.sampler.validate()?;
    if config.batch_per_iter == 0 || config.initial_size == 0 {
        return Err(Error::config(
            "active learning batch and initial sizes must be positive",
        ));
    }
    let owned;
    let dataset = if config.exclude_categories.is_empty() {
        dataset
    } else {
        owned = dataset.without_categories(&config.exclude_categories)?;
        &owned
    };
    let train = dataset.split_indices(Split::Train);
    let validation = dataset.split_indices(Split::Validation);
    if validation.is_empty() {
        return Err(Error::Empty("validation split"));
    }
    let val_labels = dataset.hard_labels(&validation);

    let mut init_rng = rng::stream(seed, &["al", "initial"]);
    let initial = stratified_initial(dataset, &train, config.initial_size, &mut init_rng)?;
    let mut labeled: BTreeSet<usize> = initial.iter().copied().collect();
    let mut pool: Vec<usize> = train
        .iter()
        .copied()
        .filter(|i| !labeled.contains(i))
        .collect();

    let mut points = Vec::with_capacity(config.n_iterations);
    let mut degenerate = false;
    for it in 0..config.n_iterations {
        if pool.len() < config.batch_per_iter {
            return Err(Error::PoolExhausted {
                iteration: it,
                needed: config.batch_per_iter,
                available: pool.len(),
            });
        }
        let tag = format!("{it}");
        let set = TrainingSet {
            dataset,
            train: labeled.iter().copied().collect(),
            validation: validation.clone(),
            label_mode: config.label_mode,
        };
        let train_seed = rng::derive_seed(seed, &["al", "train", &tag]);
        let posterior = train_csgmcmc(&set, &config.sampler, train_seed)?;

        let mut pred_rng = rng::stream(seed, &["al", "predict", &tag]);
        let val_records = predict(
            &posterior,
            dataset,
            &validation,
            &mut pred_rng,
            PredictOptions::default(),
        )?;
        let (accuracy, macro_f1) =
            accuracy_macro_f1(&val_records, &val_labels, dataset.n_categories());
        let pool_records = predict(
            &posterior,
            dataset,
            &pool,
            &mut pred_rng,
            PredictOptions::default(),
        )?;

        let mut score_rng = rng::stream(seed, &["al", "score", &tag]);
        let scores = scorer(&posterior, &pool_records, &mut score_rng);
        if scores.len() != pool.len() {
            return Err(Error::validation(
                "scorer returned the wrong number of scores",
            ));
        }
        if scores.windows(2).all(|w| w[0] == w[1]) {
            degenerate = true;
        }
        let picked: Vec<usize> = top_k(&scores, config.batch_per_iter)
            .into_iter()
            .map(|p| pool[p])
            .collect();
        let mut per_class = vec![0usize; dataset.n_categories()];
        for &i in &picked {
            per_class[dataset.example(i).hard_label] += 1;
            labeled.insert(i);
        }
        pool.retain(|i| !labeled.contains(i));
        points.push(CurvePoint {
            iteration: it,
            n_labeled: set.train.len(),
            accuracy,
            macro_f1,
            acquired_per_class: per_class,
            acquired: picked,
        });
    }
    Ok(LearningCurve {
        strategy: config.strategy,
        seed,
        initial,
        points,
        degenerate_scores: degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_k_breaks_ties_by_position() {
        assert_eq!(top_k(&[0.5, 0.9, 0.5, 0.9, 0.1], 3), vec![1, 3, 0]);
        assert_eq!(top_k(&[0.0; 4], 2), vec![0, 1]);
    }

    #[test]
    fn random_scores_reproducible() {
        let recs = vec![
            PredictiveRecord {
                example: 0,
                id: "a".into(),
                mean_dist: vec![0.5, 0.5],
                h_tot: 0.1,
                h_ale: 0.1,
                h_epi: 0.0,
                member_logits: None,
            };
            5
        ];
        let a = acquisition_scores(&recs, Strategy::Random, &mut rng::from_seed(3));
        let b = acquisition_scores(&recs, Strategy::Random, &mut rng::from_seed(3));
        assert_eq!(a, b);
        assert_eq!(
            acquisition_scores(&recs, Strategy::Bald, &mut rng::from_seed(3)),
            vec![0.0; 5]
        );
    }
}
