//! Producing posterior samples over head weights.
//!
//! Four methods are supported:
//!
//! | method      | trainer                     | members |
//! |-------------|-----------------------------|---------|
//! | `b0`        | AdamW, single head          | 1       |
//! | `b1`        | AdamW with input dropout    | 1 head, 20 dropout passes |
//! | `b2`        | five AdamW heads            | 5       |
//! | `proposed`  | cyclical SG-MCMC            | `(N_cyc - B) * S` |

mod adamw;
mod sampler;
pub mod schedule;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use adamw::{train_adamw, validation_nll, AdamW, AdamWOutcome, EpochRecord, OptimizerConfig};
pub use sampler::{
    initial_params, run_sampler, run_sampler_from, BatchStream, GradientTarget, Init,
    SamplerConfig, SamplerRun,
};
pub use schedule::{collect_offsets, phase, step_size, Phase};

use crate::data::{Dataset, LabelMode, Split};
use crate::error::{Error, Result};
use crate::model::{self, HeadWeights};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Deterministic AdamW head.
    #[serde(rename = "b0")]
    Deterministic,
    /// The B0 head trained and evaluated with input dropout.
    #[serde(rename = "b1")]
    McDropout,
    /// Independently initialized and shuffled AdamW heads.
    #[serde(rename = "b2")]
    DeepEnsemble,
    /// Cyclical SG-MCMC.
    #[serde(rename = "proposed")]
    CyclicalSgmcmc,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Deterministic,
        Method::McDropout,
        Method::DeepEnsemble,
        Method::CyclicalSgmcmc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Deterministic => "b0",
            Method::McDropout => "b1",
            Method::DeepEnsemble => "b2",
            Method::CyclicalSgmcmc => "proposed",
        }
    }

    pub fn is_baseline(self) -> bool {
        self != Method::CyclicalSgmcmc
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "b0" | "deterministic" => Ok(Method::Deterministic),
            "b1" | "mc-dropout" | "mcdropout" => Ok(Method::McDropout),
            "b2" | "ensemble" | "deep-ensemble" => Ok(Method::DeepEnsemble),
            "proposed" | "csgmcmc" | "cyclical-sgmcmc" => Ok(Method::CyclicalSgmcmc),
            other => Err(Error::validation(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropoutSpec {
    pub rate: f64,
    /// Stochastic forward passes at prediction time.
    pub passes: usize,
}

/// Weight samples representing a posterior over the head.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub method: Method,
    pub label_mode: LabelMode,
    pub seed: u64,
    pub members: Vec<HeadWeights>,
    /// Present for MC-Dropout, whose members come from dropout passes.
    pub dropout: Option<DropoutSpec>,
}

impl PosteriorSamples {
    /// Number of predictive distributions averaged at prediction time.
    pub fn effective_members(&self) -> usize {
        match self.dropout {
            Some(d) => d.passes * self.members.len(),
            None => self.members.len(),
        }
    }

    pub fn classes(&self) -> usize {
        self.members.first().map_or(0, |m| m.classes())
    }

    pub fn dim(&self) -> usize {
        self.members.first().map_or(0, |m| m.dim())
    }
}

/// The examples a trainer fits on and early-stops against.
#[derive(Debug, Clone)]
pub struct TrainingSet<'a> {
    pub dataset: &'a Dataset,
    /// Example indices used for gradient steps; the posterior scale defaults
    /// to their count.
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub label_mode: LabelMode,
}

impl<'a> TrainingSet<'a> {
    pub fn from_splits(dataset: &'a Dataset, label_mode: LabelMode) -> Self {
        Self {
            dataset,
            train: dataset.split_indices(Split::Train),
            validation: dataset.split_indices(Split::Validation),
            label_mode,
        }
    }
}

/// Mean cross-entropy of a linear head over a training set.
pub struct HeadTarget<'s, 'a> {
    set: &'s TrainingSet<'a>,
    classes: usize,
    dim: usize,
}

impl<'s, 'a> HeadTarget<'s, 'a> {
    pub fn new(set: &'s TrainingSet<'a>) -> Self {
        Self {
            set,
            classes: set.dataset.n_categories(),
            dim: set.dataset.features().dim(),
        }
    }
}

impl GradientTarget for HeadTarget<'_, '_> {
    fn n_params(&self) -> usize {
        self.classes * self.dim + self.classes
    }

    fn n_data(&self) -> usize {
        self.set.train.len()
    }

    fn batch_loss_grad(&mut self, params: &[f32], batch: &[usize], grad: &mut [f64]) -> f64 {
        let ds = self.set.dataset;
        let train = &self.set.train;
        let mode = self.set.label_mode;
        model::loss_and_grad(
            params,
            self.classes,
            self.dim,
            &mut |i, x| x.copy_from_slice(ds.features().row(ds.example(train[batch[i]]).row)),
            &mut |i, q| ds.example(train[batch[i]]).target_into(mode, q),
            batch.len(),
            grad,
        )
    }
}

/// Train a head with the cyclical sampler and keep its snapshots.
pub fn train_csgmcmc(
    set: &TrainingSet<'_>,
    config: &SamplerConfig,
    seed: u64,
) -> Result<PosteriorSamples> {
    if set.train.is_empty() {
        return Err(Error::Empty("training split"));
    }
    let classes = set.dataset.n_categories();
    let dim = set.dataset.features().dim();
    let mut target = HeadTarget::new(set);
    let run = run_sampler(&mut target, config, seed)?;
    let members = run
        .samples
        .into_iter()
        .map(|p| HeadWeights::from_flat(classes, dim, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorSamples {
        method: Method::CyclicalSgmcmc,
        label_mode: set.label_mode,
        seed,
        members,
        dropout: None,
    })
}

/// Member seeds of an ensemble, derived from the run seed.
pub fn ensemble_member_seeds(seed: u64, n: usize) -> Vec<u64> {
    (0..n)
        .map(|j| {
            let j = format!("{j}");
            rng::derive_seed(seed, &["ensemble", "member", &j])
        })
        .collect()
}

/// Train one AdamW head per member seed.
pub fn train_ensemble(
    set: &TrainingSet<'_>,
    config: &OptimizerConfig,
    seed: u64,
    member_seeds: &[u64],
) -> Result<PosteriorSamples> {
    if member_seeds.is_empty() {
        return Err(Error::config("ensemble needs at least one member"));
    }
    let members = member_seeds
        .iter()
        .map(|&s| train_adamw(set, config, s, None).map(|o| o.weights))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorSamples {
        method: Method::DeepEnsemble,
        label_mode: set.label_mode,
        seed,
        members,
        dropout: None,
    })
}

/// Everything a trainer may need, with canonical defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub sampler: SamplerConfig,
    pub optimizer: OptimizerConfig,
    pub dropout_rate: f64,
    pub dropout_passes: usize,
    pub ensemble_size: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            sampler: SamplerConfig::default(),
            optimizer: OptimizerConfig::default(),
            dropout_rate: 0.1,
            dropout_passes: 20,
            ensemble_size: 5,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        self.optimizer.validate()?;
        if !(0.0..1.0).contains(&self.dropout_rate)
            || self.dropout_passes == 0
            || self.ensemble_size == 0
        {
            return Err(Error::config(
                "dropout rate must lie in [0, 1); passes and ensemble size must be positive",
            ));
        }
        Ok(())
    }
}

/// Train `method` on `set`.
pub fn train(
    method: Method,
    set: &TrainingSet<'_>,
    config: &TrainerConfig,
    seed: u64,
) -> Result<PosteriorSamples> {
    match method {
        Method::Deterministic => {
            let out = train_adamw(set, &config.optimizer, seed, None)?;
            Ok(PosteriorSamples {
                method,
                label_mode: set.label_mode,
                seed,
                members: vec![out.weights],
                dropout: None,
            })
        }
        Method::McDropout => {
            let out = train_adamw(set, &config.optimizer, seed, Some(config.dropout_rate))?;
            Ok(PosteriorSamples {
                method,
                label_mode: set.label_mode,
                seed,
                members: vec![out.weights],
                dropout: Some(DropoutSpec {
                    rate: config.dropout_rate,
                    passes: config.dropout_passes,
                }),
            })
        }
        Method::DeepEnsemble => train_ensemble(
            set,
            &config.optimizer,
            seed,
            &ensemble_member_seeds(seed, config.ensemble_size),
        ),
        Method::CyclicalSgmcmc => train_csgmcmc(set, &config.sampler, seed),
    }
}

/// Short human-readable description of a run.
pub fn describe(method: Method, mode: LabelMode, seed: u64) -> String {
    format!("{}/{}/{}", method.as_str(), mode.as_str(), seed)
}
