//! Posterior linear heads over frozen text embeddings.
//!
//! This crate holds the numerical side of the toolkit and builds under
//! `no_std` (it needs `alloc`). It covers:
//!
//! * [`data`]: feature matrices, annotator votes, hard/soft labels and
//!   per-category disagreement rates.
//! * [`model`]: the linear head, softmax and the soft-target cross-entropy.
//! * [`trainers`]: the cyclical SG-MCMC sampler and the AdamW baselines
//!   (single head, MC-Dropout, deep ensemble).
//! * [`uncertainty`]: posterior-mean prediction and the
//!   total/aleatoric/epistemic entropy decomposition.
//! * [`metrics`], [`calibrate`], [`active`], [`stats`]: the evaluation
//!   suite, temperature scaling, the active-learning harness and the
//!   statistical protocol.
//! * [`synthetic`]: a generator for corpora with a known annotator-noise
//!   model, used for desk-scale checks.
//!
//! File formats, configuration and the command line live in the companion
//! `posthead` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod active;
pub mod calibrate;
pub mod data;
pub mod error;
pub(crate) mod math;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod stats;
pub mod synthetic;
pub mod trainers;
pub mod uncertainty;

pub use data::{Dataset, Example, FeatureMatrix, LabelMode, Split, VoteVector};
pub use error::{Error, Result};
pub use model::HeadWeights;
pub use trainers::{Method, PosteriorSamples};
pub use uncertainty::PredictiveRecord;
