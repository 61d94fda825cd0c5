//! Cyclical stochastic-gradient MCMC.
//!
//! Each cycle of `K` steps follows a cosine step-size schedule. The first
//! `1 - xi` of a cycle is plain gradient descent on the negative log
//! posterior; the remainder adds Gaussian noise with variance
//! `2 * alpha_t * T` (SGLD). After `B` burn-in cycles, `S` snapshots are
//! taken per cycle at evenly spaced points of the sampling phase.
//!
//! The update for parameters `theta` is
//!
//! ```text
//! g     = N * grad L(theta; batch) + eta * theta     (clipped to `clip_norm`)
//! theta = theta - alpha_t * g  [+ sqrt(2 alpha_t T) * eps]
//! ```
//!
//! where `L` is the mean loss over the mini-batch and `N` the posterior
//! scale. The prior term is not multiplied by `N`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::schedule::{collect_offsets, phase, sampling_start, step_size, Phase};
use crate::error::{Error, Result};
use crate::math;
use crate::rng::{self, Rng};

/// A differentiable mean loss over `n_data` items.
pub trait GradientTarget {
    fn n_params(&self) -> usize;

    fn n_data(&self) -> usize;

    /// Mean loss over the items in `batch`; its gradient is written to `grad`.
    fn batch_loss_grad(&mut self, params: &[f32], batch: &[usize], grad: &mut [f64]) -> f64;
}

/// How the chain is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Init {
    /// A draw from the prior, `N(0, 1/eta)`.
    Prior,
    /// `N(0, std^2)`.
    Gaussian { std: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub n_cycles: usize,
    pub cycle_len: usize,
    /// Fraction of each cycle spent in the sampling phase.
    pub sampling_fraction: f64,
    pub samples_per_cycle: usize,
    pub burn_in: usize,
    pub alpha0: f64,
    pub temperature: f64,
    /// Gaussian prior precision `1 / sigma^2`.
    pub weight_decay: f64,
    /// Posterior scale `N`; the training-set size when absent.
    pub posterior_scale: Option<usize>,
    pub clip_norm: Option<f64>,
    pub batch_size: usize,
    pub init: Init,
    /// Set to false to turn the sampling phase into plain descent.
    pub noise: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_cycles: 8,
            cycle_len: 2500,
            sampling_fraction: 0.25,
            samples_per_cycle: 5,
            burn_in: 2,
            alpha0: 1e-4,
            temperature: 1.0,
            weight_decay: 1e-4,
            posterior_scale: None,
            clip_norm: Some(5.0),
            batch_size: 32,
            init: Init::Gaussian { std: 0.02 },
            noise: true,
        }
    }
}

impl SamplerConfig {
    pub fn total_steps(&self) -> usize {
        self.n_cycles * self.cycle_len
    }

    /// Number of retained snapshots, `(N_cyc - B) * S`.
    pub fn n_samples(&self) -> usize {
        (self.n_cycles - self.burn_in) * self.samples_per_cycle
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(format!("sampler: {m}")));
        if self.n_cycles == 0
            || self.cycle_len == 0
            || self.batch_size == 0
            || self.samples_per_cycle == 0
        {
            return bad(
                "cycle count, cycle length, batch size and samples per cycle must be positive",
            );
        }
        if self.burn_in >= self.n_cycles {
            return bad("burn-in must be smaller than the number of cycles");
        }
        if !(self.sampling_fraction > 0.0 && self.sampling_fraction < 1.0) {
            return bad("sampling fraction must lie in (0, 1)");
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return bad("alpha0 must be positive");
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be non-negative");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight decay must be non-negative");
        }
        if matches!(self.init, Init::Prior) && self.weight_decay == 0.0 {
            return bad("prior initialization needs a positive weight decay");
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return bad("clip norm must be positive");
            }
        }
        if self.posterior_scale == Some(0) {
            return bad("posterior scale must be positive");
        }
        let len = self.cycle_len - sampling_start(self.cycle_len, self.sampling_fraction);
        if self.samples_per_cycle > len {
            return bad("more snapshots per cycle than sampling-phase steps");
        }
        let offsets = collect_offsets(
            self.cycle_len,
            self.sampling_fraction,
            self.samples_per_cycle,
        );
        if offsets.windows(2).any(|w| w[0] == w[1]) {
            return bad("snapshot offsets collide; lower samples per cycle");
        }
        Ok(())
    }

    pub(crate) fn init_std(&self) -> f64 {
        match self.init {
            Init::Prior => 1.0 / math::sqrt(self.weight_decay),
            Init::Gaussian { std } => std,
        }
    }
}

/// Mini-batch stream that reshuffles after every pass over the data.
/// Incomplete tail batches are dropped unless the data is smaller than one
/// batch.
#[derive(Debug, Clone)]
pub struct BatchStream {
    order: Vec<usize>,
    cursor: usize,
    batch_size: usize,
    rng: Rng,
}

impl BatchStream {
    pub fn new(n: usize, batch_size: usize, rng: Rng) -> Self {
        let mut s = Self {
            order: (0..n).collect(),
            cursor: 0,
            batch_size: batch_size.min(n).max(1),
            rng,
        };
        s.order.shuffle(&mut s.rng);
        s
    }

    pub fn next_batch(&mut self) -> &[usize] {
        if self.cursor + self.batch_size > self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        let start = self.cursor;
        self.cursor += self.batch_size;
        &self.order[start..self.cursor]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerRun {
    pub samples: Vec<Vec<f32>>,
    /// Global step index of each snapshot.
    pub steps: Vec<usize>,
    pub final_params: Vec<f32>,
}

/// Random streams used by one sampler run.
pub(crate) struct SamplerStreams {
    pub init: Rng,
    pub batches: Rng,
    pub noise: Rng,
}

impl SamplerStreams {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            init: rng::stream(seed, &["sampler", "init"]),
            batches: rng::stream(seed, &["sampler", "batches"]),
            noise: rng::stream(seed, &["sampler", "noise"]),
        }
    }
}

/// Initial parameters per `config.init`.
pub fn initial_params(config: &SamplerConfig, n_params: usize, seed: u64) -> Vec<f32> {
    let mut streams = SamplerStreams::from_seed(seed);
    draw_init(config, n_params, &mut streams.init)
}

fn draw_init(config: &SamplerConfig, n_params: usize, r: &mut Rng) -> Vec<f32> {
    let std = config.init_std();
    (0..n_params)
        .map(|_| {
            let z: f64 = StandardNormal.sample(r);
            (std * z) as f32
        })
        .collect()
}

/// Run the cyclical sampler on `target`, starting from a draw of
/// `config.init`.
pub fn run_sampler<T: GradientTarget + ?Sized>(
    target: &mut T,
    config: &SamplerConfig,
    seed: u64,
) -> Result<SamplerRun> {
    config.validate()?;
    let mut streams = SamplerStreams::from_seed(seed);
    let init = draw_init(config, target.n_params(), &mut streams.init);
    run_sampler_from(target, config, init, streams.batches, streams.noise)
}

pub fn run_sampler_from<T: GradientTarget + ?Sized>(
    target: &mut T,
    config: &SamplerConfig,
    init: Vec<f32>,
    batch_rng: Rng,
    mut noise_rng: Rng,
) -> Result<SamplerRun> {
    config.validate()?;
    let n_data = target.n_data();
    if n_data == 0 {
        return Err(Error::Empty("training data"));
    }
    if init.len() != target.n_params() {
        return Err(Error::validation(
            "initial parameters do not match the target",
        ));
    }
    let scale = config.posterior_scale.unwrap_or(n_data) as f64;
    let k = config.cycle_len;
    let start = sampling_start(k, config.sampling_fraction);
    let offsets = collect_offsets(k, config.sampling_fraction, config.samples_per_cycle);

    let mut theta = init;
    let mut grad = vec![0.0f64; theta.len()];
    let mut g = vec![0.0f64; theta.len()];
    let mut batches = BatchStream::new(n_data, config.batch_size, batch_rng);
    let mut samples = Vec::with_capacity(config.n_samples());
    let mut steps = Vec::with_capacity(config.n_samples());

    for t in 0..config.total_steps() {
        let alpha = step_size(t, k, config.alpha0);
        let batch = batches.next_batch();
        target.batch_loss_grad(&theta, batch, &mut grad);

        let mut norm2 = 0.0;
        for ((gi, &di), &pi) in g.iter_mut().zip(&grad).zip(&theta) {
            *gi = scale * di + config.weight_decay * pi as f64;
            norm2 += *gi * *gi;
        }
        if let Some(clip) = config.clip_norm {
            let norm = math::sqrt(norm2);
            if norm > clip {
                let f = clip / norm;
                g.iter_mut().for_each(|gi| *gi *= f);
            }
        }

        let in_cycle = t % k;
        if phase(t, k, config.sampling_fraction) == Phase::Sampling {
            if t / k >= config.burn_in && offsets.binary_search(&(in_cycle - start)).is_ok() {
                samples.push(theta.clone());
                steps.push(t);
            }
            let sd = if config.noise {
                math::sqrt(2.0 * alpha * config.temperature)
            } else {
                0.0
            };
            for (p, &gi) in theta.iter_mut().zip(&g) {
                let eps: f64 = StandardNormal.sample(&mut noise_rng);
                *p = (*p as f64 - alpha * gi + sd * eps) as f32;
            }
        } else {
            for (p, &gi) in theta.iter_mut().zip(&g) {
                *p = (*p as f64 - alpha * gi) as f32;
            }
        }

        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: t,
                step_size: alpha,
            });
        }
    }
    debug_assert_eq!(samples.len(), config.n_samples());
    Ok(SamplerRun {
        samples,
        steps,
        final_params: theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Mean squared distance to a fixed point, one "item" per coordinate.
    struct Bowl {
        center: Vec<f64>,
    }

    impl GradientTarget for Bowl {
        fn n_params(&self) -> usize {
            self.center.len()
        }
        fn n_data(&self) -> usize {
            4
        }
        fn batch_loss_grad(&mut self, params: &[f32], _batch: &[usize], grad: &mut [f64]) -> f64 {
            let mut loss = 0.0;
            for ((g, &p), &c) in grad.iter_mut().zip(params).zip(&self.center) {
                *g = p as f64 - c;
                loss += 0.5 * (*g) * (*g);
            }
            loss
        }
    }

    fn small_config() -> SamplerConfig {
        SamplerConfig {
            n_cycles: 4,
            cycle_len: 100,
            samples_per_cycle: 3,
            burn_in: 1,
            alpha0: 0.05,
            clip_norm: None,
            batch_size: 2,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn snapshot_count_is_fixed() {
        let cfg = small_config();
        for seed in [1, 2, 3] {
            let run = run_sampler(
                &mut Bowl {
                    center: vec![1.0, -1.0],
                },
                &cfg,
                seed,
            )
            .unwrap();
            assert_eq!(run.samples.len(), 9);
            assert_eq!(run.steps, vec![181, 187, 193, 281, 287, 293, 381, 387, 393]);
        }
    }

    #[test]
    fn canonical_sample_count() {
        assert_eq!(SamplerConfig::default().n_samples(), 30);
        SamplerConfig::default().validate().unwrap();
    }

    #[test]
    fn degenerate_burn_in_rejected() {
        let cfg = SamplerConfig {
            burn_in: 8,
            ..SamplerConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn same_seed_same_samples() {
        let cfg = small_config();
        let a = run_sampler(
            &mut Bowl {
                center: vec![1.0, -1.0],
            },
            &cfg,
            5,
        )
        .unwrap();
        let b = run_sampler(
            &mut Bowl {
                center: vec![1.0, -1.0],
            },
            &cfg,
            5,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_temperature_is_plain_descent() {
        let cfg = SamplerConfig {
            temperature: 0.0,
            ..small_config()
        };
        let run = run_sampler(
            &mut Bowl {
                center: vec![1.0, -1.0],
            },
            &cfg,
            11,
        )
        .unwrap();
        // Replay the same schedule without any noise term.
        let mut theta = initial_params(&cfg, 2, 11);
        for t in 0..cfg.total_steps() {
            let a = step_size(t, cfg.cycle_len, cfg.alpha0);
            for (p, c) in theta.iter_mut().zip([1.0, -1.0]) {
                let g = cfg.posterior_scale.unwrap_or(4) as f64 * (*p as f64 - c)
                    + cfg.weight_decay * *p as f64;
                *p = (*p as f64 - a * g) as f32;
            }
        }
        assert_eq!(run.final_params, theta);
    }

    #[test]
    fn divergence_reports_step() {
        let cfg = SamplerConfig {
            alpha0: 10.0,
            ..small_config()
        };
        match run_sampler(&mut Bowl { center: vec![1.0] }, &cfg, 1) {
            Err(Error::Divergence { step, step_size }) => {
                assert!(step < 100);
                assert!(step_size > 0.0);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn batch_stream_covers_data_each_pass() {
        let mut s = BatchStream::new(10, 5, rng::from_seed(3));
        let mut seen: Vec<usize> = s.next_batch().to_vec();
        seen.extend_from_slice(s.next_batch());
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }
}
