//! AdamW training for the single-head baselines with early stopping on
//! validation NLL.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::TrainingSet;
use crate::error::{Error, Result};
use crate::math;
use crate::model::{self, HeadWeights};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub clip_norm: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Standard deviation of the Gaussian initialization.
    pub init_std: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            weight_decay: 1e-2,
            batch_size: 32,
            max_epochs: 15,
            patience: 3,
            clip_norm: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            init_std: 0.02,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.learning_rate, self.clip_norm, self.eps, self.init_std];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::config(
                "optimizer: learning rate, clip norm, eps and init std must be positive",
            ));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::config(
                "optimizer: weight decay must be non-negative",
            ));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::config(
                "optimizer: batch size and max epochs must be positive",
            ));
        }
        if self.patience == 0 {
            return Err(Error::config("optimizer: patience must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config(
                "optimizer: moment decay rates must lie in [0, 1)",
            ));
        }
        Ok(())
    }
}

/// Adam with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamW {
    pub fn new(n_params: usize, config: &OptimizerConfig) -> Self {
        Self {
            lr: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            eps: config.eps,
            weight_decay: config.weight_decay,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f32], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let bc2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            let mut p = params[i] as f64;
            p -= self.lr * self.weight_decay * p;
            p -= self.lr * m_hat / (math::sqrt(v_hat) + self.eps);
            params[i] = p as f32;
        }
    }
}

pub(crate) fn clip_in_place(grad: &mut [f64], max_norm: f64) {
    let norm = math::sqrt(grad.iter().map(|g| g * g).sum());
    if norm > max_norm {
        let f = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= f);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_nll: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamWOutcome {
    /// Weights of the epoch with the lowest validation NLL.
    pub weights: HeadWeights,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

/// Hard-label NLL of a single head on `examples` (no dropout).
pub fn validation_nll(theta: &HeadWeights, set: &TrainingSet<'_>, examples: &[usize]) -> f64 {
    let ds = set.dataset;
    let mut z = vec![0.0; theta.classes()];
    let mut total = 0.0;
    for &i in examples {
        let ex = ds.example(i);
        theta.logits_into(ds.features().row(ex.row), &mut z);
        total -= model::log_softmax(&z)[ex.hard_label];
    }
    total / examples.len() as f64
}

/// Train a single head with AdamW. With `dropout` set, inverted dropout is
/// applied to the head input during training.
pub fn train_adamw(
    set: &TrainingSet<'_>,
    config: &OptimizerConfig,
    seed: u64,
    dropout: Option<f64>,
) -> Result<AdamWOutcome> {
    config.validate()?;
    if let Some(p) = dropout {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::config("dropout rate must lie in [0, 1)"));
        }
    }
    if set.train.is_empty() {
        return Err(Error::Empty("training split"));
    }
    let ds = set.dataset;
    let classes = ds.n_categories();
    let dim = ds.features().dim();

    let mut init_rng = rng::stream(seed, &["adamw", "init"]);
    let mut shuffle_rng = rng::stream(seed, &["adamw", "shuffle"]);
    let mut dropout_rng = rng::stream(seed, &["adamw", "dropout"]);

    let mut theta = HeadWeights::gaussian(classes, dim, config.init_std, &mut init_rng);
    let mut opt = AdamW::new(theta.param_count(), config);
    let mut grad = vec![0.0; theta.param_count()];
    let mut order = set.train.clone();

    let mut best: Option<(f64, usize, HeadWeights)> = None;
    let mut since_best = 0;
    let mut history = Vec::new();
    let mut step = 0usize;

    for epoch in 0..config.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for batch in order.chunks(config.batch_size) {
            let loss = batch_grad(&theta, set, batch, dropout, &mut dropout_rng, &mut grad);
            clip_in_place(&mut grad, config.clip_norm);
            opt.step(theta.params_mut(), &grad);
            if theta.params().iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    step,
                    step_size: config.learning_rate,
                });
            }
            loss_sum += loss * batch.len() as f64;
            seen += batch.len();
            step += 1;
        }
        let train_loss = loss_sum / seen as f64;
        let val_nll =
            (!set.validation.is_empty()).then(|| validation_nll(&theta, set, &set.validation));
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_nll,
        });

        // Without a validation split the last epoch wins.
        let score = val_nll.unwrap_or(f64::NEG_INFINITY);
        if !score.is_finite() && val_nll.is_some() {
            return Err(Error::Divergence {
                step,
                step_size: config.learning_rate,
            });
        }
        match &best {
            Some((b, _, _)) if score >= *b && val_nll.is_some() => {
                since_best += 1;
                if since_best >= config.patience {
                    break;
                }
            }
            _ => {
                best = Some((score, epoch, theta.clone()));
                since_best = 0;
            }
        }
    }
    let (_, best_epoch, weights) = best.ok_or_else(|| Error::Empty("epochs"))?;
    Ok(AdamWOutcome {
        weights,
        best_epoch,
        history,
    })
}

fn batch_grad(
    theta: &HeadWeights,
    set: &TrainingSet<'_>,
    batch: &[usize],
    dropout: Option<f64>,
    dropout_rng: &mut Rng,
    grad: &mut [f64],
) -> f64 {
    let ds = set.dataset;
    let mode = set.label_mode;
    model::loss_and_grad(
        theta.params(),
        theta.classes(),
        theta.dim(),
        &mut |i, x| {
            x.copy_from_slice(ds.features().row(ds.example(batch[i]).row));
            if let Some(p) = dropout {
                model::dropout_mask_in_place(x, p, dropout_rng);
            }
        },
        &mut |i, q| ds.example(batch[i]).target_into(mode, q),
        batch.len(),
        grad,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patience_zero_rejected() {
        let cfg = OptimizerConfig {
            patience: 0,
            ..OptimizerConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn adamw_reaches_least_squares_minimizer() {
        // f(w) = 1/2 |A w - y|^2 with a well-conditioned A.
        let a = [[2.0, 0.5], [0.5, 1.0], [1.0, -1.0]];
        let y = [1.0, 2.0, -0.5];
        // Normal equations A^T A w = A^T y.
        let ata = [
            [
                a.iter().map(|r| r[0] * r[0]).sum::<f64>(),
                a.iter().map(|r| r[0] * r[1]).sum::<f64>(),
            ],
            [
                a.iter().map(|r| r[1] * r[0]).sum::<f64>(),
                a.iter().map(|r| r[1] * r[1]).sum::<f64>(),
            ],
        ];
        let aty = [
            a.iter().zip(&y).map(|(r, v)| r[0] * v).sum::<f64>(),
            a.iter().zip(&y).map(|(r, v)| r[1] * v).sum::<f64>(),
        ];
        let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
        let exact = [
            (ata[1][1] * aty[0] - ata[0][1] * aty[1]) / det,
            (ata[0][0] * aty[1] - ata[1][0] * aty[0]) / det,
        ];

        let cfg = OptimizerConfig {
            weight_decay: 0.0,
            learning_rate: 1e-2,
            ..OptimizerConfig::default()
        };
        let mut opt = AdamW::new(2, &cfg);
        let mut w = [0.0f32; 2];
        for t in 0..20_000 {
            if t == 10_000 {
                opt.lr = 1e-4;
            }
            let mut g = [0.0; 2];
            for (r, v) in a.iter().zip(&y) {
                let resid = r[0] * w[0] as f64 + r[1] * w[1] as f64 - v;
                g[0] += resid * r[0];
                g[1] += resid * r[1];
            }
            opt.step(&mut w, &g);
        }
        assert!((w[0] as f64 - exact[0]).abs() < 1e-3, "{w:?} vs {exact:?}");
        assert!((w[1] as f64 - exact[1]).abs() < 1e-3, "{w:?} vs {exact:?}");
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut g = [3.0, 4.0];
        clip_in_place(&mut g, 1.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
    }
}
