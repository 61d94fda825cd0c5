//! The linear classification head.
//!
//! Parameters are stored as `f32`; logits, losses and gradients are
//! accumulated in `f64`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::math;
use crate::rng::Rng;

/// `W` (`classes x dim`, row-major) followed by `b` (`classes`), flattened.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadWeights {
    classes: usize,
    dim: usize,
    params: Vec<f32>,
}

impl HeadWeights {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            classes,
            dim,
            params: vec![0.0; classes * dim + classes],
        }
    }

    pub fn from_parts(classes: usize, dim: usize, w: &[f32], b: &[f32]) -> Result<Self> {
        if w.len() != classes * dim || b.len() != classes {
            return Err(Error::validation(
                "weight shapes do not match classes x dim",
            ));
        }
        let mut params = Vec::with_capacity(w.len() + b.len());
        params.extend_from_slice(w);
        params.extend_from_slice(b);
        Self::from_flat(classes, dim, params)
    }

    pub fn from_flat(classes: usize, dim: usize, params: Vec<f32>) -> Result<Self> {
        if params.len() != classes * dim + classes {
            return Err(Error::validation(
                "flat parameter length does not match classes x dim + classes",
            ));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("head weights must be finite"));
        }
        Ok(Self {
            classes,
            dim,
            params,
        })
    }

    /// Entries drawn iid from `N(0, std^2)`.
    pub fn gaussian(classes: usize, dim: usize, std: f64, rng: &mut Rng) -> Self {
        let params = (0..classes * dim + classes)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                (std * z) as f32
            })
            .collect();
        Self {
            classes,
            dim,
            params,
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f32] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<f32> {
        self.params
    }

    pub fn w(&self) -> &[f32] {
        &self.params[..self.classes * self.dim]
    }

    pub fn b(&self) -> &[f32] {
        &self.params[self.classes * self.dim..]
    }

    /// Logits for a single input vector.
    pub fn logits_into(&self, x: &[f32], out: &mut [f64]) {
        head_logits(&self.params, self.classes, self.dim, x, out);
    }
}

#[inline]
pub(crate) fn head_logits(params: &[f32], classes: usize, dim: usize, x: &[f32], out: &mut [f64]) {
    let (w, b) = params.split_at(classes * dim);
    for c in 0..classes {
        let row = &w[c * dim..(c + 1) * dim];
        let mut acc = b[c] as f64;
        for (wi, xi) in row.iter().zip(x) {
            acc += *wi as f64 * *xi as f64;
        }
        out[c] = acc;
    }
}

/// `z = x W^T + b` for each of `rows`, as a `rows.len() x C` matrix.
pub fn logits(theta: &HeadWeights, rows: &[usize], features: &FeatureMatrix) -> Result<Vec<f64>> {
    check_dims(theta, features)?;
    let c = theta.classes;
    let mut out = vec![0.0; rows.len() * c];
    for (i, &r) in rows.iter().enumerate() {
        let z = &mut out[i * c..(i + 1) * c];
        theta.logits_into(features.row(r), z);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: r });
        }
    }
    Ok(out)
}

fn check_dims(theta: &HeadWeights, features: &FeatureMatrix) -> Result<()> {
    if theta.dim != features.dim() {
        return Err(Error::validation(alloc::format!(
            "head expects dimension {}, features have {}",
            theta.dim,
            features.dim()
        )));
    }
    Ok(())
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let mut p = z.to_vec();
    softmax_in_place(&mut p);
    p
}

pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = math::exp(*v - max);
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}

/// `log softmax(z)`, computed without forming the probabilities.
pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + math::ln(math::sum(z.iter().map(|v| math::exp(v - max))));
    z.iter().map(|v| v - lse).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    /// Mean soft-target cross-entropy in nats.
    pub value: f64,
    /// `d value / d logits`, same layout as the logit batch.
    pub grad_logits: Vec<f64>,
}

/// `-(1/B) sum_i sum_c q_ic log softmax(z_i)_c` and its logit gradient
/// `(p - q) / B`.
pub fn soft_cross_entropy(logits: &[f64], targets: &[f64], classes: usize) -> Result<LossValue> {
    if logits.len() != targets.len() || classes == 0 || logits.len() % classes != 0 {
        return Err(Error::validation(
            "logit and target batches differ in shape",
        ));
    }
    if targets.iter().any(|&q| q < 0.0 || !q.is_finite()) {
        return Err(Error::validation("targets must be non-negative"));
    }
    let batch = logits.len() / classes;
    if batch == 0 {
        return Err(Error::Empty("loss batch"));
    }
    let inv = 1.0 / batch as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; logits.len()];
    for i in 0..batch {
        let z = &logits[i * classes..(i + 1) * classes];
        let q = &targets[i * classes..(i + 1) * classes];
        let logp = log_softmax(z);
        for c in 0..classes {
            if q[c] > 0.0 {
                value -= q[c] * logp[c];
            }
            grad[i * classes + c] = (math::exp(logp[c]) - q[c]) * inv;
        }
    }
    Ok(LossValue {
        value: value * inv,
        grad_logits: grad,
    })
}

/// Batch loss and parameter gradient of the head in one pass.
///
/// `target(i, out)` fills the target distribution for the `i`-th batch
/// position. The gradient is written into `grad` (same layout as the flat
/// parameters) and the mean loss is returned.
pub(crate) fn loss_and_grad(
    params: &[f32],
    classes: usize,
    dim: usize,
    inputs: &mut dyn FnMut(usize, &mut [f32]),
    targets: &mut dyn FnMut(usize, &mut [f64]),
    batch: usize,
    grad: &mut [f64],
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let inv = 1.0 / batch as f64;
    let mut x = vec![0.0f32; dim];
    let mut z = vec![0.0f64; classes];
    let mut q = vec![0.0f64; classes];
    let mut loss = 0.0;
    let (gw, gb) = grad.split_at_mut(classes * dim);
    for i in 0..batch {
        inputs(i, &mut x);
        targets(i, &mut q);
        head_logits(params, classes, dim, &x, &mut z);
        let logp = log_softmax(&z);
        for c in 0..classes {
            if q[c] > 0.0 {
                loss -= q[c] * logp[c];
            }
            let d = (math::exp(logp[c]) - q[c]) * inv;
            gb[c] += d;
            let row = &mut gw[c * dim..(c + 1) * dim];
            for (g, xi) in row.iter_mut().zip(&x) {
                *g += d * *xi as f64;
            }
        }
    }
    loss * inv
}

/// Loss and full parameter gradient of `theta` on `rows` against `targets`
/// (row-major `rows.len() x C`).
pub fn head_loss_gradient(
    theta: &HeadWeights,
    rows: &[usize],
    features: &FeatureMatrix,
    targets: &[f64],
) -> Result<(f64, Vec<f64>)> {
    check_dims(theta, features)?;
    let c = theta.classes;
    if targets.len() != rows.len() * c {
        return Err(Error::validation("target batch does not match rows"));
    }
    if targets.iter().any(|&q| q < 0.0) {
        return Err(Error::validation("targets must be non-negative"));
    }
    if rows.is_empty() {
        return Err(Error::Empty("loss batch"));
    }
    let mut grad = vec![0.0; theta.param_count()];
    let loss = loss_and_grad(
        &theta.params,
        c,
        theta.dim,
        &mut |i, x| x.copy_from_slice(features.row(rows[i])),
        &mut |i, q| q.copy_from_slice(&targets[i * c..(i + 1) * c]),
        rows.len(),
        &mut grad,
    );
    Ok((loss, grad))
}

/// Apply inverted dropout with rate `p` to `x` in place.
pub fn dropout_mask_in_place(x: &mut [f32], p: f64, rng: &mut Rng) {
    if p <= 0.0 {
        return;
    }
    let scale = (1.0 / (1.0 - p)) as f32;
    for v in x.iter_mut() {
        if rng.random::<f64>() < p {
            *v = 0.0;
        } else {
            *v *= scale;
        }
    }
}

/// Logits with an independent Bernoulli(1 - p) mask per input coordinate
/// per row, rescaled by `1 / (1 - p)`.
pub fn dropout_forward(
    theta: &HeadWeights,
    rows: &[usize],
    features: &FeatureMatrix,
    p: f64,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::config("dropout rate must lie in [0, 1)"));
    }
    if p == 0.0 {
        return logits(theta, rows, features);
    }
    check_dims(theta, features)?;
    let c = theta.classes;
    let mut out = vec![0.0; rows.len() * c];
    let mut x = vec![0.0f32; theta.dim];
    for (i, &r) in rows.iter().enumerate() {
        x.copy_from_slice(features.row(r));
        dropout_mask_in_place(&mut x, p, rng);
        let z = &mut out[i * c..(i + 1) * c];
        theta.logits_into(&x, z);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: r });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn features(n: usize, d: usize, seed: u64) -> FeatureMatrix {
        let mut r = rng::from_seed(seed);
        let vals = (0..n * d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut r);
                z as f32
            })
            .collect();
        FeatureMatrix::new(n, d, vals).unwrap()
    }

    #[test]
    fn zero_head_gives_zero_logits() {
        let f = features(3, 4, 1);
        let z = logits(&HeadWeights::zeros(2, 4), &[0, 1, 2], &f).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_block() {
        let w = [1.0, 0.0, 0.0, 1.0];
        let theta = HeadWeights::from_parts(2, 2, &w, &[0.0, 0.0]).unwrap();
        let f = FeatureMatrix::new(1, 2, vec![1.0, 0.0]).unwrap();
        assert_eq!(logits(&theta, &[0], &f).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn logits_match_triple_loop() {
        let f = features(5, 7, 2);
        let mut r = rng::from_seed(3);
        let theta = HeadWeights::gaussian(4, 7, 0.5, &mut r);
        let rows = [4, 0, 2];
        let z = logits(&theta, &rows, &f).unwrap();
        for (i, &row) in rows.iter().enumerate() {
            for c in 0..4 {
                let mut naive = theta.b()[c] as f64;
                for k in 0..7 {
                    naive += theta.w()[c * 7 + k] as f64 * f.row(row)[k] as f64;
                }
                let got = z[i * 4 + c];
                assert!((got - naive).abs() <= 1e-6 * naive.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn softmax_cases() {
        let p = softmax(&[0.0; 5]);
        assert!(p.iter().all(|&v| (v - 0.2).abs() < 1e-15));
        let p = softmax(&[1000.0, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1] < 1e-300);
        // Reference values of e^z / sum e^z for z = (1, 2, 3).
        let e = [core::f64::consts::E, 7.38905609893065, 20.085536923187668];
        let s: f64 = e.iter().sum();
        let p = softmax(&[1.0, 2.0, 3.0]);
        for k in 0..3 {
            assert!((p[k] - e[k] / s).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_soft_target_loss_is_ln2() {
        let l = soft_cross_entropy(&[0.0, 0.0], &[0.5, 0.5], 2).unwrap();
        assert!((l.value - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(l.grad_logits, vec![0.0, 0.0]);
    }

    #[test]
    fn confident_correct_loss_vanishes() {
        let l = soft_cross_entropy(&[50.0, 0.0, 0.0], &[1.0, 0.0, 0.0], 3).unwrap();
        assert!(l.value < 1e-20);
    }

    #[test]
    fn negative_targets_rejected() {
        assert!(matches!(
            soft_cross_entropy(&[0.0, 0.0], &[1.5, -0.5], 2),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn one_hot_equals_nll() {
        let z = [0.3, -1.2, 2.0];
        let l = soft_cross_entropy(&z, &[0.0, 1.0, 0.0], 3).unwrap();
        assert_eq!(l.value, -log_softmax(&z)[1]);
    }

    #[test]
    fn dropout_zero_rate_is_identity() {
        let f = features(4, 6, 5);
        let mut r = rng::from_seed(1);
        let theta = HeadWeights::gaussian(3, 6, 1.0, &mut r);
        let rows = [0, 1, 2, 3];
        assert_eq!(
            dropout_forward(&theta, &rows, &f, 0.0, &mut r).unwrap(),
            logits(&theta, &rows, &f).unwrap()
        );
    }

    #[test]
    fn dropout_is_seed_deterministic() {
        let f = features(4, 6, 5);
        let theta = HeadWeights::gaussian(3, 6, 1.0, &mut rng::from_seed(1));
        let a = dropout_forward(&theta, &[0, 1, 2, 3], &f, 0.5, &mut rng::from_seed(9)).unwrap();
        let b = dropout_forward(&theta, &[0, 1, 2, 3], &f, 0.5, &mut rng::from_seed(9)).unwrap();
        assert_eq!(a, b);
        assert!(dropout_forward(&theta, &[0], &f, 1.0, &mut rng::from_seed(9)).is_err());
    }
}
