//! Temperature scaling.

mod common;

use common::record_from_members;
use posthead_core::calibrate::{
    apply_temperature, fit_temperature, nll_at_temperature, TemperatureSearch,
};
use posthead_core::metrics::nll_hard;
use posthead_core::rng;
use posthead_core::{LabelMode, Method};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

/// Logits whose softmax is the true label distribution: labels are drawn
/// from `softmax(z)`.
fn calibrated(
    n: usize,
    classes: usize,
    seed: u64,
) -> (Vec<posthead_core::PredictiveRecord>, Vec<usize>) {
    let mut r = rng::from_seed(seed);
    let mut records = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let z: Vec<f64> = (0..classes)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut r);
                2.0 * e
            })
            .collect();
        let p = posthead_core::model::softmax(&z);
        let u: f64 = r.random();
        let mut acc = 0.0;
        let y = p.iter().position(|&v| {
            acc += v;
            u < acc
        });
        labels.push(y.unwrap_or(classes - 1));
        records.push(record_from_members(i, &z, classes));
    }
    (records, labels)
}

const RUN: (Method, LabelMode, u64) = (Method::CyclicalSgmcmc, LabelMode::Soft, 42);

#[test]
fn unit_temperature_is_a_bitwise_identity() {
    let (records, _) = calibrated(200, 4, 1);
    assert_eq!(apply_temperature(&records, 1.0, 4).unwrap(), records);
}

#[test]
fn well_specified_logits_fit_near_one() {
    let (records, labels) = calibrated(20_000, 3, 2);
    let fit = fit_temperature(&records, &labels, 3, RUN, TemperatureSearch::default()).unwrap();
    assert!((fit.t_opt - 1.0).abs() < 0.05, "{}", fit.t_opt);
}

#[test]
fn fitting_never_increases_validation_nll() {
    for (seed, scale) in [(3u64, 0.3), (4, 1.0), (5, 4.0)] {
        let (mut records, labels) = calibrated(500, 3, seed);
        records = apply_temperature(&records, 1.0 / scale, 3).unwrap();
        let fit = fit_temperature(&records, &labels, 3, RUN, TemperatureSearch::default()).unwrap();
        assert!(fit.val_nll_after <= fit.val_nll_before + 1e-12);
        let after = apply_temperature(&records, fit.t_opt, 3).unwrap();
        assert!(nll_hard(&after, &labels) <= nll_hard(&records, &labels) + 1e-9);
    }
}

#[test]
fn fitted_temperature_minimizes_nll_on_a_grid() {
    let (records, labels) = calibrated(400, 3, 6);
    let scaled = apply_temperature(&records, 0.4, 3).unwrap();
    let fit = fit_temperature(&scaled, &labels, 3, RUN, TemperatureSearch::default()).unwrap();
    let logits: Vec<&[f64]> = scaled
        .iter()
        .map(|r| r.member_logits.as_deref().unwrap())
        .collect();
    let best = nll_at_temperature(&logits, &labels, 3, fit.t_opt);
    for i in 0..400 {
        let t = 0.05 * (10.0f64 / 0.05).powf(i as f64 / 399.0);
        assert!(
            best <= nll_at_temperature(&logits, &labels, 3, t) + 1e-6,
            "t = {t}"
        );
    }
}
