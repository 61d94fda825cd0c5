//! Cosine step-size schedule and the exploration/sampling phase split.

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Noise-free gradient descent.
    Exploration,
    /// Langevin updates; snapshots are taken here.
    Sampling,
}

/// `alpha0 / 2 * (1 + cos(pi * (t mod K) / K))`.
pub fn step_size(t: usize, cycle_len: usize, alpha0: f64) -> f64 {
    let r = (t % cycle_len) as f64 / cycle_len as f64;
    alpha0 / 2.0 * (1.0 + math::cos(PI * r))
}

/// Exploration iff `(t mod K) / K < 1 - xi`.
pub fn phase(t: usize, cycle_len: usize, xi: f64) -> Phase {
    let r = (t % cycle_len) as f64 / cycle_len as f64;
    if r < 1.0 - xi {
        Phase::Exploration
    } else {
        Phase::Sampling
    }
}

/// First in-cycle index of the sampling phase (`K` if the phase is empty).
pub fn sampling_start(cycle_len: usize, xi: f64) -> usize {
    (0..cycle_len)
        .find(|&r| phase(r, cycle_len, xi) == Phase::Sampling)
        .unwrap_or(cycle_len)
}

/// Offsets from the sampling-phase start at which snapshots are taken:
/// `floor((j + 1) * L / (S + 1))` for `j = 0..S`, where `L` is the
/// sampling-phase length in steps.
pub fn collect_offsets(cycle_len: usize, xi: f64, samples_per_cycle: usize) -> Vec<usize> {
    let len = cycle_len - sampling_start(cycle_len, xi);
    (0..samples_per_cycle)
        .map(|j| (j + 1) * len / (samples_per_cycle + 1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_endpoints() {
        assert_eq!(step_size(0, 2500, 1e-4), 1e-4);
        assert_eq!(step_size(2500 * 3, 2500, 1e-4), 1e-4);
        assert!((step_size(1250, 2500, 1e-4) - 5e-5).abs() < 1e-20);
        let last = step_size(2499, 2500, 1e-4);
        let direct = 1e-4 / 2.0 * (1.0 + libm::cos(PI * 2499.0 / 2500.0));
        assert_eq!(last, direct);
        assert!(last > 0.0 && last < 1e-10);
    }

    #[test]
    fn schedule_is_periodic() {
        for t in [0usize, 1, 17, 999, 1874, 2499] {
            assert_eq!(step_size(t, 2500, 3e-3), step_size(t + 2500, 2500, 3e-3));
        }
    }

    #[test]
    fn phase_boundaries() {
        assert_eq!(phase(0, 2500, 0.25), Phase::Exploration);
        assert_eq!(phase(1874, 2500, 0.25), Phase::Exploration);
        // (t mod K) / K == 1 - xi falls in the sampling phase.
        assert_eq!(phase(1875, 2500, 0.25), Phase::Sampling);
        assert_eq!(phase(4, 8, 0.5), Phase::Sampling);
        assert_eq!(sampling_start(2500, 0.25), 1875);
    }

    #[test]
    fn canonical_sampling_phase_has_625_steps() {
        let sampling: Vec<usize> = (0..2500)
            .filter(|&t| phase(t, 2500, 0.25) == Phase::Sampling)
            .collect();
        assert_eq!(sampling.len(), 625);
        assert_eq!(sampling[0], 1875);
        assert_eq!(*sampling.last().unwrap(), 2499);
    }

    #[test]
    fn canonical_collect_offsets() {
        assert_eq!(
            collect_offsets(2500, 0.25, 5),
            alloc::vec![104, 208, 312, 416, 520]
        );
    }
}
