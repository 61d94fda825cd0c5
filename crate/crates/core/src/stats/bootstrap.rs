//! Percentile bootstrap.

use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::{self, Rng};

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = math::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Central `level` percentile interval of bootstrap statistics. Sorts in
/// place; absent when empty.
pub fn percentile_interval(stats: &mut [f64], level: f64) -> Option<(f64, f64)> {
    if stats.is_empty() {
        return None;
    }
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Some((
        quantile_sorted(stats, tail),
        quantile_sorted(stats, 1.0 - tail),
    ))
}

/// 95% percentile CI of the mean of `values`.
pub fn bootstrap_ci(values: &[f64], n_boot: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = rng::stream(seed, &["stats", "bootstrap"]);
    bootstrap_ci_with(values, n_boot, &mut rng)
}

pub fn bootstrap_ci_with(values: &[f64], n_boot: usize, rng: &mut Rng) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Empty("bootstrap input"));
    }
    if n_boot == 0 {
        return Err(Error::config("bootstrap needs at least one resample"));
    }
    let n = values.len();
    let mut means = Vec::with_capacity(n_boot);
    for _ in 0..n_boot {
        let total = math::sum((0..n).map(|_| values[rng.random_range(0..n)]));
        means.push(total / n as f64);
    }
    Ok(percentile_interval(&mut means, 0.95).expect("nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_gives_point_interval() {
        assert_eq!(bootstrap_ci(&[0.7; 5], 1000, 42).unwrap(), (0.7, 0.7));
    }

    #[test]
    fn reproducible() {
        let v = [0.1, 0.5, 0.2, 0.9, 0.4];
        assert_eq!(
            bootstrap_ci(&v, 1000, 7).unwrap(),
            bootstrap_ci(&v, 1000, 7).unwrap()
        );
    }

    #[test]
    fn quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 0.5), 3.0);
        assert_eq!(quantile_sorted(&s, 0.125), 1.5);
        assert_eq!(quantile_sorted(&s, 1.0), 5.0);
    }
}
