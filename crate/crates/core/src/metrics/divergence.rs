//! Divergences between annotator distributions and predictions.

use crate::math;
use crate::metrics::calibration::PROB_FLOOR;

/// Jensen-Shannon divergence in bits (bounded by 1).
pub fn jsd_bits(q: &[f64], p: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in q.iter().zip(p) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            total += 0.5 * a * math::log2(a / m);
        }
        if b > 0.0 {
            total += 0.5 * b * math::log2(b / m);
        }
    }
    total.max(0.0)
}

/// `KL(q || p)` in nats with `p` floored at [`PROB_FLOOR`].
pub fn kl_nats(q: &[f64], p: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in q.iter().zip(p) {
        if a > 0.0 {
            total += a * (math::ln(a) - math::ln(b.max(PROB_FLOOR)));
        }
    }
    total
}

/// Total variation distance `1/2 sum |q - p|`.
pub fn tv(q: &[f64], p: &[f64]) -> f64 {
    0.5 * math::sum(q.iter().zip(p).map(|(a, b)| math::abs(a - b)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceSummary {
    pub jsd_bits: f64,
    pub kl_nats: f64,
    pub tv: f64,
}

/// Per-example divergences averaged over aligned `(q, p)` pairs.
pub fn divergence_summary<'a>(
    pairs: impl IntoIterator<Item = (&'a [f64], &'a [f64])>,
) -> DivergenceSummary {
    let (mut j, mut k, mut t, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (q, p) in pairs {
        j += jsd_bits(q, p);
        k += kl_nats(q, p);
        t += tv(q, p);
        n += 1;
    }
    let n = n.max(1) as f64;
    DivergenceSummary {
        jsd_bits: j / n,
        kl_nats: k / n,
        tv: t / n,
    }
}
