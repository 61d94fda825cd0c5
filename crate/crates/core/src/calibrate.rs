//! Post-hoc temperature scaling.
//!
//! A single scalar `T` divides every member's logits before the softmax;
//! the member distributions are then averaged. `T` is fit on validation
//! hard-label NLL by golden-section search over `log T`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::LabelMode;
use crate::error::{Error, Result};
use crate::math;
use crate::metrics::{spearman, PROB_FLOOR};
use crate::model::softmax_in_place;
use crate::trainers::Method;
use crate::uncertainty::{record_from_logits, PredictiveRecord};

/// Search settings for [`fit_temperature`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemperatureSearch {
    pub t_min: f64,
    pub t_max: f64,
    /// Absolute tolerance on `T`.
    pub tol: f64,
    /// Points of the fallback log-spaced grid.
    pub grid_points: usize,
}

impl Default for TemperatureSearch {
    fn default() -> Self {
        Self {
            t_min: 0.05,
            t_max: 10.0,
            tol: 1e-4,
            grid_points: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureFit {
    pub method: Method,
    pub label_mode: LabelMode,
    pub seed: u64,
    pub t_opt: f64,
    pub val_nll_before: f64,
    pub val_nll_after: f64,
    /// No temperature beat `T = 1`; `t_opt` is then exactly 1.
    pub no_improvement: bool,
    /// The golden-section result failed the bracket check and the grid won.
    pub used_grid: bool,
    pub search: TemperatureSearch,
}

/// Hard-label NLL of the member-averaged prediction at temperature `t`.
/// `logits[i]` holds the `M x C` member logits of example `i`.
pub fn nll_at_temperature(logits: &[&[f64]], labels: &[usize], classes: usize, t: f64) -> f64 {
    let mut buf = Vec::new();
    let mut mean = vec![0.0; classes];
    let mut total = 0.0;
    for (z, &y) in logits.iter().zip(labels) {
        buf.clear();
        buf.extend(z.iter().map(|v| v / t));
        mean.iter_mut().for_each(|v| *v = 0.0);
        let m = buf.len() / classes;
        for row in buf.chunks_exact_mut(classes) {
            softmax_in_place(row);
            for (acc, &p) in mean.iter_mut().zip(row.iter()) {
                *acc += p;
            }
        }
        total -= math::ln((mean[y] / m as f64).max(PROB_FLOOR));
    }
    total / logits.len() as f64
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (math::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while math::exp(b) - math::exp(a) > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Fit `T` on records carrying their member logits.
pub fn fit_temperature(
    records: &[PredictiveRecord],
    labels: &[usize],
    classes: usize,
    run: (Method, LabelMode, u64),
    search: TemperatureSearch,
) -> Result<TemperatureFit> {
    if records.is_empty() {
        return Err(Error::Empty("validation records"));
    }
    if !(search.t_min > 0.0
        && search.t_min < search.t_max
        && search.tol > 0.0
        && search.grid_points >= 2)
    {
        return Err(Error::config(
            "temperature search bracket must satisfy 0 < t_min < t_max",
        ));
    }
    let logits: Vec<&[f64]> = records
        .iter()
        .map(|r| {
            r.member_logits.as_deref().ok_or(Error::validation(
                "records were predicted without member logits",
            ))
        })
        .collect::<Result<_>>()?;
    let objective = |u: f64| nll_at_temperature(&logits, labels, classes, math::exp(u));
    let (lo, hi) = (math::ln(search.t_min), math::ln(search.t_max));

    let mut u = golden_section(&objective, lo, hi, search.tol);
    let mut best = objective(u);
    let mut used_grid = false;
    if best > objective(lo).min(objective(hi)) {
        used_grid = true;
        for k in 0..search.grid_points {
            let g = lo + (hi - lo) * k as f64 / (search.grid_points - 1) as f64;
            let v = objective(g);
            if v < best {
                best = v;
                u = g;
            }
        }
    }
    let before = objective(0.0);
    let (t_opt, after, no_improvement) = if best < before {
        (math::exp(u), best, false)
    } else {
        (1.0, before, true)
    };
    Ok(TemperatureFit {
        method: run.0,
        label_mode: run.1,
        seed: run.2,
        t_opt,
        val_nll_before: before,
        val_nll_after: after,
        no_improvement,
        used_grid,
        search,
    })
}

/// Recompute records at temperature `t` from their retained member logits.
pub fn apply_temperature(
    records: &[PredictiveRecord],
    t: f64,
    classes: usize,
) -> Result<Vec<PredictiveRecord>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::validation("temperature must be positive"));
    }
    records
        .iter()
        .map(|r| {
            let z = r.member_logits.clone().ok_or(Error::validation(
                "records were predicted without member logits",
            ))?;
            Ok(record_from_logits(
                r.example,
                r.id.clone(),
                z,
                classes,
                t,
                true,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankStability {
    pub confidence_rho: Option<f64>,
    pub entropy_rho: Option<f64>,
}

/// Spearman correlation of top-1 confidence and of total entropy between
/// aligned records before and after calibration.
pub fn rank_stability(before: &[PredictiveRecord], after: &[PredictiveRecord]) -> RankStability {
    let conf = |rs: &[PredictiveRecord]| rs.iter().map(|r| r.confidence()).collect::<Vec<_>>();
    let ent = |rs: &[PredictiveRecord]| rs.iter().map(|r| r.h_tot).collect::<Vec<_>>();
    RankStability {
        confidence_rho: spearman(&conf(before), &conf(after)),
        entropy_rho: spearman(&ent(before), &ent(after)),
    }
}
