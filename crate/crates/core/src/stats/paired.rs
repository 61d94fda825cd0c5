//! Paired t-tests with Holm step-down correction, effect sizes and the
//! strict-dominance rule.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::bootstrap::bootstrap_ci;
use super::dist::t_two_sided;
use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedT {
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub df: usize,
    /// Absent when the differences have zero variance.
    pub t: Option<f64>,
    pub p: Option<f64>,
}

/// Two-sided paired t-test on `a - b`.
pub fn paired_t(a: &[f64], b: &[f64]) -> Result<PairedT> {
    if a.len() != b.len() {
        return Err(Error::validation("paired samples differ in length"));
    }
    if a.len() < 2 {
        return Err(Error::Empty("paired t-test needs two or more pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    let mean = math::mean(&d);
    let sd = math::sqrt(math::variance(&d));
    let (t, p) = if sd > 0.0 {
        let t = mean / (sd / math::sqrt(n as f64));
        (Some(t), Some(t_two_sided(t, (n - 1) as f64)))
    } else {
        (None, None)
    };
    Ok(PairedT {
        mean_diff: mean,
        sd_diff: sd,
        df: n - 1,
        t,
        p,
    })
}

/// Holm step-down adjustment; output is in input order.
pub fn holm(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut out = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        let adj = ((m - rank) as f64 * p[i]).min(1.0);
        running = running.max(adj);
        out[i] = running;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectConvention {
    /// Mean difference over the SD of the differences.
    Paired,
    /// Mean difference over the pooled SD of the two groups.
    Pooled,
}

pub fn cohens_d_paired(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = math::mean(&d);
    if mean == 0.0 {
        return Some(0.0);
    }
    let sd = math::sqrt(math::variance(&d));
    (sd > 0.0).then(|| mean / sd)
}

pub fn cohens_d_pooled(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let diff = math::mean(a) - math::mean(b);
    if diff == 0.0 {
        return Some(0.0);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled =
        ((na - 1.0) * math::variance(a) + (nb - 1.0) * math::variance(b)) / (na + nb - 2.0);
    (pooled > 0.0).then(|| diff / math::sqrt(pooled))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub comparison: String,
    pub mean_diff: f64,
    pub t: Option<f64>,
    pub df: usize,
    pub p_raw: Option<f64>,
    pub p_holm: Option<f64>,
    /// Set when the differences have zero variance and no test was run.
    pub degenerate: bool,
    pub cohens_d_paired: Option<f64>,
    pub cohens_d_pooled: Option<f64>,
    /// Bootstrap CI of the mean paired difference.
    pub ci: (f64, f64),
}

/// Paired t-tests of `proposed` against each baseline (values aligned by
/// seed), Holm-corrected over the baselines that could be tested.
pub fn paired_t_holm(
    proposed: &[f64],
    baselines: &BTreeMap<String, Vec<f64>>,
    n_boot: usize,
    seed: u64,
) -> Result<BTreeMap<String, TestResult>> {
    let mut out = BTreeMap::new();
    let mut tested = Vec::new();
    for (name, base) in baselines {
        let t = paired_t(proposed, base)?;
        let diffs: Vec<f64> = proposed.iter().zip(base).map(|(x, y)| x - y).collect();
        let ci = bootstrap_ci(&diffs, n_boot, seed)?;
        if let Some(p) = t.p {
            tested.push((name.clone(), p));
        }
        out.insert(
            name.clone(),
            TestResult {
                comparison: name.clone(),
                mean_diff: t.mean_diff,
                t: t.t,
                df: t.df,
                p_raw: t.p,
                p_holm: None,
                degenerate: t.t.is_none(),
                cohens_d_paired: cohens_d_paired(proposed, base),
                cohens_d_pooled: cohens_d_pooled(proposed, base),
                ci,
            },
        );
    }
    let raw: Vec<f64> = tested.iter().map(|t| t.1).collect();
    for ((name, _), adj) in tested.iter().zip(holm(&raw)) {
        out.get_mut(name).expect("tested baseline").p_holm = Some(adj);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    LowerIsBetter,
    HigherIsBetter,
}

impl Direction {
    /// Whether `proposed - baseline` is a strict improvement.
    pub fn improves(self, diff: f64) -> bool {
        match self {
            Direction::LowerIsBetter => diff < 0.0,
            Direction::HigherIsBetter => diff > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceEvidence {
    pub baseline: String,
    /// Per-seed `proposed - baseline`.
    pub diffs: Vec<f64>,
    pub all_improve: bool,
    pub p_holm: Option<f64>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub dominates: bool,
    pub evidence: Vec<DominanceEvidence>,
}

/// Strict dominance: every per-seed difference improves on every baseline,
/// and every Holm-adjusted p falls below `alpha`.
pub fn strict_dominance(
    proposed: &[f64],
    baselines: &BTreeMap<String, Vec<f64>>,
    direction: Direction,
    alpha: f64,
) -> Result<Dominance> {
    let mut names = Vec::new();
    let mut tests = Vec::new();
    for (name, base) in baselines {
        names.push(name.clone());
        tests.push(paired_t(proposed, base)?);
    }
    let tested: Vec<(usize, f64)> = tests
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.p.map(|p| (i, p)))
        .collect();
    let adjusted = holm(&tested.iter().map(|t| t.1).collect::<Vec<_>>());
    let mut p_holm = vec![None; names.len()];
    for ((i, _), adj) in tested.iter().zip(adjusted) {
        p_holm[*i] = Some(adj);
    }
    let mut evidence = Vec::new();
    for (i, (name, base)) in baselines.iter().enumerate() {
        let diffs: Vec<f64> = proposed.iter().zip(base).map(|(x, y)| x - y).collect();
        let all_improve = diffs.iter().all(|&d| direction.improves(d));
        let significant = p_holm[i].is_some_and(|p| p < alpha);
        evidence.push(DominanceEvidence {
            baseline: name.clone(),
            diffs,
            all_improve,
            p_holm: p_holm[i],
            significant,
        });
    }
    let dominates = !evidence.is_empty() && evidence.iter().all(|e| e.all_improve && e.significant);
    Ok(Dominance {
        dominates,
        evidence,
    })
}
