//! Evaluation metrics over predictive records.
//!
//! Calibration (ECE, Brier, NLL) is scored against the hard label;
//! divergences (JSD in bits, KL in nats, TV) against the annotator vote
//! distribution; the per-category Spearman correlation pairs mean
//! aleatoric entropy with the disagreement rate; selective prediction uses
//! total, epistemic or aleatoric entropy as the rejector.

pub mod calibration;
pub mod classification;
pub mod divergence;
pub mod rank;
pub mod selective;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use calibration::{
    brier_multiclass, ece, ece_from_bins, nll_hard, reliability_bins, ReliabilityBin, PROB_FLOOR,
};
pub use classification::{accuracy_macro_f1, failure_entropy_ratio, failure_listing};
pub use divergence::{divergence_summary, jsd_bits, kl_nats, tv, DivergenceSummary};
pub use rank::{
    average_ranks, bootstrap_rho_ci, spearman, spearman_per_category, CategoryCorrelation,
    CategoryRow,
};
pub use selective::{aurc, auroc, risk_coverage, RiskCoverage};

use crate::data::{Dataset, LabelMode, Split, MIN_CATEGORY_SUPPORT};
use crate::error::{Error, Result};
use crate::math;
use crate::rng;
use crate::trainers::Method;
use crate::uncertainty::PredictiveRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rejector {
    Total,
    Epistemic,
    Aleatoric,
}

impl Rejector {
    pub const ALL: [Rejector; 3] = [Rejector::Total, Rejector::Epistemic, Rejector::Aleatoric];

    pub fn score(self, r: &PredictiveRecord) -> f64 {
        match self {
            Rejector::Total => r.h_tot,
            Rejector::Epistemic => r.h_epi,
            Rejector::Aleatoric => r.h_ale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricSettings {
    pub n_bins: usize,
    pub prob_floor: f64,
    pub min_support: usize,
    pub n_boot: usize,
}

impl Default for MetricSettings {
    fn default() -> Self {
        Self {
            n_bins: 15,
            prob_floor: PROB_FLOOR,
            min_support: MIN_CATEGORY_SUPPORT,
            n_boot: 1000,
        }
    }
}

/// Which run produced a set of records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunKey {
    pub method: Method,
    pub label_mode: LabelMode,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub split: Split,
    pub label_mode: LabelMode,
    pub method: Method,
    pub seed: u64,
    pub n_examples: usize,
    pub ece: f64,
    pub brier: f64,
    pub nll_nats: f64,
    pub jsd_bits: f64,
    pub kl_nats: f64,
    pub tv: f64,
    pub spearman_rho: Option<f64>,
    pub spearman_ci: Option<(f64, f64)>,
    pub spearman_k: usize,
    pub per_category: Vec<CategoryRow>,
    pub aurc_total: f64,
    pub auroc_total: Option<f64>,
    pub aurc_epi: f64,
    pub auroc_epi: Option<f64>,
    pub aurc_ale: f64,
    pub auroc_ale: Option<f64>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub failure_entropy_ratio: Option<f64>,
    pub mean_h_tot_nats: f64,
    pub mean_h_ale_nats: f64,
    pub mean_h_epi_nats: f64,
    pub reliability: Vec<ReliabilityBin>,
    pub settings: MetricSettings,
}

impl MetricReport {
    /// Look up a scalar metric by its report field name.
    pub fn scalar(&self, name: &str) -> Option<f64> {
        Some(match name {
            "ece" => self.ece,
            "brier" => self.brier,
            "nll_nats" | "nll" => self.nll_nats,
            "jsd_bits" | "jsd" => self.jsd_bits,
            "kl_nats" | "kl" => self.kl_nats,
            "tv" => self.tv,
            "spearman_rho" | "spearman" => return self.spearman_rho,
            "aurc_total" => self.aurc_total,
            "auroc_total" => return self.auroc_total,
            "aurc_epi" => self.aurc_epi,
            "auroc_epi" => return self.auroc_epi,
            "aurc_ale" => self.aurc_ale,
            "auroc_ale" => return self.auroc_ale,
            "accuracy" => self.accuracy,
            "macro_f1" => self.macro_f1,
            "failure_entropy_ratio" => return self.failure_entropy_ratio,
            "mean_h_tot_nats" => self.mean_h_tot_nats,
            "mean_h_ale_nats" => self.mean_h_ale_nats,
            "mean_h_epi_nats" => self.mean_h_epi_nats,
            _ => return None,
        })
    }

    /// Names accepted by [`MetricReport::scalar`], in report order.
    pub const SCALARS: [&'static str; 19] = [
        "ece",
        "brier",
        "nll_nats",
        "jsd_bits",
        "kl_nats",
        "tv",
        "spearman_rho",
        "aurc_total",
        "auroc_total",
        "aurc_epi",
        "auroc_epi",
        "aurc_ale",
        "auroc_ale",
        "accuracy",
        "macro_f1",
        "failure_entropy_ratio",
        "mean_h_tot_nats",
        "mean_h_ale_nats",
        "mean_h_epi_nats",
    ];
}

/// Evaluate `records` (all drawn from `split` of `dataset`) with the full
/// metric suite. `disagreement` holds the per-category rate used for the
/// Spearman analysis.
pub fn evaluate(
    records: &[PredictiveRecord],
    dataset: &Dataset,
    split: Split,
    run: RunKey,
    disagreement: &[Option<f64>],
    settings: MetricSettings,
) -> Result<MetricReport> {
    if records.is_empty() {
        return Err(Error::Empty("records to evaluate"));
    }
    let labels: Vec<usize> = records
        .iter()
        .map(|r| dataset.example(r.example).hard_label)
        .collect();
    let correct: Vec<bool> = records
        .iter()
        .zip(&labels)
        .map(|(r, &y)| r.predicted() == y)
        .collect();

    let bins = reliability_bins(records, &labels, settings.n_bins);
    let div = divergence_summary(records.iter().map(|r| {
        (
            dataset.example(r.example).soft_label.as_slice(),
            r.mean_dist.as_slice(),
        )
    }));
    let corr = spearman_per_category(records, &labels, disagreement, settings.min_support);
    let mut boot_rng = rng::stream(run.seed, &["metrics", "spearman-bootstrap", split.as_str()]);
    let spearman_ci = bootstrap_rho_ci(&corr.pairs(), settings.n_boot, &mut boot_rng);

    let selective = |rej: Rejector| -> Result<(f64, Option<f64>)> {
        let scores: Vec<f64> = records.iter().map(|r| rej.score(r)).collect();
        Ok((aurc(&scores, &correct)?, auroc(&scores, &correct)))
    };
    let (aurc_total, auroc_total) = selective(Rejector::Total)?;
    let (aurc_epi, auroc_epi) = selective(Rejector::Epistemic)?;
    let (aurc_ale, auroc_ale) = selective(Rejector::Aleatoric)?;
    let (accuracy, macro_f1) = accuracy_macro_f1(records, &labels, dataset.n_categories());
    let n = records.len() as f64;

    Ok(MetricReport {
        split,
        label_mode: run.label_mode,
        method: run.method,
        seed: run.seed,
        n_examples: records.len(),
        ece: ece_from_bins(&bins),
        brier: brier_multiclass(records, &labels),
        nll_nats: nll_hard(records, &labels),
        jsd_bits: div.jsd_bits,
        kl_nats: div.kl_nats,
        tv: div.tv,
        spearman_rho: corr.rho,
        spearman_ci,
        spearman_k: corr.k,
        per_category: corr.table,
        aurc_total,
        auroc_total,
        aurc_epi,
        auroc_epi,
        aurc_ale,
        auroc_ale,
        accuracy,
        macro_f1,
        failure_entropy_ratio: failure_entropy_ratio(records, &labels),
        mean_h_tot_nats: math::sum(records.iter().map(|r| r.h_tot)) / n,
        mean_h_ale_nats: math::sum(records.iter().map(|r| r.h_ale)) / n,
        mean_h_epi_nats: math::sum(records.iter().map(|r| r.h_epi)) / n,
        reliability: bins,
        settings,
    })
}
