//! The statistical protocol over per-seed run results.

pub mod anova;
pub mod bootstrap;
pub mod dist;
pub mod paired;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use anova::{
    anova_balanced, anova_two_way_type2, one_way_anova, AnovaOneWay, AnovaTwoWay, FactorRow,
};
pub use bootstrap::{bootstrap_ci, percentile_interval};
pub use dist::{f_upper, inc_beta, t_two_sided};
pub use paired::{
    cohens_d_paired, cohens_d_pooled, holm, paired_t, paired_t_holm, strict_dominance, Direction,
    Dominance, DominanceEvidence, EffectConvention, PairedT, TestResult,
};

use crate::data::LabelMode;
use crate::trainers::Method;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub method: Method,
    pub label_mode: LabelMode,
    pub seed: u64,
    pub value: f64,
}

/// One metric across the runs of a grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTable {
    pub rows: Vec<RunRow>,
}

impl RunTable {
    /// Values of one method and label mode, ordered by seed.
    pub fn series(&self, method: Method, label_mode: LabelMode) -> Vec<f64> {
        let mut rows: Vec<&RunRow> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.label_mode == label_mode)
            .collect();
        rows.sort_by_key(|r| r.seed);
        rows.into_iter().map(|r| r.value).collect()
    }

    /// Baseline series keyed by method name, for one label mode.
    pub fn baselines(&self, label_mode: LabelMode) -> BTreeMap<String, Vec<f64>> {
        Method::ALL
            .iter()
            .filter(|m| m.is_baseline())
            .map(|&m| (String::from(m.as_str()), self.series(m, label_mode)))
            .filter(|(_, v)| !v.is_empty())
            .collect()
    }
}
