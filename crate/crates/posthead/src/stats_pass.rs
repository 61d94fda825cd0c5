//! The statistical protocol over a finished grid.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use posthead_core::metrics::MetricReport;
use posthead_core::rng;
use posthead_core::stats::{
    anova_two_way_type2, paired_t_holm, strict_dominance, AnovaTwoWay, Direction, Dominance,
    RunRow, RunTable, TestResult,
};
use posthead_core::{LabelMode, Method, Split};
use serde::{Deserialize, Serialize};

use crate::config::StatsConfig;
use crate::runner::RunOutput;

/// Which way a metric improves; `None` for descriptive quantities.
pub fn direction(metric: &str) -> Option<Direction> {
    match metric {
        "ece" | "brier" | "nll_nats" | "jsd_bits" | "kl_nats" | "tv" | "aurc_total"
        | "aurc_epi" | "aurc_ale" => Some(Direction::LowerIsBetter),
        "spearman_rho" | "auroc_total" | "auroc_epi" | "auroc_ale" | "accuracy" | "macro_f1" => {
            Some(Direction::HigherIsBetter)
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub label_mode: LabelMode,
    pub tests: BTreeMap<String, TestResult>,
    pub dominance: Option<Dominance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub split: Split,
    pub metric: String,
    pub table: RunTable,
    pub anova: Option<AnovaTwoWay>,
    pub comparisons: Vec<Comparison>,
    /// Why a step was skipped.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridStats {
    pub alpha: f64,
    pub metrics: Vec<MetricStats>,
}

fn table_for(runs: &[RunOutput], split: Split, metric: &str) -> RunTable {
    let rows = runs
        .iter()
        .filter_map(|r| {
            let value = r.report(split)?.scalar(metric)?;
            Some(RunRow {
                method: r.key.method,
                label_mode: r.key.label_mode,
                seed: r.key.seed,
                value,
            })
        })
        .collect();
    RunTable { rows }
}

/// ANOVA, paired tests and dominance for every scored split and metric.
pub fn grid_stats(runs: &[RunOutput], config: &StatsConfig) -> GridStats {
    let mut splits: Vec<Split> = runs
        .iter()
        .flat_map(|r| r.reports.iter().map(|m| m.split))
        .collect();
    splits.sort();
    splits.dedup();
    let mut metrics = Vec::new();
    for split in splits {
        for metric in MetricReport::SCALARS {
            metrics.push(metric_stats(runs, split, metric, config));
        }
    }
    GridStats {
        alpha: config.alpha,
        metrics,
    }
}

pub fn metric_stats(
    runs: &[RunOutput],
    split: Split,
    metric: &str,
    config: &StatsConfig,
) -> MetricStats {
    let table = table_for(runs, split, metric);
    let mut notes = Vec::new();
    let anova = match anova_two_way_type2(&table) {
        Ok(a) => Some(a),
        Err(e) => {
            notes.push(format!("anova: {e}"));
            None
        }
    };
    let mut label_modes: Vec<LabelMode> = table.rows.iter().map(|r| r.label_mode).collect();
    label_modes.sort();
    label_modes.dedup();
    let mut comparisons = Vec::new();
    for label_mode in label_modes {
        let proposed = table.series(Method::CyclicalSgmcmc, label_mode);
        let baselines = table.baselines(label_mode);
        if proposed.is_empty() || baselines.is_empty() {
            continue;
        }
        let seed = rng::derive_seed(0, &["stats", split.as_str(), metric, label_mode.as_str()]);
        let tests = match paired_t_holm(&proposed, &baselines, config.n_boot, seed) {
            Ok(t) => t,
            Err(e) => {
                notes.push(format!("{} paired tests: {e}", label_mode.as_str()));
                continue;
            }
        };
        let dominance = direction(metric).and_then(|d| {
            match strict_dominance(&proposed, &baselines, d, config.alpha) {
                Ok(dom) => Some(dom),
                Err(e) => {
                    notes.push(format!("{} dominance: {e}", label_mode.as_str()));
                    None
                }
            }
        });
        comparisons.push(Comparison {
            label_mode,
            tests,
            dominance,
        });
    }
    MetricStats {
        split,
        metric: metric.to_string(),
        table,
        anova,
        comparisons,
        notes,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

impl GridStats {
    /// Plain-text digest: one block per split and metric.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for m in &self.metrics {
            let _ = writeln!(s, "[{} / {}]", m.split.as_str(), m.metric);
            if let Some(a) = &m.anova {
                for (name, row) in [
                    ("method", &a.method),
                    ("label", &a.label),
                    ("method x label", &a.interaction),
                ] {
                    let _ = writeln!(
                        s,
                        "  anova {name:<15} F({}, {}) = {}  p = {}  partial eta^2 = {}",
                        row.df,
                        a.residual_df,
                        opt(row.f),
                        opt(row.p),
                        opt(row.partial_eta_sq)
                    );
                }
            }
            for c in &m.comparisons {
                for t in c.tests.values() {
                    let _ = writeln!(
                        s,
                        "  {} proposed vs {:<4} diff = {:+.4}  t({}) = {}  p_holm = {}  d = {}  CI [{:.4}, {:.4}]",
                        c.label_mode.as_str(),
                        t.comparison,
                        t.mean_diff,
                        t.df,
                        opt(t.t),
                        opt(t.p_holm),
                        opt(t.cohens_d_paired),
                        t.ci.0,
                        t.ci.1
                    );
                }
                if let Some(d) = &c.dominance {
                    let _ = writeln!(
                        s,
                        "  {} strict dominance: {}",
                        c.label_mode.as_str(),
                        d.dominates
                    );
                }
            }
            for n in &m.notes {
                let _ = writeln!(s, "  note: {n}");
            }
        }
        s
    }
}
