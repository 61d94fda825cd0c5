//! Balanced one- and two-way analysis of variance.
//!
//! On a balanced design the Type II sums of squares coincide with the
//! classical decomposition into cell, row and column means, which is what
//! is computed here.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::dist::f_upper;
use super::RunTable;
use crate::data::LabelMode;
use crate::error::{Error, Result};
use crate::math;
use crate::trainers::Method;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorRow {
    pub ss: f64,
    pub df: usize,
    /// Absent when the residual mean square is zero.
    pub f: Option<f64>,
    pub p: Option<f64>,
    pub partial_eta_sq: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaTwoWay {
    pub method: FactorRow,
    pub label: FactorRow,
    pub interaction: FactorRow,
    pub residual_ss: f64,
    pub residual_df: usize,
    pub total_ss: f64,
}

fn factor_row(ss: f64, df: usize, ss_e: f64, df_e: usize) -> FactorRow {
    let ms_e = if df_e > 0 { ss_e / df_e as f64 } else { 0.0 };
    let (f, p) = if ms_e > 0.0 && df > 0 {
        let f = (ss / df as f64) / ms_e;
        (Some(f), Some(f_upper(f, df as f64, df_e as f64)))
    } else {
        (None, None)
    };
    let denom = ss + ss_e;
    FactorRow {
        ss,
        df,
        f,
        p,
        partial_eta_sq: (denom > 0.0).then(|| ss / denom),
    }
}

/// Two-way ANOVA on `cells[a][b]`, each holding the same number of
/// replicates.
pub fn anova_balanced(cells: &[Vec<Vec<f64>>]) -> Result<AnovaTwoWay> {
    let na = cells.len();
    let nb = cells.first().map_or(0, Vec::len);
    if na < 2 || nb < 2 {
        return Err(Error::UnsupportedDesign(
            "two-way ANOVA needs at least two levels per factor".into(),
        ));
    }
    let r = cells[0][0].len();
    if cells
        .iter()
        .any(|row| row.len() != nb || row.iter().any(|c| c.len() != r))
    {
        return Err(Error::UnsupportedDesign(
            "unbalanced design: cell counts differ".into(),
        ));
    }
    if r < 2 {
        return Err(Error::UnsupportedDesign(
            "two-way ANOVA needs at least two replicates per cell".into(),
        ));
    }
    let cell_mean: Vec<Vec<f64>> = cells
        .iter()
        .map(|row| row.iter().map(|c| math::mean(c)).collect())
        .collect();
    let grand = math::mean(&cell_mean.iter().flatten().copied().collect::<Vec<_>>());
    let a_mean: Vec<f64> = cell_mean.iter().map(|row| math::mean(row)).collect();
    let b_mean: Vec<f64> = (0..nb)
        .map(|j| math::sum(cell_mean.iter().map(|row| row[j])) / na as f64)
        .collect();

    let ss_a = (nb * r) as f64 * math::sum(a_mean.iter().map(|m| (m - grand) * (m - grand)));
    let ss_b = (na * r) as f64 * math::sum(b_mean.iter().map(|m| (m - grand) * (m - grand)));
    let mut ss_ab = 0.0;
    let mut ss_e = 0.0;
    let mut ss_t = 0.0;
    for i in 0..na {
        for j in 0..nb {
            let inter = cell_mean[i][j] - a_mean[i] - b_mean[j] + grand;
            ss_ab += r as f64 * inter * inter;
            for &y in &cells[i][j] {
                ss_e += (y - cell_mean[i][j]) * (y - cell_mean[i][j]);
                ss_t += (y - grand) * (y - grand);
            }
        }
    }
    let df_e = na * nb * (r - 1);
    Ok(AnovaTwoWay {
        method: factor_row(ss_a, na - 1, ss_e, df_e),
        label: factor_row(ss_b, nb - 1, ss_e, df_e),
        interaction: factor_row(ss_ab, (na - 1) * (nb - 1), ss_e, df_e),
        residual_ss: ss_e,
        residual_df: df_e,
        total_ss: ss_t,
    })
}

/// Two-way ANOVA of a run table with factors method and label mode.
/// Replicates within a cell are ordered by seed.
pub fn anova_two_way_type2(table: &RunTable) -> Result<AnovaTwoWay> {
    let mut grouped: BTreeMap<Method, BTreeMap<LabelMode, Vec<(u64, f64)>>> = BTreeMap::new();
    for row in &table.rows {
        grouped
            .entry(row.method)
            .or_default()
            .entry(row.label_mode)
            .or_default()
            .push((row.seed, row.value));
    }
    let labels: Vec<LabelMode> = {
        let mut all: Vec<LabelMode> = grouped.values().flat_map(|m| m.keys().copied()).collect();
        all.sort();
        all.dedup();
        all
    };
    let mut cells = Vec::new();
    for by_label in grouped.values() {
        let mut row = Vec::new();
        for l in &labels {
            let mut vals = by_label.get(l).cloned().unwrap_or_default();
            vals.sort_by_key(|v| v.0);
            row.push(vals.into_iter().map(|v| v.1).collect::<Vec<_>>());
        }
        cells.push(row);
    }
    anova_balanced(&cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaOneWay {
    pub ss_between: f64,
    pub ss_within: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub f: Option<f64>,
    pub p: Option<f64>,
    pub partial_eta_sq: Option<f64>,
}

pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<AnovaOneWay> {
    if groups.len() < 2 || groups.iter().any(|g| g.len() < 2) {
        return Err(Error::UnsupportedDesign(
            "one-way ANOVA needs two or more groups of two or more values".into(),
        ));
    }
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let grand = math::mean(&all);
    let mut ss_b = 0.0;
    let mut ss_w = 0.0;
    for g in groups {
        let m = math::mean(g);
        ss_b += g.len() as f64 * (m - grand) * (m - grand);
        ss_w += math::sum(g.iter().map(|y| (y - m) * (y - m)));
    }
    let df_b = groups.len() - 1;
    let df_w = all.len() - groups.len();
    let row = factor_row(ss_b, df_b, ss_w, df_w);
    Ok(AnovaOneWay {
        ss_between: ss_b,
        ss_within: ss_w,
        df_between: df_b,
        df_within: df_w,
        f: row.f,
        p: row.p,
        partial_eta_sq: row.partial_eta_sq,
    })
}
