//! Feature matrices, annotator votes and the labels derived from them.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Categories with fewer examples than this in a split are left out of
/// per-category statistics.
pub const MIN_CATEGORY_SUPPORT: usize = 30;

/// Train / validation / test sizes of the canonical 28-category corpus.
pub const CANONICAL_SPLIT_SIZES: [usize; 3] = [43_410, 5_426, 5_427];
pub const CANONICAL_CATEGORIES: usize = 28;
pub const CANONICAL_HIGH_DISAGREEMENT: usize = 1_544;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl core::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::validation(format!("unknown split `{other}`"))),
        }
    }
}

/// Which targets a head is trained against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    /// One-hot majority vote.
    Hard,
    /// Normalized annotator vote distribution.
    Soft,
}

impl LabelMode {
    pub const ALL: [LabelMode; 2] = [LabelMode::Hard, LabelMode::Soft];

    pub fn as_str(self) -> &'static str {
        match self {
            LabelMode::Hard => "hard",
            LabelMode::Soft => "soft",
        }
    }
}

impl core::str::FromStr for LabelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(LabelMode::Hard),
            "soft" => Ok(LabelMode::Soft),
            other => Err(Error::validation(format!("unknown label mode `{other}`"))),
        }
    }
}

/// Dense row-major `n_examples x dim` matrix of encoder embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_examples: usize,
    dim: usize,
    values: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(n_examples: usize, dim: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != n_examples * dim {
            return Err(Error::validation(format!(
                "feature matrix has {} values, expected {n_examples} x {dim}",
                values.len()
            )));
        }
        if dim == 0 {
            return Err(Error::validation("feature dimension must be positive"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / dim });
        }
        Ok(Self {
            n_examples,
            dim,
            values,
        })
    }

    pub fn n_examples(&self) -> usize {
        self.n_examples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

/// Per-category vote counts for one example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteVector {
    counts: Vec<u32>,
    total: u32,
}

impl VoteVector {
    /// Tally single-choice annotations over `n_categories` categories.
    pub fn from_annotations(annotations: &[usize], n_categories: usize) -> Result<Self> {
        if annotations.is_empty() {
            return Err(Error::validation(
                "vote vector needs at least one annotator",
            ));
        }
        let mut counts = vec![0u32; n_categories];
        for &a in annotations {
            if a >= n_categories {
                return Err(Error::validation(format!(
                    "vote index {a} out of range for {n_categories} categories"
                )));
            }
            counts[a] += 1;
        }
        Ok(Self {
            counts,
            total: annotations.len() as u32,
        })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    /// Majority category; the lowest index wins among tied counts.
    pub fn majority(&self) -> usize {
        let mut best = 0;
        for (c, &n) in self.counts.iter().enumerate() {
            if n > self.counts[best] {
                best = c;
            }
        }
        best
    }

    /// Empirical annotator distribution `counts / total`.
    pub fn distribution(&self) -> Vec<f64> {
        let total = self.total as f64;
        self.counts.iter().map(|&n| n as f64 / total).collect()
    }

    /// `1 - max_count / total`: zero iff every annotator agrees.
    pub fn disagreement(&self) -> f64 {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        1.0 - max as f64 / self.total as f64
    }
}

/// An annotation record as it arrives from the examples file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleRecord {
    pub id: String,
    /// Feature row; defaults to the record's position when absent.
    pub row: Option<usize>,
    pub split: Split,
    /// One category index per annotator, in annotation order.
    pub votes: Vec<usize>,
    pub high_disagreement: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: String,
    pub row: usize,
    /// Raw annotations, in the order the annotators were asked.
    pub annotations: Vec<usize>,
    pub votes: VoteVector,
    pub hard_label: usize,
    pub soft_label: Vec<f64>,
    pub split: Split,
    pub high_disagreement: bool,
}

impl Example {
    /// Write the training target for `mode` into `out`.
    pub fn target_into(&self, mode: LabelMode, out: &mut [f64]) {
        match mode {
            LabelMode::Soft => out.copy_from_slice(&self.soft_label),
            LabelMode::Hard => {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[self.hard_label] = 1.0;
            }
        }
    }

    pub fn target(&self, mode: LabelMode) -> Vec<f64> {
        let mut out = vec![0.0; self.soft_label.len()];
        self.target_into(mode, &mut out);
        out
    }
}

/// Which annotators enter the disagreement rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "count")]
pub enum RaterSubset {
    /// Only the first `n` annotators of each example.
    Initial(usize),
    All,
}

impl Default for RaterSubset {
    fn default() -> Self {
        RaterSubset::Initial(3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: usize,
    pub name: String,
    pub train_count: usize,
    /// Absent when no example carries this hard label.
    pub disagreement_rate: Option<f64>,
}

/// Per-category mean of `1 - max vote share` over examples whose hard label
/// is that category.
pub fn compute_disagreement_rates(dataset: &Dataset, raters: RaterSubset) -> Vec<CategoryStats> {
    let c = dataset.n_categories();
    let mut sums = vec![0.0f64; c];
    let mut counts = vec![0usize; c];
    let mut train_counts = vec![0usize; c];
    for ex in dataset.examples() {
        let share = match raters {
            RaterSubset::All => ex.votes.disagreement(),
            RaterSubset::Initial(n) => {
                let k = n.min(ex.annotations.len()).max(1);
                VoteVector::from_annotations(&ex.annotations[..k], c)
                    .map(|v| v.disagreement())
                    .unwrap_or(0.0)
            }
        };
        sums[ex.hard_label] += share;
        counts[ex.hard_label] += 1;
        if ex.split == Split::Train {
            train_counts[ex.hard_label] += 1;
        }
    }
    (0..c)
        .map(|k| CategoryStats {
            category: k,
            name: dataset.category_name(k).to_string(),
            train_count: train_counts[k],
            disagreement_rate: (counts[k] > 0).then(|| sums[k] / counts[k] as f64),
        })
        .collect()
}

/// Selection over examples; `None` fields match everything.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SubsetFilter {
    pub split: Option<Split>,
    pub high_disagreement: Option<bool>,
    pub category: Option<usize>,
}

impl SubsetFilter {
    pub fn split(split: Split) -> Self {
        Self {
            split: Some(split),
            ..Self::default()
        }
    }

    fn matches(&self, ex: &Example) -> bool {
        self.split.is_none_or(|s| ex.split == s)
            && self
                .high_disagreement
                .is_none_or(|h| ex.high_disagreement == h)
            && self.category.is_none_or(|c| ex.hard_label == c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: FeatureMatrix,
    examples: Vec<Example>,
    category_names: Vec<String>,
    category_stats: Vec<CategoryStats>,
}

impl Dataset {
    /// Validate records against `features` and derive hard/soft labels.
    ///
    /// When `category_names` is empty, categories are named by index.
    pub fn from_records(
        features: FeatureMatrix,
        records: Vec<ExampleRecord>,
        n_categories: usize,
        category_names: Vec<String>,
    ) -> Result<Self> {
        if n_categories < 2 {
            return Err(Error::validation("need at least two categories"));
        }
        let category_names = if category_names.is_empty() {
            (0..n_categories).map(|c| format!("c{c}")).collect()
        } else if category_names.len() != n_categories {
            return Err(Error::validation(format!(
                "{} category names for {n_categories} categories",
                category_names.len()
            )));
        } else {
            category_names
        };
        if records.len() != features.n_examples() {
            return Err(Error::validation(format!(
                "{} example records for {} feature rows",
                records.len(),
                features.n_examples()
            )));
        }
        let mut examples = Vec::with_capacity(records.len());
        for (i, rec) in records.into_iter().enumerate() {
            let row = rec.row.unwrap_or(i);
            if row >= features.n_examples() {
                return Err(Error::InvalidExample {
                    id: rec.id,
                    message: format!("row {row} >= {} feature rows", features.n_examples()),
                });
            }
            let votes = VoteVector::from_annotations(&rec.votes, n_categories).map_err(|e| {
                Error::InvalidExample {
                    id: rec.id.clone(),
                    message: e.to_string(),
                }
            })?;
            examples.push(Example {
                hard_label: votes.majority(),
                soft_label: votes.distribution(),
                id: rec.id,
                row,
                annotations: rec.votes,
                votes,
                split: rec.split,
                high_disagreement: rec.high_disagreement,
            });
        }
        let mut ds = Self {
            features,
            examples,
            category_names,
            category_stats: Vec::new(),
        };
        ds.category_stats = compute_disagreement_rates(&ds, RaterSubset::default());
        Ok(ds)
    }

    /// Recompute the stored per-category statistics with another rater subset.
    pub fn with_rater_subset(mut self, raters: RaterSubset) -> Self {
        self.category_stats = compute_disagreement_rates(&self, raters);
        self
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn example(&self, i: usize) -> &Example {
        &self.examples[i]
    }

    pub fn n_categories(&self) -> usize {
        self.category_names.len()
    }

    pub fn category_names(&self) -> &[String] {
        &self.category_names
    }

    pub fn category_name(&self, c: usize) -> &str {
        &self.category_names[c]
    }

    pub fn category_stats(&self) -> &[CategoryStats] {
        &self.category_stats
    }

    /// Disagreement rate per category (absent for unused categories).
    pub fn disagreement_rates(&self) -> Vec<Option<f64>> {
        self.category_stats
            .iter()
            .map(|s| s.disagreement_rate)
            .collect()
    }

    pub fn hard_labels(&self, indices: &[usize]) -> Vec<usize> {
        indices
            .iter()
            .map(|&i| self.examples[i].hard_label)
            .collect()
    }

    /// Sorted example indices matching `filter`.
    pub fn subset_view(&self, filter: SubsetFilter) -> Vec<usize> {
        self.examples
            .iter()
            .enumerate()
            .filter(|(_, ex)| filter.matches(ex))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        self.subset_view(SubsetFilter::split(split))
    }

    pub fn split_sizes(&self) -> [usize; 3] {
        let mut sizes = [0; 3];
        for ex in &self.examples {
            sizes[ex.split as usize] += 1;
        }
        sizes
    }

    /// Checks that hold on the canonical corpus; returns one message per
    /// violated expectation.
    pub fn canonical_check(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if self.n_categories() != CANONICAL_CATEGORIES {
            issues.push(format!(
                "{} categories, expected {CANONICAL_CATEGORIES}",
                self.n_categories()
            ));
        }
        let sizes = self.split_sizes();
        if sizes != CANONICAL_SPLIT_SIZES {
            issues.push(format!(
                "split sizes {sizes:?}, expected {CANONICAL_SPLIT_SIZES:?}"
            ));
        }
        let mut high = 0;
        for ex in &self.examples {
            if ex.high_disagreement {
                high += 1;
                if ex.split != Split::Validation {
                    issues.push(format!(
                        "example `{}` flagged high-disagreement outside validation",
                        ex.id
                    ));
                }
            }
            if !(3..=5).contains(&ex.votes.total()) {
                issues.push(format!(
                    "example `{}` has {} annotators",
                    ex.id,
                    ex.votes.total()
                ));
            }
        }
        if high != CANONICAL_HIGH_DISAGREEMENT {
            issues.push(format!(
                "{high} high-disagreement examples, expected {CANONICAL_HIGH_DISAGREEMENT}"
            ));
        }
        issues
    }

    /// Copy with every example whose hard label is in `categories` removed.
    /// Category indices are kept.
    pub fn without_categories(&self, categories: &[usize]) -> Result<Self> {
        if categories.is_empty() {
            return Ok(self.clone());
        }
        let keep: Vec<usize> = (0..self.examples.len())
            .filter(|&i| !categories.contains(&self.examples[i].hard_label))
            .collect();
        let dim = self.features.dim();
        let mut values = Vec::with_capacity(keep.len() * dim);
        let mut examples = Vec::with_capacity(keep.len());
        for (new_row, &i) in keep.iter().enumerate() {
            let ex = &self.examples[i];
            values.extend_from_slice(self.features.row(ex.row));
            let mut ex = ex.clone();
            ex.row = new_row;
            examples.push(ex);
        }
        let features = FeatureMatrix::new(keep.len(), dim, values)?;
        let mut ds = Self {
            features,
            examples,
            category_names: self.category_names.clone(),
            category_stats: Vec::new(),
        };
        ds.category_stats = compute_disagreement_rates(&ds, RaterSubset::default());
        Ok(ds)
    }
}
