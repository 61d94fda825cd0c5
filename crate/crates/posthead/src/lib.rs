//! File formats, experiment orchestration and the command line for
//! posterior linear heads. The numerics live in `posthead-core`.
//!
//! Every verb of the `posthead` binary maps to one function here:
//!
//! | verb                | function |
//! |---------------------|----------|
//! | `run-grid`          | [`runner::run_grid`] |
//! | `calibrate`         | [`runner::recalibrate`] |
//! | `stats`             | [`runner::restats`] |
//! | `run-ablation`      | [`ablation::run_ablation`] |
//! | `run-al`            | [`al::run_al`] |
//! | `subset-diagnostic` | [`subset::subset_diagnostic`] |
//! | `report`            | [`report::write_report`] |

pub mod ablation;
pub mod al;
pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod runner;
pub mod stats_pass;
pub mod subset;

pub use config::{ExperimentConfig, LoadedData};
pub use error::{Error, Result};
