//! Measurement layer: test-suite schema, region aggregation of surprisal
//! records, wh-licensing interactions, NPI contrasts and accuracy, and the
//! statistics behind them.
//!
//! By-item variation is handled with fixed sum-coded item intercepts in
//! the regression and with sign-flip permutation tests, rather than with
//! random-effects estimation.

mod analysis;
mod float_serde;
mod records;
pub mod stats;
mod suite;

pub use analysis::{
    analyze_suite, npi_accuracy, npi_contrast, summarize_effect, wh_interaction, AnalysisOptions, BlockResult, ConditionSummary,
    DroppedItem, EffectSummary, ItemRow, NpiAccuracy, NpiItem, SuiteResult,
};
pub use records::{aggregate_region, models_in, RecordIndex, RegionSelection, SurprisalRecord};
pub use stats::{cohens_d, within_item_ci, CohensD, Interval, LinearFit};
pub use suite::{AnalysisKind, ConditionSpec, Item, ItemCondition, Region, TestSuite};

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsychError {
    #[error("invalid test suite: {0}")]
    Suite(String),
    #[error("incomplete data: {0}")]
    Incomplete(String),
    #[error("no measured tokens selected for item `{item}` condition `{condition}`")]
    EmptySelection { item: String, condition: String },
    #[error("need at least {needed} values, found {found}")]
    TooFewValues { needed: usize, found: usize },
    #[error("design matrix is rank deficient; aliased terms: {}", aliased.join(", "))]
    RankDeficient { aliased: Vec<String> },
    #[error("invalid design: {0}")]
    Design(String),
}
