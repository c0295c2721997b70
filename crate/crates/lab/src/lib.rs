//! Pipeline around `rnnglab-core`: corpus preparation, training,
//! surprisal scoring, analysis and figures, with every artifact written
//! atomically and stamped with its provenance.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod fsio;
pub mod provenance;
pub mod records;
pub mod report;
pub mod scoring;
pub mod tools;
pub mod training;

pub use error::{LabError, Result};
