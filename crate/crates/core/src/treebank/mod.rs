//! Constituency trees: reading, annotation stripping, generative oracles,
//! filler–gap statistics, synthetic corpora and vocabularies.

mod bracket;
mod fillergap;
mod ingest;
mod inventory;
mod oracle;
mod pcfg;
mod strip;
mod tree;
mod vocab;

pub use bracket::{parse_bracketed, read_treebank, BracketError, BracketErrorKind, TreeRecord};
pub use fillergap::{count_filler_gap, DependencyTable, FillerCounts, GapPosition, IndirectObjectRule, NULL_FILLER};
pub use ingest::{ingest_records, ingest_trees, Corpus, SkipReason, Skipped};
pub use inventory::Inventory;
pub use oracle::{actions_to_tree, tree_to_actions, OracleError, TreeAction};
pub use pcfg::{Pcfg, PcfgError, Rule, SampleReport, Symbol};
pub use strip::{bare_label, is_pos_tag, strip_annotations, StripError, EMPTY_CATEGORY};
pub use tree::ParseTree;
pub use vocab::{build_vocab, signature, Vocabulary, UNK};

/// Shipped toy grammar: "that"-clauses with complete transitive clauses
/// alternating with wh-clauses that contain exactly one subject or object
/// gap.
pub const FILLER_GAP_GRAMMAR: &str = include_str!("../../data/fillergap.pcfg");

/// Shipped toy grammar in which "ever" is licensed only by a matrix-subject
/// "no"; a "no" inside a relative clause is a distractor.
pub const NPI_GRAMMAR: &str = include_str!("../../data/npi.pcfg");

/// Sentences longer than this are skipped at ingestion.
pub const MAX_SENTENCE_LEN: usize = 120;
