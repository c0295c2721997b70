use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::bracket::TreeRecord;
use super::inventory::Inventory;
use super::strip::strip_annotations;
use super::tree::ParseTree;

#[derive(Clone, Debug, PartialEq)]
pub enum SkipReason {
    Malformed(String),
    EmptyAfterStrip,
    TooLong(usize),
}

/// A sentence left out of a corpus, by its position in the input (the
/// 1-based line for treebank files).
#[derive(Clone, Debug, PartialEq)]
pub struct Skipped {
    pub position: usize,
    pub reason: SkipReason,
}

/// Stripped training trees plus the log of everything skipped.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub trees: Vec<ParseTree>,
    pub skipped: Vec<Skipped>,
}

impl Corpus {
    pub fn tokens(&self) -> usize {
        self.trees.iter().map(|t| t.words().len()).sum()
    }

    /// Nonterminal labels, sorted.
    pub fn labels(&self) -> Inventory {
        let mut set = BTreeSet::new();
        for t in &self.trees {
            collect_labels(t, &mut set);
        }
        set.into_iter().collect::<Vec<String>>().into()
    }
}

fn collect_labels(t: &ParseTree, out: &mut BTreeSet<String>) {
    if !t.is_terminal() {
        out.insert(t.label.clone());
        t.children.iter().for_each(|c| collect_labels(c, out));
    }
}

fn admit(corpus: &mut Corpus, position: usize, tree: &ParseTree, max_len: usize) {
    match strip_annotations(tree) {
        Err(_) => corpus.skipped.push(Skipped { position, reason: SkipReason::EmptyAfterStrip }),
        Ok(t) => {
            let n = t.words().len();
            if n > max_len {
                corpus.skipped.push(Skipped { position, reason: SkipReason::TooLong(n) });
            } else {
                corpus.trees.push(t);
            }
        }
    }
}

/// Strips annotations and drops malformed, empty or over-long sentences.
pub fn ingest_records(records: &[TreeRecord], max_len: usize) -> Corpus {
    let mut corpus = Corpus::default();
    for r in records {
        match &r.tree {
            Ok(t) => admit(&mut corpus, r.line, t, max_len),
            Err(e) => corpus.skipped.push(Skipped { position: r.line, reason: SkipReason::Malformed(e.to_string()) }),
        }
    }
    corpus
}

/// [`ingest_records`] for trees already in memory; positions count from 1.
pub fn ingest_trees<'a>(trees: impl IntoIterator<Item = &'a ParseTree>, max_len: usize) -> Corpus {
    let mut corpus = Corpus::default();
    for (i, t) in trees.into_iter().enumerate() {
        admit(&mut corpus, i + 1, t, max_len);
    }
    corpus
}
