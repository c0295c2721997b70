use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use super::tree::ParseTree;

pub const EMPTY_CATEGORY: &str = "-NONE-";

/// Labels that begin with `-` but are not decorated.
const RESERVED: &[&str] = &["-NONE-", "-LRB-", "-RRB-", "-LCB-", "-RCB-", "-LSB-", "-RSB-"];

/// Penn Treebank part-of-speech inventory.
const POS_TAGS: &[&str] = &[
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNS", "NNP", "NNPS", "PDT", "POS",
    "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP",
    "WP$", "WRB", "#", "$", "''", "``", ",", ".", ":", "-LRB-", "-RRB-", "-LCB-", "-RCB-", "AUX",
];

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StripError {
    #[error("tree is empty after removing empty categories")]
    EmptyTree,
}

/// Removes functional tags and coindexation: `NP-SBJ-1` → `NP`, `S=2` → `S`.
pub fn bare_label(label: &str) -> &str {
    if RESERVED.contains(&label) {
        return label;
    }
    match label.char_indices().skip(1).find(|&(_, c)| c == '-' || c == '=') {
        Some((i, _)) => &label[..i],
        None => label,
    }
}

pub fn is_pos_tag(label: &str) -> bool {
    POS_TAGS.contains(&label)
}

/// Strips functional tags, coindexation and empty categories, then deletes
/// part-of-speech preterminals so words attach to their phrasal parent.
///
/// The root is never collapsed, which keeps the operation idempotent.
pub fn strip_annotations(tree: &ParseTree) -> Result<ParseTree, StripError> {
    if tree.is_terminal() {
        return Ok(tree.clone());
    }
    let children: Vec<ParseTree> = tree.children.iter().filter_map(strip_node).collect();
    if tree.label == EMPTY_CATEGORY || children.is_empty() {
        return Err(StripError::EmptyTree);
    }
    Ok(ParseTree::node(String::from(bare_label(&tree.label)), children))
}

fn strip_node(tree: &ParseTree) -> Option<ParseTree> {
    if tree.is_terminal() {
        return Some(tree.clone());
    }
    if tree.label == EMPTY_CATEGORY {
        return None;
    }
    let mut children: Vec<ParseTree> = tree.children.iter().filter_map(strip_node).collect();
    if children.is_empty() {
        return None;
    }
    let label = bare_label(&tree.label);
    if is_pos_tag(label) && children.len() == 1 && children[0].is_terminal() {
        return children.pop();
    }
    Some(ParseTree::node(String::from(label), children))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::parse_bracketed;
    use alloc::string::ToString;

    #[test]
    fn strips_labels() {
        assert_eq!(bare_label("WHNP-1"), "WHNP");
        assert_eq!(bare_label("NP-SBJ-2"), "NP");
        assert_eq!(bare_label("S=3"), "S");
        assert_eq!(bare_label("-NONE-"), "-NONE-");
        assert_eq!(bare_label("-LRB-"), "-LRB-");
        assert_eq!(bare_label("PRP$"), "PRP$");
    }

    #[test]
    fn removes_empty_category_subtrees() {
        let t = parse_bracketed("(S (NP-SBJ (PRP we)) (VP (VBD saw) (NP (-NONE- *T*-1))))").unwrap();
        let s = strip_annotations(&t).unwrap();
        // VP keeps the verb only, POS nodes are gone
        assert_eq!(s.to_string(), "(S (NP we) (VP saw))");
    }

    #[test]
    fn empty_after_stripping_is_an_error() {
        let t = parse_bracketed("(S (NP (-NONE- *)))").unwrap();
        assert_eq!(strip_annotations(&t), Err(StripError::EmptyTree));
    }

    #[test]
    fn phrasal_unary_over_word_survives_second_pass() {
        let t = parse_bracketed("(S (NP (NN dog)) (VP (VBZ barks)))").unwrap();
        let once = strip_annotations(&t).unwrap();
        assert_eq!(once.to_string(), "(S (NP dog) (VP barks))");
        assert_eq!(strip_annotations(&once).unwrap(), once);
    }
}
