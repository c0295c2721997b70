use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use super::tree::ParseTree;

/// A generative transition over string symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TreeAction {
    Nt(String),
    Gen(String),
    Reduce,
}

impl fmt::Display for TreeAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeAction::Nt(l) => write!(f, "NT({l})"),
            TreeAction::Gen(w) => write!(f, "GEN({w})"),
            TreeAction::Reduce => f.write_str("REDUCE"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("a bare terminal has no transition sequence")]
    TerminalRoot,
    #[error("empty action sequence")]
    Empty,
    #[error("illegal action {action} at position {index}: {reason}")]
    Illegal { index: usize, action: TreeAction, reason: &'static str },
    #[error("sequence ends with {open} open constituent(s)")]
    Incomplete { open: usize },
}

/// Top-down generative oracle: `NT(X)` opens, `GEN(w)` emits a word,
/// `REDUCE` closes the innermost open constituent.
pub fn tree_to_actions(tree: &ParseTree) -> Result<Vec<TreeAction>, OracleError> {
    if tree.is_terminal() {
        return Err(OracleError::TerminalRoot);
    }
    let mut out = Vec::new();
    emit(tree, &mut out);
    Ok(out)
}

fn emit(tree: &ParseTree, out: &mut Vec<TreeAction>) {
    if tree.is_terminal() {
        out.push(TreeAction::Gen(tree.label.clone()));
        return;
    }
    out.push(TreeAction::Nt(tree.label.clone()));
    tree.children.iter().for_each(|c| emit(c, out));
    out.push(TreeAction::Reduce);
}

/// Inverse of [`tree_to_actions`]; rejects the first action that breaks
/// well-formedness.
pub fn actions_to_tree(actions: &[TreeAction]) -> Result<ParseTree, OracleError> {
    if actions.is_empty() {
        return Err(OracleError::Empty);
    }
    let mut open: Vec<ParseTree> = Vec::new();
    let mut done: Option<ParseTree> = None;
    for (index, action) in actions.iter().enumerate() {
        let illegal = |reason| OracleError::Illegal { index, action: action.clone(), reason };
        if done.is_some() {
            return Err(illegal("tree already complete"));
        }
        match action {
            TreeAction::Nt(label) => open.push(ParseTree::node(label.clone(), vec![])),
            TreeAction::Gen(word) => match open.last_mut() {
                Some(top) => top.children.push(ParseTree::leaf(word.clone())),
                None => return Err(illegal(if index == 0 { "first action must be NT" } else { "no open constituent" })),
            },
            TreeAction::Reduce => {
                let Some(top) = open.pop() else { return Err(illegal("no open constituent")) };
                if top.children.is_empty() {
                    return Err(illegal("cannot close an empty constituent"));
                }
                match open.last_mut() {
                    Some(parent) => parent.children.push(top),
                    None => done = Some(top),
                }
            }
        }
    }
    done.ok_or(OracleError::Incomplete { open: open.len() })
}
