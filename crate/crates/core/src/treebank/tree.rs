use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// A constituency tree. Leaves are terminals (words); every internal node
/// has at least one child.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParseTree {
    pub label: String,
    pub children: Vec<ParseTree>,
}

impl ParseTree {
    pub fn leaf(word: impl Into<String>) -> Self {
        ParseTree { label: word.into(), children: Vec::new() }
    }

    pub fn node(label: impl Into<String>, children: Vec<ParseTree>) -> Self {
        ParseTree { label: label.into(), children }
    }

    pub fn is_terminal(&self) -> bool {
        self.children.is_empty()
    }

    /// Terminal yield, left to right.
    pub fn words(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_words(&mut out);
        out
    }

    fn collect_words<'a>(&'a self, out: &mut Vec<&'a str>) {
        if self.is_terminal() {
            out.push(&self.label);
        } else {
            self.children.iter().for_each(|c| c.collect_words(out));
        }
    }

    /// Number of internal nodes.
    pub fn constituents(&self) -> usize {
        if self.is_terminal() {
            0
        } else {
            1 + self.children.iter().map(ParseTree::constituents).sum::<usize>()
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(ParseTree::depth).max().unwrap_or(0)
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_terminal() {
            return f.write_str(&self.label);
        }
        write!(f, "({}", self.label)?;
        for c in &self.children {
            write!(f, " {c}")?;
        }
        f.write_str(")")
    }
}
