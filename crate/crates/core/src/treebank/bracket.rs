use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use super::tree::ParseTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BracketErrorKind {
    EmptyInput,
    UnexpectedClose,
    Unclosed,
    EmptyConstituent,
    UnlabeledConstituent,
    TrailingInput,
    BareWord,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{kind:?} at byte {offset}")]
pub struct BracketError {
    pub kind: BracketErrorKind,
    pub offset: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Token<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(text: &str) -> Vec<(usize, Token<'_>)> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                out.push((i, Token::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Token::Close));
                i += 1;
            }
            b if b.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i], b'(' | b')') && !bytes[i].is_ascii_whitespace() {
                    i += 1;
                }
                out.push((start, Token::Atom(&text[start..i])));
            }
        }
    }
    out
}

/// Parses one bracketed tree. Decorations such as `NP-SBJ-1` and trace
/// leaves are kept verbatim; a label-less outer wrapper `( (S ...) )` is
/// removed.
pub fn parse_bracketed(text: &str) -> Result<ParseTree, BracketError> {
    let tokens = tokenize(text);
    let Some(&(first_off, first)) = tokens.first() else {
        return Err(BracketError { kind: BracketErrorKind::EmptyInput, offset: 0 });
    };
    if let Token::Atom(_) = first {
        return Err(BracketError { kind: BracketErrorKind::BareWord, offset: first_off });
    }
    let mut pos = 0;
    let tree = parse_node(&tokens, &mut pos, text.len())?;
    if let Some(&(off, _)) = tokens.get(pos) {
        return Err(BracketError { kind: BracketErrorKind::TrailingInput, offset: off });
    }
    Ok(tree)
}

fn parse_node(tokens: &[(usize, Token<'_>)], pos: &mut usize, end: usize) -> Result<ParseTree, BracketError> {
    let (open_off, tok) = tokens[*pos];
    match tok {
        Token::Atom(w) => {
            *pos += 1;
            return Ok(ParseTree::leaf(w));
        }
        Token::Close => return Err(BracketError { kind: BracketErrorKind::UnexpectedClose, offset: open_off }),
        Token::Open => *pos += 1,
    }
    let label: Option<String> = match tokens.get(*pos) {
        Some(&(_, Token::Atom(l))) => {
            *pos += 1;
            Some(l.into())
        }
        _ => None,
    };
    let mut children = Vec::new();
    loop {
        match tokens.get(*pos) {
            None => return Err(BracketError { kind: BracketErrorKind::Unclosed, offset: end }),
            Some(&(_, Token::Close)) => {
                *pos += 1;
                break;
            }
            Some(_) => children.push(parse_node(tokens, pos, end)?),
        }
    }
    match label {
        Some(_) if children.is_empty() => Err(BracketError { kind: BracketErrorKind::EmptyConstituent, offset: open_off }),
        Some(label) => Ok(ParseTree::node(label, children)),
        None if children.len() == 1 && !children[0].is_terminal() => Ok(children.pop().unwrap()),
        None if children.is_empty() => Err(BracketError { kind: BracketErrorKind::EmptyConstituent, offset: open_off }),
        None => Err(BracketError { kind: BracketErrorKind::UnlabeledConstituent, offset: open_off }),
    }
}

/// One tree of a treebank file with the 1-based line it starts on.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeRecord {
    pub line: usize,
    pub tree: Result<ParseTree, BracketError>,
}

fn depth_delta(line: &str) -> (i64, i64) {
    let mut depth = 0i64;
    let mut min = 0i64;
    for b in line.bytes() {
        match b {
            b'(' => depth += 1,
            b')' => {
                depth -= 1;
                min = min.min(depth);
            }
            _ => {}
        }
    }
    (depth, min)
}

/// Reads a whole treebank. If every non-blank line is balanced on its own
/// the input is treated as one tree per line; otherwise trees span lines
/// and end when the brackets balance (blank lines also terminate a tree).
pub fn read_treebank(text: &str) -> Vec<TreeRecord> {
    let one_per_line = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .all(|l| depth_delta(l) == (0, 0));
    if one_per_line {
        return text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| TreeRecord { line: i + 1, tree: parse_bracketed(l) })
            .collect();
    }

    let mut out = Vec::new();
    let mut buf = String::new();
    let mut start = 0;
    let mut depth = 0i64;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            if !buf.trim().is_empty() {
                out.push(TreeRecord { line: start, tree: parse_bracketed(&buf) });
            }
            buf.clear();
            depth = 0;
            continue;
        }
        if buf.is_empty() {
            start = i + 1;
        }
        buf.push_str(line);
        buf.push('\n');
        let (d, min) = depth_delta(line);
        let low = depth + min;
        depth += d;
        if depth <= 0 || low < 0 {
            out.push(TreeRecord { line: start, tree: parse_bracketed(&buf) });
            buf.clear();
            depth = 0;
        }
    }
    if !buf.trim().is_empty() {
        out.push(TreeRecord { line: start, tree: parse_bracketed(&buf) });
    }
    out
}
