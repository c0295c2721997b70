//! Filler–gap dependency statistics from trace coindexation.
//!
//! A wh-phrase such as `WHNP-1` is resolved against the first `*T*-1`
//! empty category of the same tree. The gap position is read off the
//! phrase containing the trace (`G`) and its parent (`P`):
//!
//! * subject: `G` is the first `NP` child of an `S`/`SQ`/`SINV`;
//! * indirect object: `G` is the first of two or more `NP` sisters under
//!   `VP`, or the object of a `to`/`for` `PP` whose `VP` also has an `NP`
//!   object ([`IndirectObjectRule`]);
//! * object: `G` is an `NP` inside `VP` preceded by the verb;
//! * anything else is `Other`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::strip::{bare_label, EMPTY_CATEGORY};
use super::tree::ParseTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GapPosition {
    Subject,
    Object,
    IndirectObject,
    Other,
}

/// Configurable part of the indirect-object classification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndirectObjectRule {
    /// Count the first of two `NP` sisters under `VP`.
    pub double_object: bool,
    /// Prepositions whose object counts when the verb also has an `NP` object.
    pub prepositions: Vec<String>,
}

impl Default for IndirectObjectRule {
    fn default() -> Self {
        IndirectObjectRule { double_object: true, prepositions: vec!["to".into(), "for".into()] }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FillerCounts {
    pub subject: usize,
    pub object: usize,
    pub indirect_object: usize,
    pub other: usize,
    pub unresolved: usize,
}

impl FillerCounts {
    /// All resolved dependencies (every gap position).
    pub fn resolved(&self) -> usize {
        self.subject + self.object + self.indirect_object + self.other
    }

    pub fn get(&self, pos: GapPosition) -> usize {
        match pos {
            GapPosition::Subject => self.subject,
            GapPosition::Object => self.object,
            GapPosition::IndirectObject => self.indirect_object,
            GapPosition::Other => self.other,
        }
    }

    fn bump(&mut self, pos: Option<GapPosition>) {
        match pos {
            Some(GapPosition::Subject) => self.subject += 1,
            Some(GapPosition::Object) => self.object += 1,
            Some(GapPosition::IndirectObject) => self.indirect_object += 1,
            Some(GapPosition::Other) => self.other += 1,
            None => self.unresolved += 1,
        }
    }

    fn add(&mut self, o: &FillerCounts) {
        self.subject += o.subject;
        self.object += o.object;
        self.indirect_object += o.indirect_object;
        self.other += o.other;
        self.unresolved += o.unresolved;
    }
}

/// Dependency counts keyed by lower-cased filler yield (`<null>` for a
/// silent operator).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DependencyTable {
    pub by_filler: BTreeMap<String, FillerCounts>,
}

pub const NULL_FILLER: &str = "<null>";

impl DependencyTable {
    pub fn is_empty(&self) -> bool {
        self.by_filler.is_empty()
    }

    pub fn total(&self) -> FillerCounts {
        let mut t = FillerCounts::default();
        self.by_filler.values().for_each(|c| t.add(c));
        t
    }

    pub fn filler(&self, word: &str) -> FillerCounts {
        self.by_filler.get(word).copied().unwrap_or_default()
    }

    pub fn merge(&mut self, other: &DependencyTable) {
        for (k, v) in &other.by_filler {
            self.by_filler.entry(k.clone()).or_default().add(v);
        }
    }

    fn record(&mut self, filler: String, pos: Option<GapPosition>) {
        self.by_filler.entry(filler).or_default().bump(pos);
    }
}

/// Coindexation suffix of a label: `WHNP-1` → 1. Gapping indices (`=`)
/// are ignored.
fn coindex(label: &str) -> Option<u32> {
    let rest = label.split('=').next()?;
    let (head, tail) = rest.rsplit_once('-')?;
    if head.is_empty() {
        return None;
    }
    tail.parse().ok()
}

fn trace_index(word: &str) -> Option<u32> {
    word.strip_prefix("*T*-")?.parse().ok()
}

struct Trace<'a> {
    index: u32,
    /// Root-to-trace path as `(node, child index taken)`.
    path: Vec<(&'a ParseTree, usize)>,
}

fn collect<'a>(
    node: &'a ParseTree,
    path: &mut Vec<(&'a ParseTree, usize)>,
    fillers: &mut Vec<(u32, String)>,
    traces: &mut Vec<Trace<'a>>,
) {
    if node.is_terminal() {
        return;
    }
    if node.label == EMPTY_CATEGORY {
        if let Some(index) = node.children.first().and_then(|w| trace_index(&w.label)) {
            traces.push(Trace { index, path: path.clone() });
        }
        return;
    }
    if bare_label(&node.label).starts_with("WH") {
        if let Some(k) = coindex(&node.label) {
            fillers.push((k, filler_word(node)));
        }
    }
    for (i, child) in node.children.iter().enumerate() {
        path.push((node, i));
        collect(child, path, fillers, traces);
        path.pop();
    }
}

fn filler_word(node: &ParseTree) -> String {
    fn overt<'a>(t: &'a ParseTree, out: &mut Vec<&'a str>) {
        if t.is_terminal() {
            out.push(&t.label);
        } else if t.label != EMPTY_CATEGORY {
            t.children.iter().for_each(|c| overt(c, out));
        }
    }
    let mut words = Vec::new();
    overt(node, &mut words);
    if words.is_empty() {
        NULL_FILLER.to_string()
    } else {
        words.join(" ").to_lowercase()
    }
}

fn first_word(t: &ParseTree) -> Option<&str> {
    t.words().into_iter().next()
}

fn classify(trace: &Trace<'_>, rule: &IndirectObjectRule) -> GapPosition {
    let n = trace.path.len();
    if n < 2 {
        return GapPosition::Other;
    }
    let (gap, _) = trace.path[n - 1];
    let (parent, gi) = trace.path[n - 2];
    if bare_label(&gap.label) != "NP" {
        return GapPosition::Other;
    }
    let is_np = |t: &ParseTree| !t.is_terminal() && bare_label(&t.label) == "NP";
    match bare_label(&parent.label) {
        "S" | "SQ" | "SINV" => {
            if parent.children.iter().position(is_np) == Some(gi) {
                GapPosition::Subject
            } else {
                GapPosition::Other
            }
        }
        "VP" => {
            let nps: Vec<usize> = parent.children.iter().enumerate().filter(|(_, c)| is_np(c)).map(|(i, _)| i).collect();
            if rule.double_object && nps.len() >= 2 && nps[0] == gi {
                GapPosition::IndirectObject
            } else if gi > 0 {
                GapPosition::Object
            } else {
                GapPosition::Other
            }
        }
        "PP" if n >= 3 => {
            let (vp, pi) = trace.path[n - 3];
            let prep = first_word(parent).map(|w| w.to_lowercase());
            let licensed = prep.is_some_and(|p| rule.prepositions.iter().any(|r| *r == p));
            let has_object = vp.children.iter().enumerate().any(|(i, c)| i != pi && is_np(c));
            if bare_label(&vp.label) == "VP" && licensed && has_object {
                GapPosition::IndirectObject
            } else {
                GapPosition::Other
            }
        }
        _ => GapPosition::Other,
    }
}

/// Counts filler–gap dependencies in trees that still carry traces and
/// coindexation (do not strip first).
pub fn count_filler_gap<'a>(trees: impl IntoIterator<Item = &'a ParseTree>, rule: &IndirectObjectRule) -> DependencyTable {
    let mut table = DependencyTable::default();
    for tree in trees {
        let mut fillers = Vec::new();
        let mut traces = Vec::new();
        collect(tree, &mut Vec::new(), &mut fillers, &mut traces);
        for (k, word) in fillers {
            let pos = traces.iter().find(|t| t.index == k).map(|t| classify(t, rule));
            table.record(word, pos);
        }
    }
    table
}
