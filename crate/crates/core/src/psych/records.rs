use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::suite::TestSuite;
use super::PsychError;

/// Surprisal of one token of one condition of one item under one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurprisalRecord {
    pub suite: String,
    pub item: String,
    pub condition: String,
    pub region: String,
    /// Position in the condition's sentence, from 0.
    pub token_idx: usize,
    pub token: String,
    pub surprisal_bits: f64,
    pub model: String,
}

/// Which regions to sum over.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum RegionSelection {
    /// Regions flagged `measure` in the suite.
    #[default]
    Measured,
    Named(Vec<String>),
}

/// Records of a single model keyed by `(item, condition, token_idx)`.
#[derive(Clone, Debug, Default)]
pub struct RecordIndex<'a> {
    cells: BTreeMap<(&'a str, &'a str), BTreeMap<usize, &'a SurprisalRecord>>,
}

impl<'a> RecordIndex<'a> {
    pub fn new(records: impl IntoIterator<Item = &'a SurprisalRecord>) -> Self {
        let mut cells: BTreeMap<(&str, &str), BTreeMap<usize, &SurprisalRecord>> = BTreeMap::new();
        for r in records {
            cells.entry((r.item.as_str(), r.condition.as_str())).or_default().insert(r.token_idx, r);
        }
        RecordIndex { cells }
    }

    pub fn has_item(&self, item: &str) -> bool {
        self.cells.keys().any(|(i, _)| *i == item)
    }

    /// Summed surprisal (bits) over the selected regions of one condition.
    pub fn aggregate(&self, suite: &TestSuite, item: &str, condition: &str, selection: &RegionSelection) -> Result<f64, PsychError> {
        let it = suite
            .items
            .iter()
            .find(|i| i.id == item)
            .ok_or_else(|| PsychError::Incomplete(format!("suite has no item `{item}`")))?;
        let ic = it
            .condition(condition)
            .ok_or_else(|| PsychError::Incomplete(format!("item `{item}` has no condition `{condition}`")))?;
        let chosen: Vec<_> = ic
            .region_spans()
            .into_iter()
            .filter(|(r, _)| match selection {
                RegionSelection::Measured => r.measure,
                RegionSelection::Named(names) => names.iter().any(|n| *n == r.name),
            })
            .collect();
        if chosen.iter().all(|(_, span)| span.is_empty()) {
            return Err(PsychError::EmptySelection { item: String::from(item), condition: String::from(condition) });
        }
        let cell = self.cells.get(&(item, condition));
        let mut total = 0.0;
        let mut missing = Vec::new();
        for (region, span) in chosen {
            for idx in span {
                match cell.and_then(|c| c.get(&idx)) {
                    Some(r) => total += r.surprisal_bits,
                    None => missing.push(format!("{}#{idx}", region.name)),
                }
            }
        }
        if !missing.is_empty() {
            return Err(PsychError::Incomplete(format!(
                "item `{item}` condition `{condition}` lacks tokens {}",
                missing.join(", ")
            )));
        }
        Ok(total)
    }
}

/// Summed surprisal (bits) of `item`/`condition` over the selected regions.
pub fn aggregate_region(
    records: &[SurprisalRecord],
    suite: &TestSuite,
    item: &str,
    condition: &str,
    selection: &RegionSelection,
) -> Result<f64, PsychError> {
    RecordIndex::new(records).aggregate(suite, item, condition, selection)
}

/// Distinct model tags in first-appearance order.
pub fn models_in(records: &[SurprisalRecord]) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    for r in records {
        if !out.contains(&r.model.as_str()) {
            out.push(&r.model);
        }
    }
    out
}
