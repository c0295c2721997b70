use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::PsychError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalysisKind {
    /// 2×2 ±filler × ±gap design.
    WhInteraction,
    /// 2×2 ±licensor × ±distractor design, measured at the NPI.
    Npi,
    /// Weighted sum of conditions given by the suite's `contrast`.
    CustomContrast,
}

impl AnalysisKind {
    /// Factor names every condition must set.
    pub fn factors(self) -> &'static [&'static str] {
        match self {
            AnalysisKind::WhInteraction => &["filler", "gap"],
            AnalysisKind::Npi => &["licensor", "distractor"],
            AnalysisKind::CustomContrast => &[],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub name: String,
    #[serde(default)]
    pub factors: BTreeMap<String, bool>,
    /// Shown as a marker on figures.
    #[serde(default = "yes")]
    pub grammatical: bool,
    /// Sub-design the condition belongs to, e.g. an embedding depth; each
    /// block is analysed separately.
    #[serde(default)]
    pub block: Option<String>,
}

fn yes() -> bool {
    true
}

impl ConditionSpec {
    pub fn factor(&self, name: &str) -> Option<bool> {
        self.factors.get(name).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    /// Whitespace-separated tokens.
    pub text: String,
    #[serde(default)]
    pub measure: bool,
}

impl Region {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.text.split_whitespace()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemCondition {
    pub condition: String,
    pub regions: Vec<Region>,
}

impl ItemCondition {
    pub fn tokens(&self) -> Vec<&str> {
        self.regions.iter().flat_map(Region::tokens).collect()
    }

    pub fn sentence(&self) -> String {
        self.tokens().join(" ")
    }

    /// Sentence-level token index range of every region, in order.
    pub fn region_spans(&self) -> Vec<(&Region, core::ops::Range<usize>)> {
        let mut start = 0;
        self.regions
            .iter()
            .map(|r| {
                let n = r.tokens().count();
                let span = start..start + n;
                start += n;
                (r, span)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub conditions: Vec<ItemCondition>,
}

impl Item {
    pub fn condition(&self, name: &str) -> Option<&ItemCondition> {
        self.conditions.iter().find(|c| c.condition == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    pub name: String,
    pub kind: AnalysisKind,
    pub conditions: Vec<ConditionSpec>,
    pub items: Vec<Item>,
    /// Condition weights for [`AnalysisKind::CustomContrast`].
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub contrast: BTreeMap<String, f64>,
}

impl TestSuite {
    pub fn condition(&self, name: &str) -> Option<&ConditionSpec> {
        self.conditions.iter().find(|c| c.name == name)
    }

    /// Blocks in order of first appearance; `None` is the unnamed block.
    pub fn blocks(&self) -> Vec<Option<&str>> {
        let mut out: Vec<Option<&str>> = Vec::new();
        for c in &self.conditions {
            let b = c.block.as_deref();
            if !out.contains(&b) {
                out.push(b);
            }
        }
        out
    }

    /// The condition in `block` with the given factor levels.
    pub fn find_cell(&self, block: Option<&str>, levels: &[(&str, bool)]) -> Option<&ConditionSpec> {
        self.conditions
            .iter()
            .find(|c| c.block.as_deref() == block && levels.iter().all(|(f, v)| c.factor(f) == Some(*v)))
    }

    /// Checks the structural invariants of the schema.
    pub fn validate(&self) -> Result<(), PsychError> {
        let err = |m: String| Err(PsychError::Suite(m));
        if self.conditions.is_empty() {
            return err(String::from("no conditions declared"));
        }
        let mut names = BTreeSet::new();
        for c in &self.conditions {
            if !names.insert(c.name.as_str()) {
                return err(format!("condition `{}` declared twice", c.name));
            }
        }
        let factors = self.kind.factors();
        for c in &self.conditions {
            for f in factors {
                if c.factor(f).is_none() {
                    return err(format!("condition `{}` does not set factor `{f}`", c.name));
                }
            }
        }
        if !factors.is_empty() {
            for block in self.blocks() {
                for cell in [(false, false), (true, false), (false, true), (true, true)] {
                    let levels = [(factors[0], cell.0), (factors[1], cell.1)];
                    let n = self
                        .conditions
                        .iter()
                        .filter(|c| c.block.as_deref() == block && levels.iter().all(|(f, v)| c.factor(f) == Some(*v)))
                        .count();
                    if n != 1 {
                        return err(format!(
                            "block {:?} has {n} conditions with {}={} {}={}, expected exactly 1",
                            block.unwrap_or(""),
                            factors[0],
                            cell.0,
                            factors[1],
                            cell.1
                        ));
                    }
                }
            }
        }
        if self.kind == AnalysisKind::CustomContrast {
            if self.contrast.is_empty() {
                return err(String::from("custom-contrast suite without contrast weights"));
            }
            if let Some(c) = self.contrast.keys().find(|c| !names.contains(c.as_str())) {
                return err(format!("contrast weight for unknown condition `{c}`"));
            }
        }
        let mut ids = BTreeSet::new();
        for item in &self.items {
            if !ids.insert(item.id.as_str()) {
                return err(format!("item `{}` appears twice", item.id));
            }
            for ic in &item.conditions {
                if !names.contains(ic.condition.as_str()) {
                    return err(format!("item `{}` uses undeclared condition `{}`", item.id, ic.condition));
                }
            }
            for c in &self.conditions {
                let n = item.conditions.iter().filter(|ic| ic.condition == c.name).count();
                if n != 1 {
                    return err(format!("item `{}` has condition `{}` {n} times, expected once", item.id, c.name));
                }
            }
            let first: Vec<&str> = item.conditions[0].regions.iter().map(|r| r.name.as_str()).collect();
            for ic in &item.conditions {
                let these: Vec<&str> = ic.regions.iter().map(|r| r.name.as_str()).collect();
                if these != first {
                    return err(format!("item `{}` condition `{}` has regions {these:?}, expected {first:?}", item.id, ic.condition));
                }
                if let Some(r) = ic.regions.iter().find(|r| r.measure && r.tokens().next().is_none()) {
                    return err(format!("item `{}` condition `{}`: measured region `{}` is empty", item.id, ic.condition, r.name));
                }
                if ic.tokens().is_empty() {
                    return err(format!("item `{}` condition `{}` has no tokens", item.id, ic.condition));
                }
            }
        }
        Ok(())
    }
}
