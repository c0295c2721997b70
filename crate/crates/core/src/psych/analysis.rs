use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::records::{RecordIndex, RegionSelection, SurprisalRecord};
use super::stats::{self, CohensD, DesignRow, Interval, LinearFit};
use super::suite::{AnalysisKind, TestSuite};
use super::PsychError;

/// `[S(+F,−G) − S(−F,−G)] − [S(+F,+G) − S(−F,+G)]` with `a = −F−G`,
/// `b = +F−G`, `c = −F+G`, `d = +F+G`. Positive when a filler makes a
/// filled gap site more surprising and an empty one less.
pub fn wh_interaction(a: f64, b: f64, c: f64, d: f64) -> f64 {
    (b - a) - (d - c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisOptions {
    pub selection: RegionSelection,
    pub permutations: usize,
    pub seed: u64,
    pub level: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { selection: RegionSelection::Measured, permutations: 10_000, seed: 1, level: 0.95 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectSummary {
    pub name: String,
    pub n: usize,
    /// Mean with a t-interval across items.
    pub interval: Interval,
    pub cohens_d: CohensD,
    /// Sign-flip permutation test of a zero mean.
    #[serde(with = "super::float_serde")]
    pub p_permutation: f64,
}

/// Per-condition mean with a within-item interval, for figures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub grammatical: bool,
    pub interval: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemRow {
    pub item: String,
    /// Summed surprisal per condition, in [`BlockResult::conditions`] order.
    pub cells: Vec<f64>,
    /// Per-item effect values, in [`BlockResult::effects`] order.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NpiAccuracy {
    pub n: usize,
    pub correct: usize,
    pub ties: usize,
    pub incorrect: usize,
    #[serde(with = "super::float_serde")]
    pub accuracy: f64,
    /// Clopper–Pearson interval.
    pub lower: f64,
    pub upper: f64,
    /// Exact binomial test against 0.5.
    pub p_binomial: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockResult {
    pub block: Option<String>,
    pub conditions: Vec<ConditionSummary>,
    pub items: Vec<ItemRow>,
    pub effects: Vec<EffectSummary>,
    /// Sum-coded fit with item intercepts (factorial designs only).
    pub regression: Option<LinearFit>,
    pub accuracy: Option<NpiAccuracy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroppedItem {
    pub item: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    pub model: String,
    pub kind: AnalysisKind,
    pub blocks: Vec<BlockResult>,
    pub dropped: Vec<DroppedItem>,
}

/// NPI-region surprisal of one item in the four licensor × distractor cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NpiItem {
    pub item: String,
    /// Ordered `−L−D, +L−D, −L+D, +L+D`.
    pub surprisal: [f64; 4],
}

impl NpiItem {
    /// `S(+L,−D) − S(−L,−D)`; negative when the licensor helps.
    pub fn licensor_effect(&self) -> f64 {
        self.surprisal[1] - self.surprisal[0]
    }

    /// `S(−L,+D) − S(−L,−D)`.
    pub fn distractor_effect(&self) -> f64 {
        self.surprisal[2] - self.surprisal[0]
    }
}

const CELLS: [(bool, bool); 4] = [(false, false), (true, false), (false, true), (true, true)];

fn cell_names<'s>(suite: &'s TestSuite, block: Option<&str>) -> Result<Vec<&'s str>, PsychError> {
    let f = suite.kind.factors();
    CELLS
        .iter()
        .map(|&(x, y)| {
            suite
                .find_cell(block, &[(f[0], x), (f[1], y)])
                .map(|c| c.name.as_str())
                .ok_or_else(|| PsychError::Suite(format!("missing {}={x} {}={y} condition", f[0], f[1])))
        })
        .collect()
}

/// Per-item NPI surprisal in each cell; any missing data is an error.
pub fn npi_contrast(records: &[SurprisalRecord], suite: &TestSuite, selection: &RegionSelection) -> Result<Vec<NpiItem>, PsychError> {
    if suite.kind != AnalysisKind::Npi {
        return Err(PsychError::Suite(format!("suite `{}` is not an NPI suite", suite.name)));
    }
    let index = RecordIndex::new(records);
    let mut out = Vec::new();
    for block in suite.blocks() {
        let names = cell_names(suite, block)?;
        for item in &suite.items {
            let mut s = [0.0; 4];
            for (k, c) in names.iter().enumerate() {
                s[k] = index.aggregate(suite, &item.id, c, selection)?;
            }
            out.push(NpiItem { item: item.id.clone(), surprisal: s });
        }
    }
    Ok(out)
}

/// An item is correct when the NPI is less surprising with the licensor
/// alone than with the distractor alone; ties count as incorrect.
pub fn npi_accuracy(items: &[NpiItem]) -> NpiAccuracy {
    let n = items.len();
    let correct = items.iter().filter(|i| i.surprisal[1] < i.surprisal[2]).count();
    let ties = items.iter().filter(|i| i.surprisal[1] == i.surprisal[2]).count();
    let (lower, upper) = if n > 0 { stats::clopper_pearson(correct as u64, n as u64, 0.95) } else { (0.0, 1.0) };
    NpiAccuracy {
        n,
        correct,
        ties,
        incorrect: n - correct - ties,
        accuracy: if n > 0 { correct as f64 / n as f64 } else { f64::NAN },
        lower,
        upper,
        p_binomial: stats::binomial_test(correct as u64, n as u64, 0.5),
    }
}

pub fn summarize_effect(name: &str, values: &[f64], opts: &AnalysisOptions) -> Result<EffectSummary, PsychError> {
    Ok(EffectSummary {
        name: String::from(name),
        n: values.len(),
        interval: stats::mean_ci(values, opts.level)?,
        cohens_d: stats::cohens_d(values)?,
        p_permutation: stats::sign_flip_test(values, opts.permutations, opts.seed),
    })
}

/// Runs the suite's analysis on the records of one model. Items with
/// missing records are dropped whole and listed.
pub fn analyze_suite(suite: &TestSuite, records: &[SurprisalRecord], model: &str, opts: &AnalysisOptions) -> Result<SuiteResult, PsychError> {
    suite.validate()?;
    let index = RecordIndex::new(records.iter().filter(|r| r.model == model && r.suite == suite.name));
    let mut dropped: Vec<DroppedItem> = Vec::new();
    let mut blocks = Vec::new();
    for block in suite.blocks() {
        let names: Vec<&str> = match suite.kind {
            AnalysisKind::CustomContrast => suite.contrast.keys().map(String::as_str).collect(),
            _ => cell_names(suite, block)?,
        };
        let mut rows: Vec<ItemRow> = Vec::new();
        for item in &suite.items {
            let mut cells = Vec::with_capacity(names.len());
            let mut failure = None;
            for c in &names {
                match index.aggregate(suite, &item.id, c, &opts.selection) {
                    Ok(v) => cells.push(v),
                    Err(PsychError::Incomplete(msg)) => {
                        failure = Some(msg);
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if let Some(reason) = failure {
                if !dropped.iter().any(|d| d.item == item.id) {
                    dropped.push(DroppedItem { item: item.id.clone(), reason });
                }
                continue;
            }
            let values = match suite.kind {
                AnalysisKind::WhInteraction => alloc::vec![wh_interaction(cells[0], cells[1], cells[2], cells[3])],
                AnalysisKind::Npi => alloc::vec![cells[1] - cells[0], cells[2] - cells[0]],
                AnalysisKind::CustomContrast => {
                    alloc::vec![names.iter().zip(&cells).map(|(c, v)| suite.contrast[*c] * v).sum()]
                }
            };
            rows.push(ItemRow { item: item.id.clone(), cells, values });
        }
        blocks.push((block, names, rows));
    }
    // Listwise: an item dropped in any block is dropped everywhere.
    for (_, _, rows) in &mut blocks {
        rows.retain(|r| !dropped.iter().any(|d| d.item == r.item));
    }

    let effect_names: &[&str] = match suite.kind {
        AnalysisKind::WhInteraction => &["wh-interaction"],
        AnalysisKind::Npi => &["licensor", "distractor"],
        AnalysisKind::CustomContrast => &["contrast"],
    };
    let mut results = Vec::new();
    for (block, names, rows) in blocks {
        let table: Vec<Vec<f64>> = rows.iter().map(|r| r.cells.clone()).collect();
        let intervals = stats::within_item_ci(&table, opts.level)?;
        let conditions = names
            .iter()
            .zip(intervals)
            .map(|(c, interval)| ConditionSummary {
                condition: String::from(*c),
                grammatical: suite.condition(c).map_or(true, |s| s.grammatical),
                interval,
            })
            .collect();
        let effects = effect_names
            .iter()
            .enumerate()
            .map(|(k, name)| summarize_effect(name, &rows.iter().map(|r| r.values[k]).collect::<Vec<_>>(), opts))
            .collect::<Result<Vec<_>, _>>()?;
        let regression = match suite.kind {
            AnalysisKind::CustomContrast => None,
            _ => {
                let design: Vec<DesignRow> = rows
                    .iter()
                    .flat_map(|r| {
                        CELLS.iter().zip(&r.cells).map(|(&(x, y), v)| DesignRow { item: r.item.clone(), levels: alloc::vec![x, y], y: *v })
                    })
                    .collect();
                Some(stats::sum_coded_fit(&design, suite.kind.factors(), true, true)?)
            }
        };
        let accuracy = (suite.kind == AnalysisKind::Npi).then(|| {
            let items: Vec<NpiItem> = rows
                .iter()
                .map(|r| NpiItem { item: r.item.clone(), surprisal: [r.cells[0], r.cells[1], r.cells[2], r.cells[3]] })
                .collect();
            npi_accuracy(&items)
        });
        results.push(BlockResult { block: block.map(String::from), conditions, items: rows, effects, regression, accuracy });
    }
    Ok(SuiteResult { suite: suite.name.clone(), model: String::from(model), kind: suite.kind, blocks: results, dropped })
}
