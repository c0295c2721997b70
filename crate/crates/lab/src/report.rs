//! Analysis bundles, summary tables and SVG figures.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rnnglab_core::psych::{analyze_suite, models_in, AnalysisOptions, Interval, RegionSelection, SuiteResult};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fsio;
use crate::provenance::Provenance;
use crate::records;
use crate::scoring::load_suite;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeSettings {
    pub records: Vec<PathBuf>,
    pub suites: Vec<PathBuf>,
    /// Regions to sum; empty means those marked as measured.
    pub regions: Vec<String>,
    pub permutations: usize,
    pub seed: u64,
    pub level: f64,
    pub out: PathBuf,
}

impl Default for AnalyzeSettings {
    fn default() -> Self {
        let o = AnalysisOptions::default();
        AnalyzeSettings {
            records: Vec::new(),
            suites: Vec::new(),
            regions: Vec::new(),
            permutations: o.permutations,
            seed: o.seed,
            level: o.level,
            out: PathBuf::from("analysis.json"),
        }
    }
}

impl AnalyzeSettings {
    pub fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            selection: if self.regions.is_empty() { RegionSelection::Measured } else { RegionSelection::Named(self.regions.clone()) },
            permutations: self.permutations,
            seed: self.seed,
            level: self.level,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub provenance: Provenance,
    pub results: Vec<SuiteResult>,
}

/// Analyses every (suite, model) pair found in the records.
pub fn analyze(settings: &AnalyzeSettings) -> Result<Bundle> {
    if settings.records.is_empty() || settings.suites.is_empty() {
        return Err(LabError::Usage("analyze needs --records and --suite".into()));
    }
    if !(settings.level > 0.0 && settings.level < 1.0) {
        return Err(LabError::Usage("level must be in (0, 1)".into()));
    }
    let mut provenance = Provenance::new("analyze", settings, settings.seed);
    let mut recs = Vec::new();
    for p in &settings.records {
        let path = fsio::resolve(p);
        provenance = provenance.with_input(&format!("records {}", p.display()), &path)?;
        recs.extend(records::read_tsv(&path)?);
    }
    let opts = settings.options();
    let mut results = Vec::new();
    for p in &settings.suites {
        let suite = load_suite(p)?;
        provenance = provenance.with_input(&format!("suite {}", suite.name), &fsio::resolve(p))?;
        let own: Vec<_> = recs.iter().filter(|r| r.suite == suite.name).cloned().collect();
        if own.is_empty() {
            return Err(LabError::Data(format!("no records for suite `{}`", suite.name)));
        }
        for model in models_in(&own) {
            results.push(analyze_suite(&suite, &own, model, &opts)?);
        }
    }
    Ok(Bundle { provenance, results })
}

pub fn write_bundle(path: &Path, bundle: &Bundle) -> Result<()> {
    let bytes = serde_json::to_vec_pretty(bundle).expect("bundles serialize");
    fsio::write_atomic(path, &bytes)
}

pub fn read_bundle(path: &Path) -> Result<Bundle> {
    let path = fsio::resolve(path);
    serde_json::from_slice(&fsio::read(&path)?).map_err(|e| LabError::format(&path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSettings {
    pub analysis: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for ReportSettings {
    fn default() -> Self {
        ReportSettings { analysis: None, out: PathBuf::from("report") }
    }
}

fn fmt_f(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.4}")
    } else {
        format!("{x}")
    }
}

fn block_name(b: &Option<String>) -> &str {
    b.as_deref().unwrap_or("-")
}

/// Condition means with within-item intervals.
pub fn conditions_table(results: &[SuiteResult]) -> String {
    let mut s = String::from("suite\tmodel\tblock\tcondition\tgrammatical\tmean\tlower\tupper\tn_items\n");
    for r in results {
        for b in &r.blocks {
            for c in &b.conditions {
                let i = &c.interval;
                let _ = writeln!(
                    s,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.suite,
                    r.model,
                    block_name(&b.block),
                    c.condition,
                    c.grammatical,
                    fmt_f(i.mean),
                    fmt_f(i.lower),
                    fmt_f(i.upper),
                    b.items.len()
                );
            }
        }
    }
    s
}

/// Effect estimates, plus regression terms and NPI accuracy where present.
pub fn effects_table(results: &[SuiteResult]) -> String {
    let mut s = String::from("suite\tmodel\tblock\tstatistic\testimate\tlower\tupper\tp\tn\n");
    for r in results {
        for b in &r.blocks {
            let block = block_name(&b.block);
            for e in &b.effects {
                let i = &e.interval;
                let _ = writeln!(
                    s,
                    "{}\t{}\t{block}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.suite,
                    r.model,
                    e.name,
                    fmt_f(i.mean),
                    fmt_f(i.lower),
                    fmt_f(i.upper),
                    fmt_f(e.p_permutation),
                    e.n
                );
                let _ = writeln!(s, "{}\t{}\t{block}\t{}:cohens_d\t{}\t\t\t\t{}", r.suite, r.model, e.name, fmt_f(e.cohens_d.d), e.n);
            }
            if let Some(fit) = &b.regression {
                for c in fit.coefficients.iter().filter(|c| !c.term.starts_with("item[")) {
                    let _ = writeln!(
                        s,
                        "{}\t{}\t{block}\tbeta:{}\t{}\t{}\t{}\t{}\t{}",
                        r.suite,
                        r.model,
                        c.term,
                        fmt_f(c.estimate),
                        fmt_f(c.estimate - 1.96 * c.std_error),
                        fmt_f(c.estimate + 1.96 * c.std_error),
                        fmt_f(c.p),
                        fit.residual_df
                    );
                }
            }
            if let Some(a) = &b.accuracy {
                let _ = writeln!(
                    s,
                    "{}\t{}\t{block}\tnpi_accuracy\t{}\t{}\t{}\t{}\t{}",
                    r.suite,
                    r.model,
                    fmt_f(a.accuracy),
                    fmt_f(a.lower),
                    fmt_f(a.upper),
                    fmt_f(a.p_binomial),
                    a.n
                );
            }
        }
    }
    s
}

const PALETTE: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

/// One bar: a value with an optional interval.
struct Bar {
    interval: Interval,
}

/// A group of bars sharing an x label.
struct Group {
    label: String,
    marker: bool,
    bars: Vec<Bar>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Grouped bar chart with whiskers; `series` names the bars within a group.
fn bar_chart(title: &str, y_label: &str, series: &[String], groups: &[Group], y_range: Option<(f64, f64)>) -> String {
    let (w, h) = (120.0 + 90.0 * groups.len().max(1) as f64 * (series.len().max(1) as f64 * 0.5 + 0.5), 360.0);
    let (left, right, top, bottom) = (70.0, 20.0 + 110.0, 40.0, 60.0);
    let w = w + right;
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;

    let (lo, hi) = y_range.unwrap_or_else(|| {
        let mut lo: f64 = 0.0;
        let mut hi: f64 = 0.0;
        for b in groups.iter().flat_map(|g| &g.bars) {
            for v in [b.interval.mean, b.interval.lower, b.interval.upper] {
                if v.is_finite() {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        if hi - lo < 1e-9 {
            hi = lo + 1.0;
        }
        let pad = 0.08 * (hi - lo);
        (if lo < 0.0 { lo - pad } else { lo }, hi + pad)
    });
    let y = |v: f64| top + plot_h * (hi - v.clamp(lo, hi)) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#, left + plot_w / 2.0, escape(title));
    // Axis and ticks.
    let ticks = 5;
    for k in 0..=ticks {
        let v = lo + (hi - lo) * k as f64 / ticks as f64;
        let yy = y(v);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#e0e0e0"/>"##, left + plot_w);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"#, left - 6.0, yy + 4.0);
    }
    let _ = writeln!(s, r#"<line x1="{left}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#, y(0.0), left + plot_w, y(0.0));
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{:.1}" stroke="black"/>"#, top + plot_h);
    let _ = writeln!(
        s,
        r#"<text transform="translate(18,{:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        top + plot_h / 2.0,
        escape(y_label)
    );

    let group_w = plot_w / groups.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;
    for (gi, g) in groups.iter().enumerate() {
        let gx = left + group_w * gi as f64 + group_w * 0.1;
        for (bi, b) in g.bars.iter().enumerate() {
            let x = gx + bar_w * bi as f64;
            let m = b.interval.mean;
            if !m.is_finite() {
                continue;
            }
            let (y0, y1) = (y(0.0_f64.max(lo)), y(m));
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
                y0.min(y1),
                bar_w * 0.9,
                (y0 - y1).abs(),
                PALETTE[bi % PALETTE.len()]
            );
            let (l, u) = (b.interval.lower, b.interval.upper);
            if l.is_finite() && u.is_finite() {
                let cx = x + bar_w * 0.45;
                let _ = writeln!(s, r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#, y(l), y(u));
                for v in [l, u] {
                    let _ = writeln!(s, r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#, cx - 4.0, y(v), cx + 4.0, y(v));
                }
            }
        }
        let label = if g.marker { format!("*{}", g.label) } else { g.label.clone() };
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            left + group_w * (gi as f64 + 0.5),
            top + plot_h + 18.0,
            escape(&label)
        );
    }
    for (k, name) in series.iter().enumerate() {
        let ly = top + 14.0 * k as f64;
        let lx = left + plot_w + 12.0;
        let _ = writeln!(s, r#"<rect x="{lx:.1}" y="{ly:.1}" width="10" height="10" fill="{}"/>"#, PALETTE[k % PALETTE.len()]);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 14.0, ly + 9.0, escape(name));
    }
    if groups.iter().any(|g| g.marker) {
        let _ = writeln!(s, r#"<text x="{left}" y="{:.1}" font-size="10">* ungrammatical</text>"#, h - 12.0);
    }
    s.push_str("</svg>\n");
    s
}

/// Groups results of the same suite, keeping first-seen order.
fn by_suite(results: &[SuiteResult]) -> Vec<(&str, Vec<&SuiteResult>)> {
    let mut out: Vec<(&str, Vec<&SuiteResult>)> = Vec::new();
    for r in results {
        match out.iter_mut().find(|(s, _)| *s == r.suite) {
            Some((_, v)) => v.push(r),
            None => out.push((&r.suite, vec![r])),
        }
    }
    out
}

/// Condition means per model, one figure per suite and block.
pub fn condition_figures(results: &[SuiteResult]) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for (suite, rs) in by_suite(results) {
        let series: Vec<String> = rs.iter().map(|r| r.model.clone()).collect();
        for (bi, block) in rs[0].blocks.iter().enumerate() {
            let groups = block
                .conditions
                .iter()
                .enumerate()
                .map(|(ci, c)| Group {
                    label: c.condition.clone(),
                    marker: !c.grammatical,
                    bars: rs
                        .iter()
                        .map(|r| Bar { interval: r.blocks.get(bi).and_then(|b| b.conditions.get(ci)).map_or(nan_interval(), |c| c.interval) })
                        .collect(),
                })
                .collect::<Vec<_>>();
            let name = match &block.block {
                Some(b) => format!("{suite}.{b}.conditions.svg"),
                None => format!("{suite}.conditions.svg"),
            };
            let title = match &block.block {
                Some(b) => format!("{suite} ({b})"),
                None => suite.to_string(),
            };
            out.insert(name, bar_chart(&title, "surprisal (bits)", &series, &groups, None));
        }
    }
    out
}

fn nan_interval() -> Interval {
    Interval { mean: f64::NAN, lower: f64::NAN, upper: f64::NAN }
}

/// Effect sizes per model, one group per block and effect.
pub fn effect_figures(results: &[SuiteResult]) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for (suite, rs) in by_suite(results) {
        let series: Vec<String> = rs.iter().map(|r| r.model.clone()).collect();
        let mut groups = Vec::new();
        for (bi, block) in rs[0].blocks.iter().enumerate() {
            for (ei, e) in block.effects.iter().enumerate() {
                let label = match &block.block {
                    Some(b) => format!("{} {b}", e.name),
                    None => e.name.clone(),
                };
                groups.push(Group {
                    label,
                    marker: false,
                    bars: rs
                        .iter()
                        .map(|r| Bar { interval: r.blocks.get(bi).and_then(|b| b.effects.get(ei)).map_or(nan_interval(), |e| e.interval) })
                        .collect(),
                });
            }
        }
        out.insert(format!("{suite}.effects.svg"), bar_chart(&format!("{suite}: effects"), "bits", &series, &groups, None));
    }
    out
}

/// NPI accuracy per model with Clopper-Pearson bars.
pub fn accuracy_figures(results: &[SuiteResult]) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for (suite, rs) in by_suite(results) {
        if rs[0].blocks.iter().all(|b| b.accuracy.is_none()) {
            continue;
        }
        let series: Vec<String> = rs.iter().map(|r| r.model.clone()).collect();
        let groups = rs[0]
            .blocks
            .iter()
            .enumerate()
            .map(|(bi, b)| Group {
                label: block_name(&b.block).to_string(),
                marker: false,
                bars: rs
                    .iter()
                    .map(|r| Bar {
                        interval: r
                            .blocks
                            .get(bi)
                            .and_then(|b| b.accuracy.as_ref())
                            .map_or(nan_interval(), |a| Interval { mean: a.accuracy, lower: a.lower, upper: a.upper }),
                    })
                    .collect(),
            })
            .collect::<Vec<_>>();
        out.insert(format!("{suite}.accuracy.svg"), bar_chart(&format!("{suite}: accuracy"), "proportion correct", &series, &groups, Some((0.0, 1.0))));
    }
    out
}

/// Runs `report`; returns the files written.
pub fn run(settings: &ReportSettings) -> Result<Vec<PathBuf>> {
    let input = settings.analysis.as_deref().ok_or_else(|| LabError::Usage("--analysis is required".into()))?;
    let bundle = read_bundle(input)?;
    let dir = fsio::resolve(&settings.out);
    let mut files: BTreeMap<String, String> = BTreeMap::new();
    let header = bundle.provenance.header_lines();
    files.insert("conditions.tsv".into(), format!("{header}{}", conditions_table(&bundle.results)));
    files.insert("effects.tsv".into(), format!("{header}{}", effects_table(&bundle.results)));
    files.extend(condition_figures(&bundle.results));
    files.extend(effect_figures(&bundle.results));
    files.extend(accuracy_figures(&bundle.results));
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fsio::write_atomic(&path, body.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
