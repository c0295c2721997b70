//! Probabilistic context-free grammars for synthetic corpora.
//!
//! Text format, one rule per line: `LHS -> RHS1 RHS2 ... # prob`. Lines
//! starting with `#` are comments. The first left-hand side is the start
//! symbol; a symbol is a nonterminal iff it appears on some left-hand side.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::tree::ParseTree;
use crate::math;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Symbol {
    Nonterminal(usize),
    Terminal(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub lhs: usize,
    pub rhs: Vec<Symbol>,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum PcfgError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: &'static str },
    #[error("grammar has no rules")]
    Empty,
    #[error("probabilities for `{lhs}` sum to {sum}")]
    NotNormalized { lhs: String, sum: f64 },
    #[error("expected derivation size is infinite (spectral radius {radius:.6})")]
    Explosive { radius: f64 },
    #[error("could not sample a tree within depth {max_depth} after {attempts} attempts")]
    DepthCap { max_depth: usize, attempts: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pcfg {
    pub nonterminals: Vec<String>,
    pub rules: Vec<Rule>,
    pub start: usize,
    by_lhs: Vec<Vec<usize>>,
}

/// Trees sampled by [`Pcfg::sample_corpus`] and how many derivations hit
/// the depth cap and were redrawn.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleReport {
    pub trees: Vec<ParseTree>,
    pub cap_hits: usize,
}

impl Pcfg {
    /// Parses and validates a grammar.
    pub fn parse(text: &str) -> Result<Pcfg, PcfgError> {
        let mut raw: Vec<(usize, &str, Vec<&str>, f64)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let syntax = |message| PcfgError::Syntax { line: line_no, message };
            let (rule, prob) = trimmed.split_once('#').ok_or(syntax("missing `# prob`"))?;
            let prob: f64 = prob.trim().parse().map_err(|_| syntax("probability is not a number"))?;
            if !(prob > 0.0 && prob <= 1.0) {
                return Err(syntax("probability outside (0, 1]"));
            }
            let (lhs, rhs) = rule.split_once("->").ok_or(syntax("missing `->`"))?;
            let lhs = lhs.trim();
            if lhs.is_empty() || lhs.contains(char::is_whitespace) {
                return Err(syntax("left-hand side must be one symbol"));
            }
            let rhs: Vec<&str> = rhs.split_whitespace().collect();
            if rhs.is_empty() {
                return Err(syntax("empty right-hand side"));
            }
            raw.push((line_no, lhs, rhs, prob));
        }
        if raw.is_empty() {
            return Err(PcfgError::Empty);
        }
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        let mut nonterminals = Vec::new();
        for (_, lhs, _, _) in &raw {
            if !index.contains_key(lhs) {
                index.insert(lhs, nonterminals.len());
                nonterminals.push(String::from(*lhs));
            }
        }
        let rules: Vec<Rule> = raw
            .iter()
            .map(|(_, lhs, rhs, prob)| Rule {
                lhs: index[lhs],
                rhs: rhs
                    .iter()
                    .map(|s| match index.get(s) {
                        Some(&n) => Symbol::Nonterminal(n),
                        None => Symbol::Terminal(String::from(*s)),
                    })
                    .collect(),
                prob: *prob,
            })
            .collect();
        let mut by_lhs = vec![Vec::new(); nonterminals.len()];
        for (i, r) in rules.iter().enumerate() {
            by_lhs[r.lhs].push(i);
        }
        let g = Pcfg { nonterminals, rules, start: 0, by_lhs };
        g.validate()?;
        Ok(g)
    }

    pub fn start_symbol(&self) -> &str {
        &self.nonterminals[self.start]
    }

    pub fn rules_for(&self, lhs: usize) -> impl Iterator<Item = &Rule> {
        self.by_lhs[lhs].iter().map(move |&i| &self.rules[i])
    }

    pub fn validate(&self) -> Result<(), PcfgError> {
        for (n, name) in self.nonterminals.iter().enumerate() {
            let sum: f64 = self.rules_for(n).map(|r| r.prob).sum();
            if math::abs(sum - 1.0) > 1e-9 {
                return Err(PcfgError::NotNormalized { lhs: name.clone(), sum });
            }
        }
        let radius = self.spectral_radius();
        if radius >= 1.0 - 1e-9 {
            return Err(PcfgError::Explosive { radius });
        }
        Ok(())
    }

    /// Expected number of `B` children of an `A` node.
    pub fn expected_offspring(&self) -> Vec<Vec<f64>> {
        let n = self.nonterminals.len();
        let mut m = vec![vec![0.0; n]; n];
        for r in &self.rules {
            for s in &r.rhs {
                if let Symbol::Nonterminal(b) = s {
                    m[r.lhs][*b] += r.prob;
                }
            }
        }
        m
    }

    /// Spectral radius of [`Self::expected_offspring`], by repeated
    /// normalised squaring: ρ = lim ‖M^(2^k)‖^(1/2^k).
    pub fn spectral_radius(&self) -> f64 {
        let mut a = self.expected_offspring();
        let n = a.len();
        let norm = |a: &Vec<Vec<f64>>| a.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max);
        let n0 = norm(&a);
        if n0 == 0.0 {
            return 0.0;
        }
        a.iter_mut().flatten().for_each(|x| *x /= n0);
        let mut log_scale = math::ln(n0);
        let mut power = 1.0;
        for _ in 0..40 {
            let mut sq = vec![vec![0.0; n]; n];
            for i in 0..n {
                for k in 0..n {
                    let aik = a[i][k];
                    if aik == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        sq[i][j] += aik * a[k][j];
                    }
                }
            }
            let s = norm(&sq);
            if s == 0.0 {
                return 0.0;
            }
            sq.iter_mut().flatten().for_each(|x| *x /= s);
            a = sq;
            log_scale = 2.0 * log_scale + math::ln(s);
            power *= 2.0;
        }
        math::exp(log_scale / power)
    }

    /// One derivation, or `None` if it exceeds `max_depth`.
    pub fn sample_tree<R: Rng>(&self, rng: &mut R, max_depth: usize) -> Option<ParseTree> {
        self.expand(self.start, rng, max_depth)
    }

    fn expand<R: Rng>(&self, lhs: usize, rng: &mut R, depth_left: usize) -> Option<ParseTree> {
        if depth_left == 0 {
            return None;
        }
        let rules = &self.by_lhs[lhs];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = *rules.last().expect("nonterminal without rules");
        for &r in rules {
            acc += self.rules[r].prob;
            if u < acc {
                chosen = r;
                break;
            }
        }
        let mut children = Vec::with_capacity(self.rules[chosen].rhs.len());
        for s in &self.rules[chosen].rhs {
            match s {
                Symbol::Terminal(w) => children.push(ParseTree::leaf(w.clone())),
                Symbol::Nonterminal(b) => children.push(self.expand(*b, rng, depth_left - 1)?),
            }
        }
        Some(ParseTree::node(self.nonterminals[lhs].clone(), children))
    }

    /// `n` i.i.d. trees; deterministic given `seed`. Derivations deeper than
    /// `max_depth` are redrawn.
    pub fn sample_corpus(&self, n: usize, seed: u64, max_depth: usize) -> Result<SampleReport, PcfgError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trees = Vec::with_capacity(n);
        let mut cap_hits = 0;
        let budget = 1000 * n.max(1);
        while trees.len() < n {
            match self.sample_tree(&mut rng, max_depth) {
                Some(t) => trees.push(t),
                None => {
                    cap_hits += 1;
                    if cap_hits > budget {
                        return Err(PcfgError::DepthCap { max_depth, attempts: cap_hits });
                    }
                }
            }
        }
        Ok(SampleReport { trees, cap_hits })
    }
}
