#![allow(dead_code)]

use rnnglab_core::models::{build_examples, Action, ActionSpace, Architecture, Counters, Example, ModelSpec};
use rnnglab_core::treebank::{build_vocab, ingest_trees, Inventory, Pcfg, Vocabulary};

pub struct Toy {
    pub vocab: Vocabulary,
    pub labels: Inventory,
    pub train: Vec<Example>,
    pub dev: Vec<Example>,
}

impl Toy {
    pub fn spec(&self, arch: Architecture, dims: usize) -> ModelSpec {
        let mut spec = ModelSpec::new(arch, self.vocab.len(), self.labels.len()).with_dims(dims, dims);
        spec.layers = 1;
        spec.dropout = 0.0;
        spec
    }
}

/// Sampled, stripped corpus from one of the shipped grammars.
pub fn toy_corpus(grammar: &str, train: usize, dev: usize, seed: u64) -> Toy {
    let g = Pcfg::parse(grammar).unwrap();
    let trees = g.sample_corpus(train + dev, seed, 40).unwrap().trees;
    let corpus = ingest_trees(&trees, 120);
    assert_eq!(corpus.trees.len(), train + dev);
    let words: Vec<Vec<&str>> = corpus.trees[..train].iter().map(|t| t.words()).collect();
    let vocab = build_vocab(&words, 1);
    let labels = corpus.labels();
    let examples = build_examples(&corpus.trees, &vocab, &labels).unwrap();
    let dev_set = examples[train..].to_vec();
    let mut train_set = examples;
    train_set.truncate(train);
    Toy { vocab, labels, train: train_set, dev: dev_set }
}

/// Legality written out directly from the transition rules, for short
/// sequences where the length cap cannot bind.
pub fn legal_by_rule(history: &[Action], a: Action) -> bool {
    let mut opens = 0usize;
    for h in history {
        match h {
            Action::Nt(_) => opens += 1,
            Action::Reduce => opens -= 1,
            Action::Gen(_) => {}
        }
    }
    if !history.is_empty() && opens == 0 {
        return false;
    }
    let fresh = matches!(history.last(), Some(Action::Nt(_)));
    match a {
        Action::Nt(_) => opens < 60,
        Action::Gen(_) => opens > 0,
        Action::Reduce => opens > 0 && !fresh,
    }
}

/// All action sequences over the space with length at most `max_len`.
pub fn all_sequences(space: &ActionSpace, max_len: usize) -> Vec<Vec<Action>> {
    let alphabet: Vec<Action> = std::iter::once(Action::Reduce)
        .chain((0..space.vocab as u32).map(Action::Gen))
        .chain((0..space.labels as u32).map(Action::Nt))
        .collect();
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &a in &alphabet {
                let mut t: Vec<Action> = s.clone();
                t.push(a);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Complete parses of `words`, expanding every legal action.
pub fn enumerate_parses(space: &ActionSpace, words: &[u32]) -> Vec<Vec<Action>> {
    fn go(space: &ActionSpace, words: &[u32], c: Counters, prefix: &mut Vec<Action>, out: &mut Vec<Vec<Action>>) {
        if c.is_terminal() {
            if c.words == words.len() {
                out.push(prefix.clone());
            }
            return;
        }
        let mut options = vec![Action::Reduce];
        if let Some(&w) = words.get(c.words) {
            options.push(Action::Gen(w));
        }
        options.extend((0..space.labels as u32).map(Action::Nt));
        for a in options {
            if !space.is_legal(&c, a) {
                continue;
            }
            let mut next = c;
            next.actions += 1;
            next.fresh_open = matches!(a, Action::Nt(_));
            match a {
                Action::Nt(_) => next.opens += 1,
                Action::Gen(_) => next.words += 1,
                Action::Reduce => next.opens -= 1,
            }
            prefix.push(a);
            go(space, words, next, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(space, words, Counters::default(), &mut Vec::new(), &mut out);
    out
}

pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
