//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p rnnglab --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rnnglab_core::decode::{word_sync_beam, BeamConfig};
use rnnglab_core::models::{Action, ActionLstm, ActionSpace, Architecture, Counters, ModelSpec, Rnng, TransitionModel};
use rnnglab_core::numcore::{
    gradient_check, softmax_cross_entropy, BiLstmComposer, Graph, LstmCell, Objective, ParamId, ParamStore, Shape, StackedLstm, Tensor,
};
use rnnglab_core::psych::stats::{mean_ci, sum_coded_fit, t_quantile, DesignRow};
use rnnglab_core::psych::{cohens_d, wh_interaction, within_item_ci};
use rnnglab_core::treebank::{
    actions_to_tree, ingest_trees, parse_bracketed, strip_annotations, tree_to_actions, Pcfg, TreeAction, FILLER_GAP_GRAMMAR, NPI_GRAMMAR,
};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
    NotATarget(String),
}

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture may be passed; none apply here.
    let criteria: Vec<(u32, fn() -> Verdict)> = vec![
        (1, || checked(gradients)),
        (2, || checked(round_trips)),
        (3, || checked(beam_vs_exhaustive)),
        (4, || checked(enumeration)),
        (5, wh_pipeline),
        (6, || checked(regression_fixtures)),
        (7, || checked(interaction_fixtures)),
        (8, treebank_counts),
        (9, || {
            Verdict::NotATarget(
                "NPI accuracies and parser F1 need the original treebank, stimuli and full-scale training; \
                 the pipeline runs but the published figures are not reproduced here"
                    .into(),
            )
        }),
    ];
    let mut failed = 0;
    for (n, run) in criteria {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Verdict::Fail(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
            Verdict::NotATarget(d) => ("NOT-A-TARGET", d),
        };
        println!("criterion {n}: {tag} {detail} ({secs:.1}s)");
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn checked(f: fn() -> Check) -> Verdict {
    match f() {
        Ok(d) => Verdict::Pass(d),
        Err(d) => Verdict::Fail(d),
    }
}

// ---- 1: gradients ----

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-4;
const FLOOR: f64 = 1e-6;
const INSTANCES: u64 = 20;

fn random(store: &mut ParamStore, name: &str, shape: Shape, rng: &mut ChaCha8Rng) -> ParamId {
    store.add_uniform(name, shape, 1.0, rng)
}

/// Scalar readout through fixed random weights.
fn project<G: Graph>(g: &mut G, v: &G::Var, seed: u64) -> G::Var {
    let n = g.value(v).len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let w = g.constant(Tensor::new(Shape::Matrix(1, n), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()));
    let b = g.constant(Tensor::vector(vec![0.0]));
    let y = g.affine(&w, v, &b);
    g.pick(&y, 0)
}

macro_rules! objective {
    ($name:ident { $($field:ident : $ty:ty),* } |$self_:ident, $g:ident| $body:block) => {
        struct $name { $($field: $ty),* }
        impl Objective for $name {
            fn eval<G: Graph>(&$self_, $g: &mut G) -> G::Var $body
        }
    };
}

objective!(Unary { x: ParamId, op: u8, seed: u64 } |self, g| {
    let x = g.param(self.x);
    let y = match self.op {
        0 => g.sigmoid(&x),
        1 => g.tanh(&x),
        2 => g.neg(&x),
        _ => g.log_softmax(&x, None),
    };
    project(g, &y, self.seed)
});

objective!(Binary { a: ParamId, b: ParamId, mul: bool, seed: u64 } |self, g| {
    let a = g.param(self.a);
    let b = g.param(self.b);
    let y = if self.mul { g.mul(&a, &b) } else { g.add(&a, &b) };
    project(g, &y, self.seed)
});

objective!(AffineObj { w: ParamId, x: ParamId, b: ParamId, seed: u64 } |self, g| {
    let w = g.param(self.w);
    let x = g.param(self.x);
    let b = g.param(self.b);
    let y = g.affine(&w, &x, &b);
    project(g, &y, self.seed)
});

objective!(Structural { a: ParamId, b: ParamId, emb: ParamId, row: usize, start: usize, len: usize, seed: u64 } |self, g| {
    let a = g.param(self.a);
    let b = g.param(self.b);
    let r = g.row(self.emb, self.row);
    let joined = g.concat(&[a, r, b]);
    let part = g.slice(&joined, self.start, self.len);
    project(g, &part, self.seed)
});

objective!(Masked { x: ParamId, mask: Vec<bool>, seed: u64 } |self, g| {
    let x = g.param(self.x);
    let lp = g.log_softmax(&x, Some(&self.mask));
    let picks: Vec<_> = self.mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| g.pick(&lp, i)).collect();
    let total = g.sum(&picks);
    let first = picks[0].clone();
    let both = g.concat(&[total, first]);
    project(g, &both, self.seed)
});

objective!(CrossEntropy { x: ParamId, target: usize } |self, g| {
    let x = g.param(self.x);
    softmax_cross_entropy(g, &x, self.target).unwrap()
});

objective!(LstmObj { cell: LstmCell, x: ParamId, h: ParamId, c: ParamId, seed: u64 } |self, g| {
    let x = g.param(self.x);
    let h = g.param(self.h);
    let c = g.param(self.c);
    let (h1, c1) = self.cell.step(g, &x, &h, &c).unwrap();
    let both = g.concat(&[h1, c1]);
    project(g, &both, self.seed)
});

objective!(StackedObj { lstm: StackedLstm, xs: Vec<ParamId>, seed: u64 } |self, g| {
    let mut st = self.lstm.initial(g);
    for &x in &self.xs {
        let x = g.param(x);
        st = self.lstm.step(g, &st, &x).unwrap();
    }
    let out = st.output().clone();
    project(g, &out, self.seed)
});

objective!(ComposeObj { comp: BiLstmComposer, label: ParamId, kids: Vec<ParamId>, seed: u64 } |self, g| {
    let label = g.param(self.label);
    let kids: Vec<_> = self.kids.iter().map(|&k| g.param(k)).collect();
    let out = self.comp.compose(g, &label, &kids).unwrap();
    project(g, &out, self.seed)
});

struct GradTally {
    worst: f64,
    worst_op: &'static str,
    instances: usize,
}

impl GradTally {
    fn check<O: Objective>(&mut self, store: &ParamStore, o: &O, op: &'static str) -> Result<(), String> {
        let r = gradient_check(store, o, STEP, FLOOR);
        ensure!(r.checked > 0, "{op}: no coordinates checked");
        ensure!(r.max_rel_error < TOL, "{op}: relative error {:e}", r.max_rel_error);
        if r.max_rel_error > self.worst {
            self.worst = r.max_rel_error;
            self.worst_op = op;
        }
        self.instances += 1;
        Ok(())
    }
}

fn gradients() -> Check {
    let mut t = GradTally { worst: 0.0, worst_op: "-", instances: 0 };
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (op, name) in [(0u8, "sigmoid"), (1, "tanh"), (2, "neg"), (3, "log-softmax")] {
            let mut s = ParamStore::new();
            let n = rng.random_range(1..=8);
            let x = random(&mut s, "x", Shape::Vector(n), &mut rng);
            t.check(&s, &Unary { x, op, seed }, name)?;
        }
        for mul in [false, true] {
            let mut s = ParamStore::new();
            let n = rng.random_range(1..=8);
            let a = random(&mut s, "a", Shape::Vector(n), &mut rng);
            let b = random(&mut s, "b", Shape::Vector(n), &mut rng);
            t.check(&s, &Binary { a, b, mul, seed }, if mul { "mul" } else { "add" })?;
        }

        let mut s = ParamStore::new();
        let (r, c) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let w = random(&mut s, "w", Shape::Matrix(r, c), &mut rng);
        let x = random(&mut s, "x", Shape::Vector(c), &mut rng);
        let b = random(&mut s, "b", Shape::Vector(r), &mut rng);
        t.check(&s, &AffineObj { w, x, b, seed }, "affine")?;

        let mut s = ParamStore::new();
        let (na, nb, e, rows) = (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=5));
        let a = random(&mut s, "a", Shape::Vector(na), &mut rng);
        let b = random(&mut s, "b", Shape::Vector(nb), &mut rng);
        let emb = random(&mut s, "emb", Shape::Matrix(rows, e), &mut rng);
        let total = na + nb + e;
        let start = rng.random_range(0..total);
        let len = rng.random_range(1..=total - start);
        let row = rng.random_range(0..rows);
        t.check(&s, &Structural { a, b, emb, row, start, len, seed }, "concat/slice/row")?;

        let mut s = ParamStore::new();
        let n = rng.random_range(2..=8);
        let x = random(&mut s, "x", Shape::Vector(n), &mut rng);
        let mut mask: Vec<bool> = (0..n).map(|_| rng.random_bool(0.6)).collect();
        mask[rng.random_range(0..n)] = true;
        t.check(&s, &Masked { x, mask, seed }, "masked log-softmax/pick/sum")?;

        let mut s = ParamStore::new();
        let n = rng.random_range(1..=8);
        let x = random(&mut s, "x", Shape::Vector(n), &mut rng);
        let target = rng.random_range(0..n);
        t.check(&s, &CrossEntropy { x, target }, "cross-entropy")?;

        let mut s = ParamStore::new();
        let (inp, hid) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let cell = LstmCell::register(&mut s, "cell", inp, hid, &mut rng);
        for id in [cell.weight, cell.bias] {
            s.get_mut(id).data_mut().iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        }
        let x = random(&mut s, "x", Shape::Vector(inp), &mut rng);
        let h = random(&mut s, "h", Shape::Vector(hid), &mut rng);
        let c = random(&mut s, "c", Shape::Vector(hid), &mut rng);
        t.check(&s, &LstmObj { cell, x, h, c, seed }, "lstm step")?;

        let mut s = ParamStore::new();
        let (inp, hid) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let lstm = StackedLstm::register(&mut s, "lstm", inp, hid, 2, 0.0, &mut rng);
        let xs = (0..3).map(|k| random(&mut s, &format!("x{k}"), Shape::Vector(inp), &mut rng)).collect();
        t.check(&s, &StackedObj { lstm, xs, seed }, "stacked lstm")?;

        let mut s = ParamStore::new();
        let dim = rng.random_range(1..=4);
        let comp = BiLstmComposer::register(&mut s, "comp", dim, &mut rng);
        let label = random(&mut s, "label", Shape::Vector(dim), &mut rng);
        let n = rng.random_range(1..=3);
        let kids = (0..n).map(|k| random(&mut s, &format!("kid{k}"), Shape::Vector(dim), &mut rng)).collect();
        t.check(&s, &ComposeObj { comp, label, kids, seed }, "composition")?;
    }
    Ok(format!("{} instances over 14 ops, worst relative error {:.2e} ({})", t.instances, t.worst, t.worst_op))
}

// ---- 2: oracle round trip ----

const FIGURE_TREE: &str = "(S (NP-SBJ We) (VP make (SBAR (WHNP-1 what) (S (NP-SBJ we) (VP know (SBAR (WHADVP-2 how) (S (VP to (VP make (NP (-NONE- *T*-1)) (ADVP (-NONE- *T*-2)))))))))))";
const FIGURE_TREE_STRIPPED: &str = "(S (NP We) (VP make (SBAR (WHNP what) (S (NP we) (VP know (SBAR (WHADVP how) (S (VP to (VP make)))))))))";

fn round_trips() -> Check {
    let grammars = [
        ("fillergap", FILLER_GAP_GRAMMAR, 1),
        ("npi", NPI_GRAMMAR, 2),
        ("recursive", "S -> S S # 0.3\nS -> X # 0.7\nX -> a # 0.5\nX -> b X # 0.5\n", 3),
    ];
    let mut total = 0;
    for (name, text, seed) in grammars {
        let g = Pcfg::parse(text).map_err(|e| format!("{name}: {e}"))?;
        let sample = g.sample_corpus(1000, seed, 60).map_err(|e| format!("{name}: {e}"))?;
        let corpus = ingest_trees(&sample.trees, usize::MAX);
        ensure!(corpus.trees.len() == 1000, "{name}: {} trees survived ingestion", corpus.trees.len());
        for t in &corpus.trees {
            let actions = tree_to_actions(t).map_err(|e| format!("{name}: {e}"))?;
            let back = actions_to_tree(&actions).map_err(|e| format!("{name}: {e}"))?;
            ensure!(&back == t, "{name}: {t} came back as {back}");
            let gens: Vec<&str> = actions
                .iter()
                .filter_map(|a| match a {
                    TreeAction::Gen(w) => Some(w.as_str()),
                    _ => None,
                })
                .collect();
            ensure!(gens == t.words(), "{name}: GEN order differs for {t}");
        }
        total += corpus.trees.len();
    }
    let raw = parse_bracketed(FIGURE_TREE).map_err(|e| e.to_string())?;
    let stripped = strip_annotations(&raw).map_err(|e| e.to_string())?;
    ensure!(stripped.to_string() == FIGURE_TREE_STRIPPED, "stripped fixture is {stripped}");
    let back = actions_to_tree(&tree_to_actions(&stripped).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure!(back == stripped, "fixture round trip gave {back}");
    Ok(format!("{total} sampled trees from 3 grammars plus the traced fixture round-trip exactly"))
}

// ---- 3: beam against exhaustive marginal ----

const LN2: f64 = std::f64::consts::LN_2;

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn next_counters(c: Counters, a: Action) -> Counters {
    let mut n = c;
    n.actions += 1;
    n.fresh_open = matches!(a, Action::Nt(_));
    match a {
        Action::Nt(_) => n.opens += 1,
        Action::Gen(_) => n.words += 1,
        Action::Reduce => n.opens -= 1,
    }
    n
}

fn count_parses(space: &ActionSpace, words: &[u32], c: Counters) -> usize {
    if c.is_terminal() {
        return usize::from(c.words == words.len());
    }
    let mut options = vec![Action::Reduce];
    if let Some(&w) = words.get(c.words) {
        options.push(Action::Gen(w));
    }
    options.extend((0..space.labels as u32).map(Action::Nt));
    options.into_iter().filter(|&a| space.is_legal(&c, a)).map(|a| count_parses(space, words, next_counters(c, a))).sum()
}

/// `ln P(x_1..x_i)` for every prefix, summed over all partial derivations.
fn exact_prefix_log_probs<M: TransitionModel>(model: &M, words: &[u32]) -> Vec<f64> {
    let space = *model.space();
    let mut sums: Vec<Vec<f64>> = vec![Vec::new(); words.len()];
    let mut stack = vec![model.initial_state().unwrap()];
    while let Some(s) = stack.pop() {
        let c = s.counters();
        if c.is_terminal() {
            continue;
        }
        let mut options = vec![Action::Reduce];
        options.extend((0..space.labels as u32).map(Action::Nt));
        if let Some(&w) = words.get(c.words) {
            options.push(Action::Gen(w));
        }
        for a in options {
            if !space.is_legal(&c, a) {
                continue;
            }
            let next = model.advance(&s, a).unwrap();
            if let Action::Gen(_) = a {
                sums[c.words].push(next.log_prob());
            }
            stack.push(next);
        }
    }
    sums.iter().map(|v| log_sum_exp(v)).collect()
}

fn beam_vs_exhaustive() -> Check {
    let mut spec = ModelSpec::new(Architecture::Rnng, 3, 1).with_dims(5, 5);
    spec.layers = 1;
    spec.dropout = 0.0;
    spec.max_open = 2;
    spec.seed = 3;
    let mut model = Rnng::new(spec);
    let store = model.params_mut();
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        store.get_mut(id).data_mut().iter_mut().for_each(|x| *x *= 20.0);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sentences: Vec<Vec<u32>> = (0..50)
        .map(|_| {
            let len = rng.random_range(1..=3);
            (0..len).map(|_| rng.random_range(0..3)).collect()
        })
        .collect();
    let (mut worst, mut max_parses) = (0.0f64, 0);
    for words in &sentences {
        let parses = count_parses(model.space(), words, Counters::default());
        ensure!(parses <= 20, "{words:?} has {parses} parses");
        max_parses = max_parses.max(parses);
        let mut prev = 0.0;
        let exact: Vec<f64> = exact_prefix_log_probs(&model, words)
            .into_iter()
            .map(|p| {
                let s = (prev - p) / LN2;
                prev = p;
                s
            })
            .collect();
        let beam = word_sync_beam(&model, words, &BeamConfig::new(100, 10)).map_err(|e| format!("{words:?}: {e}"))?;
        for (b, e) in beam.surprisals().iter().zip(&exact) {
            worst = worst.max((b - e).abs());
        }
        let exact_total: f64 = exact.iter().sum();
        let narrow: f64 = word_sync_beam(&model, words, &BeamConfig::new(100, 1)).map_err(|e| e.to_string())?.surprisals().iter().sum();
        ensure!(narrow >= exact_total - 1e-9, "{words:?}: word beam 1 total {narrow} below exact {exact_total}");
    }
    ensure!(worst < 1e-6, "max |beam - exact| = {worst:e} bits");
    Ok(format!("50 sentences (at most {max_parses} parses each), max |beam - exact| {worst:.1e} bits, word beam 1 never below exact"))
}

// ---- 4: exhaustive enumeration ----

/// Legality written out from the transition rules; the length cap cannot
/// bind at these lengths.
fn legal_by_rule(history: &[Action], a: Action) -> bool {
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

#[derive(Default)]
struct Walk {
    states: usize,
    ill_formed: usize,
    complete: usize,
    complete_mass: f64,
}

fn walk<M: TransitionModel>(model: &M, alphabet: &[Action], state: &rnnglab_core::models::ParserState<M::Core>, prefix: &mut Vec<Action>, max_len: usize, w: &mut Walk) -> Result<(), String> {
    if prefix.len() == max_len || state.is_terminal() {
        if state.is_terminal() {
            w.complete += 1;
            w.complete_mass += state.log_prob().exp();
        }
        if state.is_terminal() && prefix.len() < max_len {
            // Nothing may follow a finished tree.
            for &a in alphabet {
                ensure!(state.action_log_prob(a) == f64::NEG_INFINITY, "{prefix:?} then {a:?} has mass");
            }
        }
        return Ok(());
    }
    w.states += 1;
    let d = state.distribution();
    let top: f64 = d.top.iter().map(|x| x.exp()).sum();
    ensure!((top - 1.0).abs() < 1e-9, "after {prefix:?} action mass is {top}");
    if !d.words.is_empty() {
        let words: f64 = d.words.iter().map(|x| x.exp()).sum();
        ensure!((words - 1.0).abs() < 1e-9, "after {prefix:?} word mass is {words}");
    }
    let all: f64 = alphabet.iter().map(|&a| state.action_log_prob(a).exp()).sum();
    ensure!((all - 1.0).abs() < 1e-9, "after {prefix:?} next-step mass is {all}");
    for &a in alphabet {
        let lp = state.action_log_prob(a);
        if legal_by_rule(prefix, a) {
            ensure!(lp.is_finite(), "{prefix:?} then {a:?} should be possible");
            let next = model.advance(state, a).map_err(|e| e.to_string())?;
            prefix.push(a);
            walk(model, alphabet, &next, prefix, max_len, w)?;
            prefix.pop();
        } else {
            ensure!(lp == f64::NEG_INFINITY, "{prefix:?} then {a:?} is ill-formed but has mass");
            prefix.push(a);
            let seq = model.sequence_log_prob(prefix);
            prefix.pop();
            ensure!(seq.map_or(true, |p| p == f64::NEG_INFINITY), "ill-formed {prefix:?}+{a:?} scored");
            w.ill_formed += 1;
        }
    }
    Ok(())
}

fn enumeration() -> Check {
    let space = ActionSpace::new(2, 2);
    let alphabet: Vec<Action> = std::iter::once(Action::Reduce)
        .chain((0..space.vocab as u32).map(Action::Gen))
        .chain((0..space.labels as u32).map(Action::Nt))
        .collect();
    let spec = |arch| {
        let mut s = ModelSpec::new(arch, 2, 2).with_dims(6, 5);
        s.layers = 2;
        s.dropout = 0.0;
        s.seed = 11;
        s
    };
    let rnng = Rnng::new(spec(Architecture::Rnng));
    let alstm = ActionLstm::new(spec(Architecture::ActionLstm));
    let mut rw = Walk::default();
    walk(&rnng, &alphabet, &rnng.initial_state().map_err(|e| e.to_string())?, &mut Vec::new(), 8, &mut rw)?;
    let mut aw = Walk::default();
    walk(&alstm, &alphabet, &alstm.initial_state().map_err(|e| e.to_string())?, &mut Vec::new(), 8, &mut aw)?;
    for (name, w) in [("rnng", &rw), ("action-lstm", &aw)] {
        ensure!(w.complete_mass > 0.0 && w.complete_mass <= 1.0 + 1e-9, "{name}: complete-tree mass {}", w.complete_mass);
    }
    Ok(format!(
        "length <= 8: {} prefix states per model, {} ill-formed extensions at zero probability, every step sums to 1 within 1e-9",
        rw.states, rw.ill_formed
    ))
}

// ---- 5: end-to-end filler-gap pipeline ----

fn cli(args: &[&str]) -> Result<String, String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("rnnglab").chain(args.iter().copied());
    let code = rnnglab::cli::main_with(argv, &mut out, &mut err);
    if code != 0 {
        return Err(format!("`{}` exited {code}: {}", args.join(" "), String::from_utf8_lossy(&err)));
    }
    Ok(String::from_utf8_lossy(&out).into_owned())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const PIPELINE_BUDGET_SECS: f64 = 30.0 * 60.0;

fn wh_pipeline() -> Verdict {
    match pipeline() {
        Ok(d) => Verdict::Pass(d),
        Err(d) => Verdict::Fail(d),
    }
}

fn pipeline() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let prep = root.join("prep");
    let suite = Path::new(env!("CARGO_MANIFEST_DIR")).join("suites").join("wh_demo.json");
    cli(&["prepare", "--grammar", "fillergap", "--sentences", "5600", "--seed", "1", "--out", s(&prep)])?;
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(prep.join("manifest.json")).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let tokens = manifest["stats"]["train_tokens"].as_u64().unwrap_or(0);

    let mut records = Vec::new();
    for arch in ["rnng", "action-lstm", "lstm-lm"] {
        let ckpt = root.join(format!("{arch}.ckpt"));
        let tsv = root.join(format!("{arch}.tsv"));
        cli(&[
            "train", "--corpus", s(&prep), "--architecture", arch, "--embed-dim", "32", "--hidden-dim", "32", "--layers", "1", "--dropout", "0",
            "--max-epochs", "5", "--seed", "1", "--out", s(&ckpt),
        ])?;
        cli(&["score", "--checkpoint", s(&ckpt), "--suite", s(&suite), "--model-name", arch, "--out", s(&tsv)])?;
        records.push(tsv);
    }
    let analysis = root.join("analysis.json");
    let mut args = vec!["analyze", "--suite", s(&suite), "--out", s(&analysis)];
    for r in &records {
        args.extend(["--records", s(r)]);
    }
    cli(&args)?;
    let bundle = rnnglab::report::read_bundle(&analysis).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut parts = Vec::new();
    let mut rnng = None;
    for r in &bundle.results {
        let e = &r.blocks[0].effects[0];
        parts.push(format!("{} {:+.2} bits [{:.2}, {:.2}] p={:.4} n={}", r.model, e.interval.mean, e.interval.lower, e.interval.upper, e.p_permutation, e.n));
        if r.model == "rnng" {
            rnng = Some(e.clone());
        }
    }
    let detail = format!("train tokens {tokens}; {}; pipeline {:.0}s", parts.join("; "), elapsed);
    let e = rnng.ok_or("no rnng result")?;
    ensure!(e.n >= 20, "only {} items analysed; {detail}", e.n);
    ensure!(e.interval.mean > 0.0 && e.p_permutation < 0.05, "rnng interaction not positive and significant; {detail}");
    ensure!(elapsed < PIPELINE_BUDGET_SECS, "over the 30 minute budget; {detail}");
    Ok(detail)
}

// ---- 6: regression, interval and effect-size fixtures ----

fn rows_2x2(item: &str, cells: [f64; 4]) -> Vec<DesignRow> {
    [(false, false), (true, false), (false, true), (true, true)]
        .iter()
        .zip(cells)
        .map(|(&(f, g), y)| DesignRow { item: item.into(), levels: vec![f, g], y })
        .collect()
}

fn expect_coefficients(fit: &rnnglab_core::psych::LinearFit, expect: &[(&str, f64)], what: &str) -> Result<(), String> {
    for (term, v) in expect {
        let got = fit.coefficient(term).ok_or_else(|| format!("{what}: no term {term}"))?.estimate;
        ensure!((got - v).abs() < 1e-12, "{what}: {term} = {got}, expected {v}");
    }
    Ok(())
}

fn regression_fixtures() -> Check {
    let rows = vec![
        DesignRow { item: "a".into(), levels: vec![false], y: 1.0 },
        DesignRow { item: "a".into(), levels: vec![true], y: 3.0 },
    ];
    let fit = sum_coded_fit(&rows, &["x"], false, false).map_err(|e| e.to_string())?;
    expect_coefficients(&fit, &[("(Intercept)", 2.0), ("x", 1.0)], "two points")?;

    let fit = sum_coded_fit(&rows_2x2("a", [10.0, 14.0, 12.0, 8.0]), &["filler", "gap"], true, false).map_err(|e| e.to_string())?;
    expect_coefficients(&fit, &[("(Intercept)", 11.0), ("filler", 0.0), ("gap", -1.0), ("filler:gap", -2.0)], "saturated 2x2")?;

    let mut rows = rows_2x2("i1", [1.0, 2.0, 3.0, 4.0]);
    rows.extend(rows_2x2("i2", [3.0, 4.0, 5.0, 10.0]));
    let fit = sum_coded_fit(&rows, &["f", "g"], true, true).map_err(|e| e.to_string())?;
    expect_coefficients(&fit, &[("(Intercept)", 4.0), ("f", 1.0), ("g", 1.5), ("f:g", 0.5), ("item[i1]", -1.5)], "two items")?;
    ensure!(fit.residual_df == 3, "two items: residual df {}", fit.residual_df);

    let t = t_quantile(0.975, 2.0);
    ensure!((t - 4.303).abs() < 1e-3, "t(0.975, 2) = {t}");
    let table = vec![vec![1.0, 3.0], vec![2.0, 6.0], vec![3.0, 3.0]];
    let ci = within_item_ci(&table, 0.95).map_err(|e| e.to_string())?;
    let half = 4.303 / 3f64.sqrt();
    ensure!(ci[0].mean == 2.0 && ci[1].mean == 4.0, "within-item means {} {}", ci[0].mean, ci[1].mean);
    for c in &ci {
        ensure!((c.half_width() - half).abs() < 1e-3 * half, "within-item half width {}", c.half_width());
    }
    let plain = mean_ci(&[2.0, 1.0, 3.0], 0.95).map_err(|e| e.to_string())?;
    ensure!((plain.half_width() - ci[0].half_width()).abs() < 1e-12, "normalised column disagrees with a plain interval");

    let d = cohens_d(&[1.0, 2.0, 3.0]).map_err(|e| e.to_string())?.d;
    ensure!(d == 2.0, "d(1,2,3) = {d}");
    let d = cohens_d(&[2.0, -1.0, 4.0, 3.0]).map_err(|e| e.to_string())?.d;
    ensure!((d - 2.0 / (14.0f64 / 3.0).sqrt()).abs() < 1e-12, "d(2,-1,4,3) = {d}");
    let flat = cohens_d(&[2.0, 2.0, 2.0]).map_err(|e| e.to_string())?;
    ensure!(flat.zero_variance && flat.d == f64::INFINITY, "constant nonzero values give d = {}", flat.d);
    Ok("closed-form coefficients exact to 1e-12, within-item interval uses t=4.303, Cohen's d fixtures match".into())
}

// ---- 7: interaction fixtures ----

fn interaction_fixtures() -> Check {
    let v = wh_interaction(10.0, 14.0, 12.0, 8.0);
    ensure!(v == 8.0, "(10,14,12,8) gives {v}");
    ensure!(wh_interaction(3.25, 3.25, 3.25, 3.25) == 0.0, "equal cells are not 0");
    for (a, b, c, d) in [(10.0, 14.0, 12.0, 8.0), (1.5, -2.0, 7.25, 0.125), (0.0, 3.0, 5.0, 11.0)] {
        ensure!(wh_interaction(c, d, a, b) == -wh_interaction(a, b, c, d), "swapping the gap factor is not antisymmetric");
    }
    Ok("(10,14,12,8) = 8, equal cells = 0, gap swap flips the sign".into())
}

// ---- 8: treebank dependency counts ----

const TREEBANK_VAR: &str = "RNNGLAB_PTB";

fn treebank_counts() -> Verdict {
    let Some(path) = std::env::var_os(TREEBANK_VAR) else {
        return Verdict::Skip(format!("set {TREEBANK_VAR} to the raw WSJ sections 02-21 to compare dependency counts"));
    };
    let out = match cli(&["count-deps", "--treebank", &path.to_string_lossy()]) {
        Ok(o) => o,
        Err(e) => return Verdict::Fail(e),
    };
    let Some(total) = out.lines().find(|l| l.starts_with("TOTAL\t")) else {
        return Verdict::Fail("no TOTAL row".into());
    };
    let n: Vec<usize> = total.split('\t').skip(1).filter_map(|x| x.parse().ok()).collect();
    let (subject, object, indirect, other) = (n[0], n[1], n[2], n[3]);
    let all = subject + object + indirect + other;
    let got = [("all", all, 13907), ("subject", subject, 6632), ("object", object, 2080), ("indirect object", indirect, 57)];
    let diffs: Vec<String> = got.iter().filter(|(_, g, e)| g != e).map(|(k, g, e)| format!("{k} {g} vs {e} ({:+})", *g as i64 - *e as i64)).collect();
    if diffs.is_empty() {
        Verdict::Pass(format!("all {all}, subject {subject}, object {object}, indirect object {indirect}"))
    } else {
        Verdict::Fail(format!("discrepancies: {}", diffs.join(", ")))
    }
}
