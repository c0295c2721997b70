use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rnnglab_core::numcore::{
    gradient_check, softmax, softmax_cross_entropy, BiLstmComposer, Eager, Graph, LstmCell, Objective, ParamId, ParamStore,
    Shape, StackedLstm, Tape, Tensor,
};

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-4;
const FLOOR: f64 = 1e-6;
const INSTANCES: u64 = 20;

fn random(store: &mut ParamStore, name: &str, shape: Shape, rng: &mut ChaCha8Rng) -> ParamId {
    store.add_uniform(name, shape, 1.0, rng)
}

/// Reduces a vector to a scalar through fixed random weights, so every
/// output coordinate contributes a distinct amount.
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

fn assert_grad<O: Objective>(store: &ParamStore, o: &O, what: &str) {
    let r = gradient_check(store, o, STEP, FLOOR);
    assert!(r.checked > 0);
    assert!(r.max_rel_error < TOL, "{what}: relative error {:e}", r.max_rel_error);
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

#[test]
fn elementwise_ops_match_finite_differences() {
    for op in 0..4u8 {
        for seed in 0..INSTANCES {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = ParamStore::new();
            let n = rng.random_range(1..=8);
            let x = random(&mut s, "x", Shape::Vector(n), &mut rng);
            assert_grad(&s, &Unary { x, op, seed }, &format!("unary op {op}"));
        }
    }
}

objective!(Binary { a: ParamId, b: ParamId, mul: bool, seed: u64 } |self, g| {
    let a = g.param(self.a);
    let b = g.param(self.b);
    let y = if self.mul { g.mul(&a, &b) } else { g.add(&a, &b) };
    project(g, &y, self.seed)
});

#[test]
fn add_and_mul_match_finite_differences() {
    for mul in [false, true] {
        for seed in 0..INSTANCES {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = ParamStore::new();
            let n = rng.random_range(1..=8);
            let a = random(&mut s, "a", Shape::Vector(n), &mut rng);
            let b = random(&mut s, "b", Shape::Vector(n), &mut rng);
            assert_grad(&s, &Binary { a, b, mul, seed }, if mul { "mul" } else { "add" });
        }
    }
}

objective!(AffineObj { w: ParamId, x: ParamId, b: ParamId, seed: u64 } |self, g| {
    let w = g.param(self.w);
    let x = g.param(self.x);
    let b = g.param(self.b);
    let y = g.affine(&w, &x, &b);
    project(g, &y, self.seed)
});

#[test]
fn affine_matches_finite_differences() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = ParamStore::new();
        let (r, c) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let w = random(&mut s, "w", Shape::Matrix(r, c), &mut rng);
        let x = random(&mut s, "x", Shape::Vector(c), &mut rng);
        let b = random(&mut s, "b", Shape::Vector(r), &mut rng);
        assert_grad(&s, &AffineObj { w, x, b, seed }, "affine");
    }
}

objective!(Structural { a: ParamId, b: ParamId, emb: ParamId, row: usize, start: usize, len: usize, seed: u64 } |self, g| {
    let a = g.param(self.a);
    let b = g.param(self.b);
    let r = g.row(self.emb, self.row);
    let joined = g.concat(&[a, r, b]);
    let part = g.slice(&joined, self.start, self.len);
    project(g, &part, self.seed)
});

#[test]
fn concat_slice_and_row_match_finite_differences() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = ParamStore::new();
        let (na, nb, e, rows) = (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=5));
        let a = random(&mut s, "a", Shape::Vector(na), &mut rng);
        let b = random(&mut s, "b", Shape::Vector(nb), &mut rng);
        let emb = random(&mut s, "emb", Shape::Matrix(rows, e), &mut rng);
        let total = na + nb + e;
        let start = rng.random_range(0..total);
        let len = rng.random_range(1..=total - start);
        let row = rng.random_range(0..rows);
        assert_grad(&s, &Structural { a, b, emb, row, start, len, seed }, "concat/slice/row");
    }
}

objective!(Masked { x: ParamId, mask: Vec<bool>, seed: u64 } |self, g| {
    let x = g.param(self.x);
    let lp = g.log_softmax(&x, Some(&self.mask));
    let picks: Vec<_> = self.mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| g.pick(&lp, i)).collect();
    let total = g.sum(&picks);
    let first = picks[0].clone();
    let both = g.concat(&[total, first]);
    project(g, &both, self.seed)
});

#[test]
fn masked_log_softmax_pick_and_sum_match_finite_differences() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = ParamStore::new();
        let n = rng.random_range(2..=8);
        let x = random(&mut s, "x", Shape::Vector(n), &mut rng);
        let mut mask: Vec<bool> = (0..n).map(|_| rng.random_bool(0.6)).collect();
        mask[rng.random_range(0..n)] = true;
        assert_grad(&s, &Masked { x, mask, seed }, "masked log-softmax");
    }
}

objective!(CrossEntropy { x: ParamId, target: usize } |self, g| {
    let x = g.param(self.x);
    softmax_cross_entropy(g, &x, self.target).unwrap()
});

#[test]
fn cross_entropy_matches_finite_differences() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = ParamStore::new();
        let n = rng.random_range(1..=8);
        let x = random(&mut s, "x", Shape::Vector(n), &mut rng);
        let target = rng.random_range(0..n);
        assert_grad(&s, &CrossEntropy { x, target }, "cross-entropy");
    }
}

objective!(LstmObj { cell: LstmCell, x: ParamId, h: ParamId, c: ParamId, seed: u64 } |self, g| {
    let x = g.param(self.x);
    let h = g.param(self.h);
    let c = g.param(self.c);
    let (h1, c1) = self.cell.step(g, &x, &h, &c).unwrap();
    let both = g.concat(&[h1, c1]);
    project(g, &both, self.seed)
});

#[test]
fn lstm_step_matches_finite_differences() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = ParamStore::new();
        let (inp, hid) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let cell = LstmCell::register(&mut s, "cell", inp, hid, &mut rng);
        // Move weights away from the tiny init so every gate is exercised.
        for id in [cell.weight, cell.bias] {
            s.get_mut(id).data_mut().iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        }
        let x = random(&mut s, "x", Shape::Vector(inp), &mut rng);
        let h = random(&mut s, "h", Shape::Vector(hid), &mut rng);
        let c = random(&mut s, "c", Shape::Vector(hid), &mut rng);
        assert_grad(&s, &LstmObj { cell, x, h, c, seed }, "lstm step");
    }
}

// Sum of `h` after one step, as in the cell contract.
objective!(LstmSumH { cell: LstmCell, x: ParamId } |self, g| {
    let x = g.param(self.x);
    let h0 = g.zeros(self.cell.hidden_dim);
    let c0 = g.zeros(self.cell.hidden_dim);
    let (h, _) = self.cell.step(g, &x, &h0, &c0).unwrap();
    let parts: Vec<_> = (0..self.cell.hidden_dim).map(|i| g.pick(&h, i)).collect();
    g.sum(&parts)
});

#[test]
fn lstm_hidden_four_seed_seven_sum_of_h() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut s = ParamStore::new();
    let cell = LstmCell::register(&mut s, "cell", 3, 4, &mut rng);
    let x = random(&mut s, "x", Shape::Vector(3), &mut rng);
    assert_grad(&s, &LstmSumH { cell, x }, "sum(h)");
}

objective!(StackedObj { lstm: StackedLstm, xs: Vec<ParamId>, seed: u64 } |self, g| {
    let mut st = self.lstm.initial(g);
    for &x in &self.xs {
        let x = g.param(x);
        st = self.lstm.step(g, &st, &x).unwrap();
    }
    let out = st.output().clone();
    project(g, &out, self.seed)
});

#[test]
fn stacked_lstm_sequence_matches_finite_differences() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = ParamStore::new();
        let (inp, hid) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let lstm = StackedLstm::register(&mut s, "lstm", inp, hid, 2, 0.0, &mut rng);
        let xs = (0..3).map(|t| random(&mut s, &format!("x{t}"), Shape::Vector(inp), &mut rng)).collect();
        assert_grad(&s, &StackedObj { lstm, xs, seed }, "stacked lstm");
    }
}

objective!(ComposeObj { comp: BiLstmComposer, label: ParamId, kids: Vec<ParamId>, seed: u64 } |self, g| {
    let label = g.param(self.label);
    let kids: Vec<_> = self.kids.iter().map(|&k| g.param(k)).collect();
    let out = self.comp.compose(g, &label, &kids).unwrap();
    project(g, &out, self.seed)
});

#[test]
fn composition_matches_finite_differences() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = ParamStore::new();
        let dim = rng.random_range(1..=4);
        let comp = BiLstmComposer::register(&mut s, "comp", dim, &mut rng);
        let label = random(&mut s, "label", Shape::Vector(dim), &mut rng);
        let n = rng.random_range(1..=3);
        let kids = (0..n).map(|k| random(&mut s, &format!("kid{k}"), Shape::Vector(dim), &mut rng)).collect();
        assert_grad(&s, &ComposeObj { comp, label, kids, seed }, "composition");
    }
}

#[test]
fn zero_lstm_is_a_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut s = ParamStore::new();
    let cell = LstmCell::register(&mut s, "cell", 3, 5, &mut rng);
    s.zero_all();
    let mut g = Eager::new(&s);
    let x = g.constant(Tensor::vector(vec![0.3, -2.0, 7.0]));
    let z = g.zeros(5);
    let (h, _) = cell.step(&mut g, &x, &z, &z).unwrap();
    assert!(h.data().iter().all(|v| *v == 0.0));
}

#[test]
fn lstm_output_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut s = ParamStore::new();
    let cell = LstmCell::register(&mut s, "cell", 4, 2, &mut rng);
    s.get_mut(cell.weight).data_mut().iter_mut().for_each(|v| *v *= 50.0);
    let mut g = Eager::new(&s);
    for k in 0..50 {
        let x = g.constant(Tensor::vector((0..4).map(|i| ((k * 7 + i) as f64).sin() * 10.0).collect()));
        let h0 = g.constant(Tensor::vector(vec![0.9, -0.9]));
        let c0 = g.constant(Tensor::vector(vec![3.0, -5.0]));
        let (h, c) = cell.step(&mut g, &x, &h0, &c0).unwrap();
        assert!(h.is_finite() && c.is_finite());
        assert!(h.data().iter().all(|v| v.abs() < 1.0));
    }
}

#[test]
fn shape_errors_name_the_operand() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut s = ParamStore::new();
    let cell = LstmCell::register(&mut s, "cell", 3, 2, &mut rng);
    let mut g = Eager::new(&s);
    let x = g.zeros(4);
    let h = g.zeros(2);
    let err = cell.step(&mut g, &x, &h, &h).unwrap_err();
    assert_eq!(err.operand, "x");
    let x = g.zeros(3);
    let bad = g.zeros(3);
    assert_eq!(cell.step(&mut g, &x, &h, &bad).unwrap_err().operand, "c_prev");
}

#[test]
fn composition_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut s = ParamStore::new();
    let comp = BiLstmComposer::register(&mut s, "comp", 3, &mut rng);
    let mut g = Eager::new(&s);
    let label = g.constant(Tensor::vector(vec![0.5, -0.1, 0.2]));
    let a = g.constant(Tensor::vector(vec![1.0, 0.0, -1.0]));
    let b = g.constant(Tensor::vector(vec![-0.5, 0.7, 0.3]));
    let ab = comp.compose(&mut g, &label, &[a.clone(), b.clone()]).unwrap();
    let ba = comp.compose(&mut g, &label, &[b, a]).unwrap();
    assert_ne!(ab.data(), ba.data());
    assert!(comp.compose(&mut g, &label, &[]).is_err());

    let mut zero = s.clone();
    zero.zero_all();
    let mut g = Eager::new(&zero);
    let only = g.constant(Tensor::vector(vec![2.0, 2.0, 2.0]));
    let out = comp.compose(&mut g, &label, &[only]).unwrap();
    assert!(out.data().iter().all(|v| *v == 0.0));
}

#[test]
fn softmax_examples() {
    let s = ParamStore::new();
    let mut g = Eager::new(&s);
    let flat = g.constant(Tensor::vector(vec![0.25; 8]));
    let l = softmax_cross_entropy(&mut g, &flat, 3).unwrap();
    assert!((l.item() - 8f64.ln()).abs() < 1e-12);
    let x = g.constant(Tensor::vector(vec![1.0, 2.0, 3.0]));
    let l = softmax_cross_entropy(&mut g, &x, 2).unwrap().item();
    let exact = -(3f64.exp() / (1f64.exp() + 2f64.exp() + 3f64.exp())).ln();
    assert!((l - exact).abs() < 1e-12 && (l - 0.4076).abs() < 1e-4);
    let sharp = g.constant(Tensor::vector(vec![-500.0, 800.0, 0.0]));
    assert!(softmax_cross_entropy(&mut g, &sharp, 1).unwrap().item() < 1e-12);
    assert!(softmax_cross_entropy(&mut g, &x, 3).is_err());

    for logits in [vec![1000.0, -1000.0, 3.0], vec![0.1, 0.2], vec![-700.0; 5]] {
        let p = softmax(&logits);
        assert!(p.iter().all(|v| *v >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn dropout_preserves_expectation() {
    let mut s = ParamStore::new();
    let x = s.add("x", Tensor::vector(vec![1.0, -2.0, 0.5, 3.0]));
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let rate = 0.3;
    let samples = 100_000;
    let mut sums = [0.0; 4];
    let mut tape = Tape::training(&s, &mut rng);
    let xv = tape.param(x);
    for _ in 0..samples {
        let y = tape.dropout(&xv, rate);
        let v = tape.value(&y);
        for (k, sum) in sums.iter_mut().enumerate() {
            let out = v.data()[k];
            let orig = s.get(x).data()[k];
            assert!(out == 0.0 || (out - orig / (1.0 - rate)).abs() < 1e-12);
            *sum += out;
        }
    }
    for (k, sum) in sums.iter().enumerate() {
        let orig = s.get(x).data()[k];
        assert!(((sum / samples as f64) - orig).abs() < 0.01 * orig.abs(), "coordinate {k}");
    }
    let mut g = Eager::new(&s);
    let xv = g.param(x);
    assert_eq!(g.dropout(&xv, rate).data(), s.get(x).data());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut tape = Tape::training(&s, &mut rng);
    let xv = tape.param(x);
    let y = tape.dropout(&xv, 0.0);
    assert_eq!(tape.value(&y).data(), s.get(x).data());
}

objective!(DropObj { x: ParamId } |self, g| {
    let x = g.param(self.x);
    let y = g.dropout(&x, 0.5);
    project(g, &y, 3)
});

#[test]
fn dropout_gradient_is_the_mask() {
    let mut s = ParamStore::new();
    let x = s.add("x", Tensor::vector(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut tape = Tape::training(&s, &mut rng);
    let xv = tape.param(x);
    let y = tape.dropout(&xv, 0.5);
    let mask: Vec<f64> = tape.value(&y).data().iter().zip(s.get(x).data()).map(|(a, b)| a / b).collect();
    let parts: Vec<_> = (0..6).map(|i| tape.pick(&y, i)).collect();
    let total = tape.sum(&parts);
    let grads = tape.backward(total);
    assert_eq!(grads.get(x).unwrap(), &mask[..]);
    // Outside training the same objective is the identity and checks out.
    assert_grad(&s, &DropObj { x }, "dropout (eval)");
}

#[test]
fn forward_is_deterministic() {
    let build = || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = ParamStore::new();
        let lstm = StackedLstm::register(&mut s, "l", 3, 4, 2, 0.3, &mut rng);
        let mut drop_rng = ChaCha8Rng::seed_from_u64(6);
        let mut tape = Tape::training(&s, &mut drop_rng);
        let st = lstm.initial(&mut tape);
        let x = tape.constant(Tensor::vector(vec![0.1, 0.2, 0.3]));
        let st = lstm.step(&mut tape, &st, &x).unwrap();
        tape.value(st.output()).data().to_vec()
    };
    assert_eq!(build(), build());
}
