//! Central finite-difference check of [`Tape`] gradients.

use super::graph::{Eager, Graph};
use super::params::ParamStore;
use super::tape::Tape;

/// A scalar function of the parameters, written once for both backends.
pub trait Objective {
    fn eval<G: Graph>(&self, g: &mut G) -> G::Var;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck {
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, floor)`.
    pub max_rel_error: f64,
    pub checked: usize,
}

/// Compares reverse-mode gradients with `(f(p+h) - f(p-h)) / 2h` for every
/// parameter entry. `floor` keeps the relative error meaningful for
/// gradients that are zero up to rounding.
pub fn gradient_check<O: Objective>(store: &ParamStore, objective: &O, step: f64, floor: f64) -> GradCheck {
    let analytic = {
        let mut tape = Tape::new(store);
        let out = objective.eval(&mut tape);
        tape.backward(out)
    };
    let mut probe = store.clone();
    let mut max_rel_error: f64 = 0.0;
    let mut checked = 0;
    let ids: alloc::vec::Vec<_> = store.ids().collect();
    for id in ids {
        for k in 0..store.get(id).len() {
            let original = store.get(id).data()[k];
            let mut eval_at = |x: f64| {
                probe.get_mut(id).data_mut()[k] = x;
                let mut g = Eager::new(&probe);
                let v = objective.eval(&mut g);
                g.value(&v).item()
            };
            let numeric = (eval_at(original + step) - eval_at(original - step)) / (2.0 * step);
            probe.get_mut(id).data_mut()[k] = original;
            let a = analytic.get(id).map_or(0.0, |g| g[k]);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            max_rel_error = max_rel_error.max(rel);
            checked += 1;
        }
    }
    GradCheck { max_rel_error, checked }
}
