//! Forward kernels shared by the eager and taped backends.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// `w · x + b` for a row-major `rows x cols` matrix.
pub fn affine(w: &[f64], rows: usize, cols: usize, x: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(b.len(), rows);
    let mut out = b.to_vec();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for (a, v) in row.iter().zip(x) {
            acc += a * v;
        }
        *o += acc;
    }
    out
}

/// Masked log-softmax; masked-out entries become `-inf`.
pub fn log_softmax(x: &[f64], mask: Option<&[bool]>) -> Vec<f64> {
    let allowed = |i: usize| mask.is_none_or(|m| m[i]);
    let max = x
        .iter()
        .enumerate()
        .filter(|&(i, _)| allowed(i))
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![f64::NEG_INFINITY; x.len()];
    }
    let sum: f64 = x
        .iter()
        .enumerate()
        .filter(|&(i, _)| allowed(i))
        .map(|(_, &v)| math::exp(v - max))
        .sum();
    let lse = max + math::ln(sum);
    x.iter()
        .enumerate()
        .map(|(i, &v)| if allowed(i) { v - lse } else { f64::NEG_INFINITY })
        .collect()
}

pub fn sigmoid(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| math::sigmoid(v)).collect()
}

pub fn tanh(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| math::tanh(v)).collect()
}

pub fn zip_with(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "elementwise operands differ in length");
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}
