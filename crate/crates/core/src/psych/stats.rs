//! Descriptive statistics, distributions and tests used by the analyses.
//!
//! Distribution functions are implemented on `libm` so the crate stays
//! `no_std`; the test suite checks them against an independent library.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PsychError;
use crate::math::{abs, exp, lgamma, ln, sqrt};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard deviation with the `n - 1` denominator.
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    sqrt(xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0))
}

/// Regularised incomplete beta function `I_x(a, b)`.
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = exp(lgamma(a + b) - lgamma(a) - lgamma(b) + a * ln(x) + b * ln(1.0 - x));
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Continued fraction for the incomplete beta, modified Lentz iteration.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if abs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        for aa in [m * (b - m) * x / ((qam + m2) * (a + m2)), -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))] {
            d = 1.0 + aa * d;
            if abs(d) < TINY {
                d = TINY;
            }
            c = 1.0 + aa / c;
            if abs(c) < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            h *= d * c;
        }
        if abs(d * c - 1.0) < 1e-16 {
            break;
        }
    }
    h
}

/// CDF of Student's t with `df` degrees of freedom.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * beta_inc(df / 2.0, 0.5, df / (df + t * t));
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64, target: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn t_quantile(p: f64, df: f64) -> f64 {
    let mut bound = 1.0;
    while t_cdf(bound, df) < p.max(1.0 - p) && bound < 1e12 {
        bound *= 2.0;
    }
    bisect(-bound, bound, |t| t_cdf(t, df), p)
}

pub fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    bisect(0.0, 1.0, |x| beta_inc(a, b, x), p)
}

pub fn binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let (k, n) = (k as f64, n as f64);
    exp(lgamma(n + 1.0) - lgamma(k + 1.0) - lgamma(n - k + 1.0) + k * ln(p) + (n - k) * ln(1.0 - p))
}

/// Exact two-sided binomial test: total probability of outcomes no more
/// likely than the observed one.
pub fn binomial_test(k: u64, n: u64, p: f64) -> f64 {
    let observed = binomial_pmf(k, n, p);
    let total: f64 = (0..=n).map(|i| binomial_pmf(i, n, p)).filter(|&q| q <= observed * (1.0 + 1e-7)).sum();
    total.min(1.0)
}

/// Clopper–Pearson interval for `k` successes out of `n`.
pub fn clopper_pearson(k: u64, n: u64, level: f64) -> (f64, f64) {
    let alpha = 1.0 - level;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 { 0.0 } else { beta_quantile(alpha / 2.0, kf, nf - kf + 1.0) };
    let hi = if k == n { 1.0 } else { beta_quantile(1.0 - alpha / 2.0, kf + 1.0, nf - kf) };
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "super::float_serde")]
    pub mean: f64,
    #[serde(with = "super::float_serde")]
    pub lower: f64,
    #[serde(with = "super::float_serde")]
    pub upper: f64,
}

impl Interval {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

/// `mean ± t_{(1+level)/2, n-1} · sd / √n`.
pub fn mean_ci(xs: &[f64], level: f64) -> Result<Interval, PsychError> {
    if xs.len() < 2 {
        return Err(PsychError::TooFewValues { needed: 2, found: xs.len() });
    }
    let m = mean(xs);
    let half = t_quantile(0.5 + level / 2.0, xs.len() as f64 - 1.0) * sample_sd(xs) / sqrt(xs.len() as f64);
    Ok(Interval { mean: m, lower: m - half, upper: m + half })
}

/// Cohen's d for a one-sample effect: mean over sample standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohensD {
    /// `±inf` (or 0 for a zero mean) when all values are equal.
    #[serde(with = "super::float_serde")]
    pub d: f64,
    pub zero_variance: bool,
}

pub fn cohens_d(xs: &[f64]) -> Result<CohensD, PsychError> {
    if xs.len() < 2 {
        return Err(PsychError::TooFewValues { needed: 2, found: xs.len() });
    }
    let m = mean(xs);
    let sd = sample_sd(xs);
    if sd == 0.0 {
        let d = if m == 0.0 { 0.0 } else { m.signum() * f64::INFINITY };
        return Ok(CohensD { d, zero_variance: true });
    }
    Ok(CohensD { d: m / sd, zero_variance: false })
}

/// Per-condition means and CIs after removing between-item variance:
/// each value becomes `y - item mean + grand mean`. `table[item][condition]`.
pub fn within_item_ci(table: &[Vec<f64>], level: f64) -> Result<Vec<Interval>, PsychError> {
    if table.len() < 2 {
        return Err(PsychError::TooFewValues { needed: 2, found: table.len() });
    }
    let k = table[0].len();
    if k == 0 || table.iter().any(|r| r.len() != k) {
        return Err(PsychError::Incomplete(String::from("item x condition table is ragged")));
    }
    let grand = mean(&table.iter().flatten().copied().collect::<Vec<_>>());
    let adjusted: Vec<Vec<f64>> = table
        .iter()
        .map(|row| {
            let m = mean(row);
            row.iter().map(|y| y - m + grand).collect()
        })
        .collect();
    (0..k)
        .map(|c| mean_ci(&adjusted.iter().map(|r| r[c]).collect::<Vec<_>>(), level))
        .collect()
}

/// Sign-flip permutation test of `mean(diffs) = 0`, two-sided, with
/// `p = (1 + #{|mean*| ≥ |mean|}) / (1 + shuffles)`.
pub fn sign_flip_test(diffs: &[f64], shuffles: usize, seed: u64) -> f64 {
    if diffs.is_empty() {
        return 1.0;
    }
    let n = diffs.len() as f64;
    let observed = abs(diffs.iter().sum::<f64>() / n);
    let tol = 1e-12 * (1.0 + observed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..shuffles {
        let s: f64 = diffs.iter().map(|d| if rng.random::<bool>() { *d } else { -*d }).sum();
        if abs(s / n) >= observed - tol {
            hits += 1;
        }
    }
    (1 + hits) as f64 / (1 + shuffles) as f64
}

/// Paired permutation test on `x - y`.
pub fn paired_permutation_test(x: &[f64], y: &[f64], shuffles: usize, seed: u64) -> Result<f64, PsychError> {
    if x.len() != y.len() {
        return Err(PsychError::Incomplete(format!("paired samples differ in length ({} vs {})", x.len(), y.len())));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    Ok(sign_flip_test(&d, shuffles, seed))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub term: String,
    pub estimate: f64,
    /// NaN when the fit leaves no residual degrees of freedom.
    #[serde(with = "super::float_serde")]
    pub std_error: f64,
    #[serde(with = "super::float_serde")]
    pub t: f64,
    #[serde(with = "super::float_serde")]
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub coefficients: Vec<Coefficient>,
    pub residual_df: usize,
    pub rss: f64,
}

impl LinearFit {
    pub fn coefficient(&self, term: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.term == term)
    }
}

/// Ordinary least squares via modified Gram–Schmidt QR. Columns that are
/// (numerically) linear combinations of earlier ones are reported by name.
pub fn least_squares(y: &[f64], columns: &[(String, Vec<f64>)]) -> Result<LinearFit, PsychError> {
    let n = y.len();
    let p = columns.len();
    if let Some((name, _)) = columns.iter().find(|(_, c)| c.len() != n) {
        return Err(PsychError::Design(format!("column `{name}` has the wrong length")));
    }
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut r = vec![vec![0.0; p]; p];
    let mut aliased = Vec::new();
    for (j, (name, col)) in columns.iter().enumerate() {
        let norm0 = sqrt(col.iter().map(|v| v * v).sum());
        let mut v = col.clone();
        for (i, qi) in q.iter().enumerate() {
            let dot: f64 = qi.iter().zip(&v).map(|(a, b)| a * b).sum();
            r[i][j] = dot;
            v.iter_mut().zip(qi).for_each(|(x, qv)| *x -= dot * qv);
        }
        let norm = sqrt(v.iter().map(|x| x * x).sum());
        if norm0 == 0.0 || norm <= 1e-10 * norm0 {
            aliased.push(name.clone());
            continue;
        }
        r[q.len()][j] = norm;
        v.iter_mut().for_each(|x| *x /= norm);
        q.push(v);
    }
    if !aliased.is_empty() {
        return Err(PsychError::RankDeficient { aliased });
    }
    if n < p {
        return Err(PsychError::Design(format!("{p} terms but only {n} observations")));
    }
    let qty: Vec<f64> = q.iter().map(|qi| qi.iter().zip(y).map(|(a, b)| a * b).sum()).collect();
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| r[i][k] * beta[k]).sum();
        beta[i] = (qty[i] - s) / r[i][i];
    }
    // R^{-1}, for the coefficient covariance (R^T R)^{-1} = R^{-1} R^{-T}.
    let mut rinv = vec![vec![0.0; p]; p];
    for j in 0..p {
        rinv[j][j] = 1.0 / r[j][j];
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|k| r[i][k] * rinv[k][j]).sum();
            rinv[i][j] = -s / r[i][i];
        }
    }
    let rss: f64 = (0..n)
        .map(|obs| {
            let fit: f64 = columns.iter().zip(&beta).map(|((_, c), b)| c[obs] * b).sum();
            (y[obs] - fit) * (y[obs] - fit)
        })
        .sum();
    let df = n - p;
    let sigma2 = if df > 0 { rss / df as f64 } else { f64::NAN };
    let coefficients = columns
        .iter()
        .enumerate()
        .map(|(j, (name, _))| {
            let var = sigma2 * rinv[j].iter().map(|v| v * v).sum::<f64>();
            let se = sqrt(var);
            let t = beta[j] / se;
            let p = if df > 0 && t.is_finite() { 2.0 * (1.0 - t_cdf(abs(t), df as f64)) } else { f64::NAN };
            Coefficient { term: name.clone(), estimate: beta[j], std_error: se, t, p }
        })
        .collect();
    Ok(LinearFit { coefficients, residual_df: df, rss })
}

/// One observation for [`sum_coded_fit`]: factor levels as booleans.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignRow {
    pub item: String,
    pub levels: Vec<bool>,
    pub y: f64,
}

/// Sum-coded regression: each factor as ±1 (`true` = +1), all pairwise
/// interactions when requested, and sum-coded item intercepts.
pub fn sum_coded_fit(rows: &[DesignRow], factors: &[&str], interactions: bool, item_effects: bool) -> Result<LinearFit, PsychError> {
    let code = |b: bool| if b { 1.0 } else { -1.0 };
    let mut columns: Vec<(String, Vec<f64>)> = vec![(String::from("(Intercept)"), vec![1.0; rows.len()])];
    for (f, name) in factors.iter().enumerate() {
        columns.push((String::from(*name), rows.iter().map(|r| code(r.levels[f])).collect()));
    }
    if interactions {
        for a in 0..factors.len() {
            for b in a + 1..factors.len() {
                let col = rows.iter().map(|r| code(r.levels[a]) * code(r.levels[b])).collect();
                columns.push((format!("{}:{}", factors[a], factors[b]), col));
            }
        }
    }
    if item_effects {
        let mut items: Vec<&str> = rows.iter().map(|r| r.item.as_str()).collect();
        items.sort_unstable();
        items.dedup();
        if let Some((last, rest)) = items.split_last() {
            for it in rest {
                let col = rows
                    .iter()
                    .map(|r| if r.item == *it { 1.0 } else if r.item == *last { -1.0 } else { 0.0 })
                    .collect();
                columns.push((format!("item[{it}]"), col));
            }
        }
    }
    let y: Vec<f64> = rows.iter().map(|r| r.y).collect();
    least_squares(&y, &columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{Beta, Binomial, ContinuousCDF, Discrete, StudentsT};

    #[test]
    fn t_distribution_matches_reference() {
        for df in [1.0, 2.0, 3.5, 10.0, 50.0] {
            let reference = StudentsT::new(0.0, 1.0, df).unwrap();
            for t in [-6.0, -2.0, -0.3, 0.0, 0.7, 2.5, 8.0] {
                assert!((t_cdf(t, df) - reference.cdf(t)).abs() < 1e-10, "df={df} t={t}");
            }
            for p in [0.025, 0.5, 0.9, 0.975] {
                assert!((t_quantile(p, df) - reference.inverse_cdf(p)).abs() < 1e-7, "df={df} p={p}");
            }
        }
        assert!((t_quantile(0.975, 2.0) - 4.302652729911275).abs() < 1e-9);
    }

    #[test]
    fn beta_matches_reference() {
        for (a, b) in [(0.5, 0.5), (2.0, 3.0), (10.0, 1.0), (27.0, 4.0)] {
            let reference = Beta::new(a, b).unwrap();
            for x in [0.01, 0.2, 0.5, 0.77, 0.99] {
                assert!((beta_inc(a, b, x) - reference.cdf(x)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn binomial_matches_reference() {
        let reference = Binomial::new(0.5, 27).unwrap();
        for k in 0..=27 {
            assert!((binomial_pmf(k, 27, 0.5) - reference.pmf(k)).abs() < 1e-12);
        }
        assert!((binomial_test(10, 20, 0.5) - 1.0).abs() < 1e-12);
        // 23 of 27: 2 * P(X >= 23)
        let tail: f64 = (23..=27).map(|k| reference.pmf(k)).sum();
        assert!((binomial_test(23, 27, 0.5) - 2.0 * tail).abs() < 1e-12);
    }

    #[test]
    fn clopper_pearson_bounds() {
        let (lo, hi) = clopper_pearson(27, 27, 0.95);
        assert_eq!(hi, 1.0);
        assert!((lo - crate::math::pow(0.025, 1.0 / 27.0)).abs() < 1e-9);
        let (lo, hi) = clopper_pearson(10, 20, 0.95);
        assert!((lo - 0.27195).abs() < 1e-4 && (hi - 0.72805).abs() < 1e-4);
    }

    #[test]
    fn cohens_d_fixtures() {
        let d = cohens_d(&[1.0, 3.0]).unwrap();
        assert!((d.d - core::f64::consts::SQRT_2).abs() < 1e-12 && !d.zero_variance);
        let d = cohens_d(&[5.0, 5.0, 5.0]).unwrap();
        assert!(d.zero_variance && d.d == f64::INFINITY);
        assert!(cohens_d(&[1.0]).is_err());
    }

    #[test]
    fn permutation_identical_vectors() {
        assert_eq!(paired_permutation_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 10_000, 7).unwrap(), 1.0);
    }

    #[test]
    fn rank_deficiency_names_terms() {
        let cols = vec![
            (String::from("a"), vec![1.0, 1.0, 1.0]),
            (String::from("b"), vec![1.0, 2.0, 3.0]),
            (String::from("c"), vec![2.0, 3.0, 4.0]),
        ];
        match least_squares(&[1.0, 2.0, 3.0], &cols) {
            Err(PsychError::RankDeficient { aliased }) => assert_eq!(aliased, vec![String::from("c")]),
            other => panic!("{other:?}"),
        }
    }
}
