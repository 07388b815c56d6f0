//! Log-space weight arithmetic, categorical sampling and number formatting.

use rand::Rng;

/// `log Σ exp(v_i)`, shifted by the maximum. Returns `-inf` when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = max_finite(values);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

fn max_finite(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Exp-normalizes log-weights into `out`. Returns `false` if every weight is zero.
pub fn normalize_log_weights_into(log_weights: &[f64], out: &mut Vec<f64>) -> bool {
    out.clear();
    let max = max_finite(log_weights);
    if max == f64::NEG_INFINITY || max.is_nan() {
        out.resize(log_weights.len(), 0.0);
        return false;
    }
    out.extend(log_weights.iter().map(|&v| (v - max).exp()));
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|w| *w /= total);
    true
}

pub fn normalize_log_weights(log_weights: &[f64]) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(log_weights.len());
    normalize_log_weights_into(log_weights, &mut out).then_some(out)
}

/// Effective sample size `1 / Σ w̄²` of a log-weight vector.
pub fn effective_sample_size(log_weights: &[f64]) -> f64 {
    match normalize_log_weights(log_weights) {
        Some(w) => 1.0 / w.iter().map(|x| x * x).sum::<f64>(),
        None => 0.0,
    }
}

/// Inverse-CDF sampler over a fixed vector of nonnegative weights.
///
/// A draw returns the first index whose cumulative weight strictly exceeds
/// `u · total`, with `u` uniform on `[0, 1)`.
#[derive(Debug, Clone)]
pub struct Categorical {
    cumulative: Vec<f64>,
    last_positive: usize,
}

impl Categorical {
    /// Builds from log-weights with max-shifted exponentiation.
    pub fn from_log_weights(log_weights: &[f64]) -> Option<Self> {
        let mut c = Categorical {
            cumulative: Vec::with_capacity(log_weights.len()),
            last_positive: 0,
        };
        c.rebuild_from_log_weights(log_weights).then_some(c)
    }

    pub fn empty() -> Self {
        Categorical {
            cumulative: Vec::new(),
            last_positive: 0,
        }
    }

    /// Reuses the allocation; returns `false` when the total weight is zero.
    pub fn rebuild_from_log_weights(&mut self, log_weights: &[f64]) -> bool {
        let max = max_finite(log_weights);
        self.cumulative.clear();
        if max == f64::NEG_INFINITY || max.is_nan() {
            return false;
        }
        let mut acc = 0.0;
        for (j, &lw) in log_weights.iter().enumerate() {
            let w = (lw - max).exp();
            if w > 0.0 {
                self.last_positive = j;
            }
            acc += w;
            self.cumulative.push(acc);
        }
        true
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Index selected by a uniform `u ∈ [0, 1)`.
    pub fn index_for(&self, u: f64) -> usize {
        let target = u * self.total();
        let idx = self.cumulative.partition_point(|&c| c <= target);
        // rounding can push target onto the final cumulative value
        idx.min(self.last_positive)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index_for(rng.random::<f64>())
    }

    /// Normalized probability of index `j`.
    pub fn probability(&self, j: usize) -> f64 {
        let prev = if j == 0 { 0.0 } else { self.cumulative[j - 1] };
        (self.cumulative[j] - prev) / self.total()
    }
}

/// Composite Simpson rule with `panels` subintervals (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = if panels % 2 == 1 { panels + 1 } else { panels.max(2) };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let x = a + h * k as f64;
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * h / 3.0
}

/// Formats a float like C's `%.17g`, which round-trips every `f64`.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..17).contains(&exp) {
        let mantissa = strip_trailing_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", mantissa, sign, exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        strip_trailing_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_trailing_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Unbiased sample mean and variance (`n − 1` denominator).
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1) as f64)
}
