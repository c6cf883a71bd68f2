//! Log-space combinatorial kernels.
//!
//! The privatization mechanism needs sums of the form
//! `sum_{l=lo}^{hi} C(d, l) (K-1)^(d-l)`: the number of grid vectors in
//! `{1..K}^d` that agree with a fixed vector in exactly `l` coordinates,
//! summed over a band of `l`. At `d` in the hundreds of thousands these
//! overflow any float, so everything here works with natural logarithms.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul};

use rand::Rng;

use crate::error::{invalid, Error, Result};

/// Natural logarithm of a nonnegative quantity. `-inf` stands for zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogWeight(f64);

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight(f64::NEG_INFINITY);
    pub const ONE: LogWeight = LogWeight(0.0);

    pub fn from_ln(ln: f64) -> Self {
        debug_assert!(!ln.is_nan());
        LogWeight(ln)
    }

    pub fn from_value(value: f64) -> Self {
        debug_assert!(value >= 0.0);
        LogWeight(value.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn exp(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Sum of many weights: shift by the maximum, add the scaled values with
    /// compensated summation, shift back.
    pub fn sum_of<I>(weights: I) -> LogWeight
    where
        I: IntoIterator<Item = LogWeight>,
        I::IntoIter: Clone,
    {
        let iter = weights.into_iter();
        let max = iter.clone().map(|w| w.0).fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return LogWeight::ZERO;
        }
        let mut acc = Compensated::default();
        for w in iter {
            acc.add((w.0 - max).exp());
        }
        LogWeight(max + acc.total().ln())
    }
}

impl Add for LogWeight {
    type Output = LogWeight;

    fn add(self, rhs: LogWeight) -> LogWeight {
        let (hi, lo) = if self.0 >= rhs.0 { (self.0, rhs.0) } else { (rhs.0, self.0) };
        if lo == f64::NEG_INFINITY {
            return LogWeight(hi);
        }
        LogWeight(hi + (lo - hi).exp().ln_1p())
    }
}

impl Mul for LogWeight {
    type Output = LogWeight;

    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: LogWeight) -> LogWeight {
        LogWeight(self.0 + rhs.0)
    }
}

impl Div for LogWeight {
    type Output = LogWeight;

    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: LogWeight) -> LogWeight {
        LogWeight(self.0 - rhs.0)
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `log C(n, k)`, zero weight outside `0..=n`.
pub fn log_binomial(n: u64, k: i64) -> LogWeight {
    if k < 0 || k as u64 > n {
        return LogWeight::ZERO;
    }
    let k = (k as u64).min(n - k as u64);
    if k == 0 {
        return LogWeight::ONE;
    }
    LogWeight(ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k))
}

fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// Cached `ln(k!)` for `k <= n`.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(n: usize) -> Self {
        let table = (0..=n as u64).map(ln_factorial).collect();
        LogFactorials { table }
    }

    pub fn max_n(&self) -> usize {
        self.table.len() - 1
    }

    pub fn binomial(&self, n: usize, k: i64) -> LogWeight {
        assert!(n <= self.max_n(), "factorial table too small for n = {n}");
        if k < 0 || k as usize > n {
            return LogWeight::ZERO;
        }
        let k = (k as usize).min(n - k as usize);
        if k == 0 {
            return LogWeight::ONE;
        }
        LogWeight(self.table[n] - self.table[k] - self.table[n - k])
    }
}

/// Per-match-count log-weights `C(d, l) (K-1)^(d-l)` for `l = 0..=d`.
#[derive(Debug, Clone)]
pub struct MatchWeights {
    dim: usize,
    levels: usize,
    terms: Vec<f64>,
}

impl MatchWeights {
    pub fn new(dim: usize, levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(invalid(format!("need at least 2 levels, got {levels}")));
        }
        let facts = LogFactorials::new(dim);
        Ok(Self::with_factorials(dim, levels, &facts))
    }

    pub fn with_factorials(dim: usize, levels: usize, facts: &LogFactorials) -> Self {
        let ln_other = ((levels - 1) as f64).ln();
        let terms = (0..=dim).map(|l| facts.binomial(dim, l as i64).ln() + (dim - l) as f64 * ln_other).collect();
        MatchWeights { dim, levels, terms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn term(&self, matches: usize) -> LogWeight {
        LogWeight(self.terms[matches])
    }

    /// `log sum_{l=lo}^{hi} C(d, l) (K-1)^(d-l)`.
    pub fn log_sum(&self, lo: usize, hi: usize) -> Result<LogWeight> {
        if lo > hi {
            return Err(Error::EmptyRange { lo: lo as i64, hi: hi as i64 });
        }
        if hi > self.dim {
            return Err(invalid(format!("upper match count {hi} exceeds dimension {}", self.dim)));
        }
        Ok(LogWeight::sum_of(self.terms[lo..=hi].iter().map(|&t| LogWeight(t))))
    }
}

/// `log sum_{l=lo}^{hi} C(d, l) (K-1)^(d-l)` for a one-off evaluation.
pub fn log_tail_sum(dim: usize, levels: usize, lo: usize, hi: usize) -> Result<LogWeight> {
    if lo > hi {
        return Err(Error::EmptyRange { lo: lo as i64, hi: hi as i64 });
    }
    MatchWeights::new(dim, levels)?.log_sum(lo, hi)
}

/// Inverse-CDF sampler of the match count `l` restricted to `[lo, hi]`, with
/// probability proportional to `C(d, l) (K-1)^(d-l)`.
///
/// Buckets are laid out in descending weight so the cumulative sums start
/// with the dominant terms.
#[derive(Debug, Clone)]
pub struct MatchCountSampler {
    order: Vec<u32>,
    cumulative: Vec<f64>,
    probs: Vec<f64>,
    lo: usize,
}

impl MatchCountSampler {
    pub fn new(weights: &MatchWeights, lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return Err(Error::EmptyRange { lo: lo as i64, hi: hi as i64 });
        }
        if hi > weights.dim() {
            return Err(invalid(format!("upper match count {hi} exceeds dimension {}", weights.dim())));
        }
        let band = &weights.terms[lo..=hi];
        let mut order: Vec<u32> = (0..band.len() as u32).collect();
        order.sort_by(|&a, &b| band[b as usize].partial_cmp(&band[a as usize]).unwrap_or(Ordering::Equal));
        let max = band[order[0] as usize];
        let mut acc = Compensated::default();
        let mut cumulative = Vec::with_capacity(order.len());
        for &i in &order {
            acc.add((band[i as usize] - max).exp());
            cumulative.push(acc.total());
        }
        let total = acc.total();
        for c in &mut cumulative {
            *c /= total;
        }
        let probs = band.iter().map(|&t| (t - max).exp() / total).collect();
        Ok(MatchCountSampler { order, cumulative, probs, lo })
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.lo + self.order.len() - 1
    }

    /// Normalized probability of match count `l` (zero outside the band).
    pub fn probability(&self, matches: usize) -> f64 {
        if matches < self.lo || matches > self.hi() {
            return 0.0;
        }
        self.probs[matches - self.lo]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.order.len() == 1 {
            return self.lo;
        }
        let u: f64 = rng.random();
        let pos = self.cumulative.partition_point(|&c| c <= u);
        let pos = pos.min(self.order.len() - 1);
        self.lo + self.order[pos] as usize
    }
}

/// Draws a match count in `[lo, hi]` with weight `C(d, l) (K-1)^(d-l)`.
pub fn sample_truncated_matchcount<R: Rng + ?Sized>(
    dim: usize,
    levels: usize,
    lo: usize,
    hi: usize,
    rng: &mut R,
) -> Result<usize> {
    let weights = MatchWeights::new(dim, levels)?;
    Ok(MatchCountSampler::new(&weights, lo, hi)?.sample(rng))
}
