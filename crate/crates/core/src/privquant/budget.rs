//! Choosing the threshold `kappa` and flip probability `p` for a budget.
//!
//! The mechanism is `epsilon1`-LDP whenever
//!
//! ```text
//! log(p / (1 - p)) + log(S_low(tau) / S_high(tau)) <= epsilon1
//! ```
//!
//! with `S_low = sum_{l < tau} C(d,l)(K-1)^(d-l)`, `S_high` the complementary
//! sum and `tau = ceil((d + kappa + 1) / 2)`. The log-ratio term grows with
//! `kappa`. The default rule spends `0.9 epsilon1` on the ratio (largest
//! `kappa` that fits) and `0.1 epsilon1` on the flip odds.
//!
//! When no `kappa >= 0` fits, `kappa = 0` is kept and the odds absorb the
//! rest of the budget. If even that is infeasible (large `d`, large `K`,
//! moderate budget) the search continues over negative thresholds, which keep
//! more of the grid in the high-probability set. Every returned pair has a
//! strictly positive normalizer.

use serde::{Deserialize, Serialize};

use crate::combinatorics::{LogFactorials, MatchWeights};
use crate::error::{invalid, Error, Result};

/// Fraction of `epsilon1` spent on the match-count ratio by the default rule.
pub const RATIO_SHARE: f64 = 0.9;

/// `tau = ceil((d + kappa + 1) / 2)`: the minimum number of matching
/// coordinates for `M(u, v) > kappa`. Valid for `-d <= kappa <= d - 1`.
pub fn threshold_matches(dim: usize, kappa: i64) -> usize {
    let n = dim as i64 + kappa + 1;
    debug_assert!(n >= 1 && n <= 2 * dim as i64, "kappa {kappa} out of range for d = {dim}");
    ((n + 1) / 2) as usize
}

/// Which branch of the selection rule produced a [`Budget`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetRegime {
    /// `kappa >= 0` with the 0.9 / 0.1 split.
    Split,
    /// `kappa = 0`, flip odds solved with equality at the full budget.
    ZeroThreshold,
    /// Negative threshold; no `kappa >= 0` is feasible.
    NegativeThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub kappa: i64,
    /// `log(p / (1 - p))`. Kept alongside `p` because `p` rounds to one for
    /// budgets in the hundreds.
    pub log_odds: f64,
    pub regime: BudgetRegime,
}

impl Budget {
    pub fn flip_prob(&self) -> f64 {
        sigmoid(self.log_odds)
    }
}

/// Evaluates `log(S_low / S_high)` as a function of `kappa` for fixed `(d, K)`.
#[derive(Debug, Clone)]
pub struct RatioCurve {
    weights: MatchWeights,
}

impl RatioCurve {
    pub fn new(dim: usize, levels: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("mechanism dimension must be at least 1"));
        }
        Ok(RatioCurve { weights: MatchWeights::new(dim, levels)? })
    }

    pub(crate) fn with_factorials(dim: usize, levels: usize, facts: &LogFactorials) -> Self {
        RatioCurve { weights: MatchWeights::with_factorials(dim, levels, facts) }
    }

    pub fn dim(&self) -> usize {
        self.weights.dim()
    }

    pub fn weights(&self) -> &MatchWeights {
        &self.weights
    }

    pub fn kappa_range(&self) -> (i64, i64) {
        (-(self.dim() as i64), self.dim() as i64 - 1)
    }

    /// `log S_low(tau) - log S_high(tau)`.
    pub fn log_ratio(&self, kappa: i64) -> f64 {
        let d = self.dim();
        let tau = threshold_matches(d, kappa);
        let low = self.weights.log_sum(0, tau - 1).expect("tau >= 1");
        let high = self.weights.log_sum(tau, d).expect("tau <= d");
        low.ln() - high.ln()
    }

    /// Largest `kappa` in `[lo, hi]` whose log-ratio is at most `limit`.
    fn largest_within(&self, lo: i64, hi: i64, limit: f64) -> Option<i64> {
        if lo > hi || self.log_ratio(lo) > limit {
            return None;
        }
        let (mut good, mut bad) = (lo, hi + 1);
        while bad - good > 1 {
            let mid = good + (bad - good) / 2;
            if self.log_ratio(mid) <= limit {
                good = mid;
            } else {
                bad = mid;
            }
        }
        Some(good)
    }

    pub fn solve(&self, epsilon1: f64) -> Result<Budget> {
        if !(epsilon1 > 0.0 && epsilon1.is_finite()) {
            return Err(invalid(format!("epsilon1 must be positive and finite, got {epsilon1}")));
        }
        let d = self.dim() as i64;
        let split_limit = RATIO_SHARE * epsilon1;
        let split_odds = (1.0 - RATIO_SHARE) * epsilon1;

        if let Some(kappa) = self.largest_within(0, d - 1, split_limit) {
            return Ok(Budget { kappa, log_odds: split_odds, regime: BudgetRegime::Split });
        }

        let at_zero = self.log_ratio(0);
        if at_zero < epsilon1 {
            return Ok(Budget { kappa: 0, log_odds: epsilon1 - at_zero, regime: BudgetRegime::ZeroThreshold });
        }

        let (kappa, log_odds) = match self.largest_within(-d, -1, split_limit) {
            Some(kappa) => {
                let ratio = self.log_ratio(kappa);
                // Positive normalizer needs odds * ratio > 1.
                let odds = if split_odds + ratio > 0.0 { split_odds } else { epsilon1 - ratio };
                (kappa, odds)
            }
            None => {
                let ratio = self.log_ratio(-d);
                if ratio >= epsilon1 {
                    return Err(Error::InfeasibleBudget { epsilon1 });
                }
                (-d, epsilon1 - ratio)
            }
        };
        Ok(Budget { kappa, log_odds, regime: BudgetRegime::NegativeThreshold })
    }
}

/// `(kappa, p)` for a `dim`-dimensional, `levels`-level mechanism at budget
/// `epsilon1`.
pub fn solve_budget(dim: usize, levels: usize, epsilon1: f64) -> Result<Budget> {
    RatioCurve::new(dim, levels)?.solve(epsilon1)
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}
