//! Private scalar estimation and the shrinking norm bound.
//!
//! A client reports a norm `x in [0, U_t]` by rounding it stochastically onto
//! `k` evenly spaced levels of `[0, U_t]` and passing the level through
//! `k`-ary randomized response. The server debiases each report; the next
//! bound is the largest report, never above the current bound.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `k = ceil(e^(epsilon2 / 3))`, at least 2.
pub fn levels_for_budget(epsilon2: f64) -> usize {
    ((epsilon2 / 3.0).exp().ceil() as usize).max(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarDp {
    epsilon2: f64,
    levels: usize,
    stay: f64,
}

impl ScalarDp {
    pub fn new(epsilon2: f64) -> Result<Self> {
        Self::with_levels(epsilon2, levels_for_budget(epsilon2))
    }

    pub fn with_levels(epsilon2: f64, levels: usize) -> Result<Self> {
        if !(epsilon2 > 0.0) {
            return Err(invalid(format!("epsilon2 must be positive, got {epsilon2}")));
        }
        if levels < 2 {
            return Err(invalid(format!("scalar mechanism needs at least 2 levels, got {levels}")));
        }
        let stay = 1.0 / (1.0 + (levels - 1) as f64 * (-epsilon2).exp());
        Ok(ScalarDp { epsilon2, levels, stay })
    }

    pub fn epsilon2(&self) -> f64 {
        self.epsilon2
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Probability that randomized response keeps the true level.
    pub fn stay_prob(&self) -> f64 {
        self.stay
    }

    fn switch_prob(&self) -> f64 {
        (1.0 - self.stay) / (self.levels - 1) as f64
    }

    /// Client side: quantize then randomize. Returns the reported level.
    pub fn report<R: Rng + ?Sized>(&self, x: f64, bound: f64, rng: &mut R) -> Result<usize> {
        if !(bound > 0.0) {
            return Err(invalid(format!("scalar bound must be positive, got {bound}")));
        }
        if !(0.0..=bound).contains(&x) {
            return Err(invalid(format!("scalar {x} outside [0, {bound}]")));
        }
        let top = self.levels - 1;
        let pos = x / bound * top as f64;
        let lo = (pos.floor() as usize).min(top);
        let level = if lo < top && rng.random::<f64>() < pos - lo as f64 { lo + 1 } else { lo };
        if rng.random::<f64>() < self.stay {
            Ok(level)
        } else {
            let r = rng.random_range(0..top);
            Ok(if r >= level { r + 1 } else { r })
        }
    }

    /// Server side: unbiased estimate of `x` from a reported level, before
    /// clamping.
    pub fn debias(&self, reported: usize, bound: f64) -> f64 {
        let top = (self.levels - 1) as f64;
        let total = top * (top + 1.0) / 2.0;
        let off = self.switch_prob();
        let level = (reported as f64 - off * total) / (self.stay - off);
        level * bound / top
    }

    /// Unbiased estimate of `x`, not yet clamped to `[0, bound]`.
    pub fn estimate_raw<R: Rng + ?Sized>(&self, x: f64, bound: f64, rng: &mut R) -> Result<f64> {
        let reported = self.report(x, bound, rng)?;
        Ok(self.debias(reported, bound))
    }

    pub fn estimate<R: Rng + ?Sized>(&self, x: f64, bound: f64, rng: &mut R) -> Result<f64> {
        Ok(self.estimate_raw(x, bound, rng)?.clamp(0.0, bound))
    }
}

/// How clients report their norm to the server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormEstimator {
    Private(ScalarDp),
    /// The true value, for testing the bound dynamics without noise.
    Exact,
}

impl NormEstimator {
    pub fn estimate<R: Rng + ?Sized>(&self, x: f64, bound: f64, rng: &mut R) -> Result<f64> {
        match self {
            NormEstimator::Private(dp) => dp.estimate(x, bound, rng),
            NormEstimator::Exact => {
                if !(0.0..=bound).contains(&x) {
                    return Err(invalid(format!("scalar {x} outside [0, {bound}]")));
                }
                Ok(x)
            }
        }
    }
}

/// Server-held norm bound `U_t` and its history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormBoundState {
    current: f64,
    floor: f64,
    history: Vec<f64>,
}

impl NormBoundState {
    /// `floor` keeps the bound strictly positive when every report is zero.
    pub fn new(initial: f64, floor: f64) -> Result<Self> {
        if !(initial > 0.0 && initial.is_finite()) {
            return Err(invalid(format!("initial norm bound must be positive, got {initial}")));
        }
        if !(floor > 0.0 && floor <= initial) {
            return Err(invalid(format!("norm floor must lie in (0, {initial}], got {floor}")));
        }
        Ok(NormBoundState { current: initial, floor, history: vec![initial] })
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// `U_0, U_1, ..., U_t`.
    pub fn history(&self) -> &[f64] {
        &self.history
    }
}

/// `U_{t+1} = min(U_t, max_s U_{s,t})`, floored.
pub fn update_bound(state: &mut NormBoundState, estimates: &[f64]) -> Result<f64> {
    let top = estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if estimates.is_empty() {
        return Err(Error::NoEstimates);
    }
    if top.is_nan() || estimates.iter().any(|v| v.is_nan()) {
        return Err(invalid("norm estimate is NaN"));
    }
    let next = top.min(state.current).max(state.floor);
    state.current = next;
    state.history.push(next);
    Ok(next)
}
