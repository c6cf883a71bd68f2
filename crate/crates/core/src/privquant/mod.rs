//! PrivQuant: privatized sampling over the quantization grid.
//!
//! Given a grid vector `x_hat` in `B^d`, the mechanism outputs a grid vector
//! `V`: with probability `p` uniform over vectors that agree with `x_hat` in at
//! least `tau` coordinates, otherwise uniform over the rest. `E[V] = m x_hat`
//! for the normalizer `m` computed by [`normalizer`], so `Z = V / m` is an
//! unbiased estimate of `x_hat`.
//!
//! Sampling is two-stage and exact: draw the number of matching coordinates
//! from its truncated law, pick which coordinates match uniformly, then give
//! every other coordinate a uniform level different from `x_hat`'s.

mod budget;
mod exact;
mod reconstruction;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use budget::{solve_budget, threshold_matches, Budget, BudgetRegime, RatioCurve, RATIO_SHARE};
pub use exact::{exact_pmf, outcome_index, outcome_levels, ENUMERATION_CAP};
pub use reconstruction::{reconstruction_protection, ReconstructionBound};

use crate::combinatorics::{LogFactorials, MatchCountSampler};
use crate::error::{invalid, Error, Result};
use crate::quantizer::QuantizedVector;
use budget::{sigmoid, softplus};

/// Fully solved mechanism configuration for one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    dim: usize,
    levels: usize,
    epsilon: f64,
    epsilon1: f64,
    epsilon2: f64,
    kappa: i64,
    flip_prob: f64,
    log_odds: f64,
    tau: usize,
    log_m: f64,
    regime: BudgetRegime,
}

impl PrivacyParams {
    /// Splits `epsilon = epsilon1 + epsilon2`, solves `(kappa, p)` for
    /// `epsilon1` and computes the normalizer.
    pub fn solve(dim: usize, levels: usize, epsilon: f64, epsilon2: f64) -> Result<Self> {
        if !(epsilon2 >= 0.0 && epsilon2 < epsilon) {
            return Err(invalid(format!(
                "need 0 <= epsilon2 < epsilon, got epsilon = {epsilon}, epsilon2 = {epsilon2}"
            )));
        }
        let epsilon1 = epsilon - epsilon2;
        let facts = LogFactorials::new(dim);
        let curve = RatioCurve::with_factorials(dim, levels, &facts);
        let budget = curve.solve(epsilon1)?;
        Self::assemble(dim, levels, epsilon, epsilon1, epsilon2, budget, &curve, &facts)
    }

    /// Mechanism with a hand-picked threshold and flip probability. The
    /// recorded `epsilon1` is the level the pair actually achieves.
    pub fn from_parts(dim: usize, levels: usize, kappa: i64, flip_prob: f64) -> Result<Self> {
        if !(flip_prob > 0.5 && flip_prob < 1.0) {
            return Err(invalid(format!("flip probability must lie in (1/2, 1), got {flip_prob}")));
        }
        Self::from_log_odds(dim, levels, kappa, (flip_prob / (1.0 - flip_prob)).ln())
    }

    pub fn from_log_odds(dim: usize, levels: usize, kappa: i64, log_odds: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("mechanism dimension must be at least 1"));
        }
        if kappa < -(dim as i64) || kappa >= dim as i64 {
            return Err(invalid(format!("kappa {kappa} outside [-{dim}, {}]", dim - 1)));
        }
        let facts = LogFactorials::new(dim);
        let curve = RatioCurve::with_factorials(dim, levels, &facts);
        let achieved = log_odds + curve.log_ratio(kappa);
        let regime = if kappa >= 0 { BudgetRegime::Split } else { BudgetRegime::NegativeThreshold };
        let budget = Budget { kappa, log_odds, regime };
        Self::assemble(dim, levels, achieved, achieved, 0.0, budget, &curve, &facts)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        dim: usize,
        levels: usize,
        epsilon: f64,
        epsilon1: f64,
        epsilon2: f64,
        budget: Budget,
        curve: &RatioCurve,
        facts: &LogFactorials,
    ) -> Result<Self> {
        let tau = threshold_matches(dim, budget.kappa);
        let log_m = log_normalizer(curve, facts, tau, budget.log_odds)?;
        Ok(PrivacyParams {
            dim,
            levels,
            epsilon,
            epsilon1,
            epsilon2,
            kappa: budget.kappa,
            flip_prob: sigmoid(budget.log_odds),
            log_odds: budget.log_odds,
            tau,
            log_m,
            regime: budget.regime,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn levels(&self) -> usize {
        self.levels
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn epsilon1(&self) -> f64 {
        self.epsilon1
    }
    pub fn epsilon2(&self) -> f64 {
        self.epsilon2
    }
    pub fn kappa(&self) -> i64 {
        self.kappa
    }
    /// Probability `p` of sampling from the high-match set.
    pub fn flip_prob(&self) -> f64 {
        self.flip_prob
    }
    /// `log(p / (1 - p))`.
    pub fn log_odds(&self) -> f64 {
        self.log_odds
    }
    /// `1 - p`, accurate even when `p` rounds to one.
    pub fn low_prob(&self) -> f64 {
        sigmoid(-self.log_odds)
    }
    pub fn tau(&self) -> usize {
        self.tau
    }
    pub fn log_m(&self) -> f64 {
        self.log_m
    }
    pub fn m(&self) -> f64 {
        self.log_m.exp()
    }
    pub fn regime(&self) -> BudgetRegime {
        self.regime
    }

    /// `epsilon1` minus the log of the left side of the privacy constraint.
    /// Nonnegative iff the pair is `epsilon1`-LDP.
    pub fn slack(&self) -> f64 {
        let curve = RatioCurve::new(self.dim, self.levels).expect("validated at construction");
        self.epsilon1 - (self.log_odds + curve.log_ratio(self.kappa))
    }
}

/// `log m` for the parameters' `(d, K, tau, p)`, recomputed from scratch.
pub fn normalizer(params: &PrivacyParams) -> Result<f64> {
    let facts = LogFactorials::new(params.dim);
    let curve = RatioCurve::with_factorials(params.dim, params.levels, &facts);
    log_normalizer(&curve, &facts, params.tau, params.log_odds)
}

/// ```text
/// m = p c / S_high - (1 - p) c / S_low,   c = C(d-1, tau-1) (K-1)^(d-tau)
/// ```
fn log_normalizer(curve: &RatioCurve, facts: &LogFactorials, tau: usize, log_odds: f64) -> Result<f64> {
    let d = curve.dim();
    let levels = curve.weights().levels();
    let log_c = facts.binomial(d - 1, tau as i64 - 1).ln() + (d - tau) as f64 * ((levels - 1) as f64).ln();
    let log_high = curve.weights().log_sum(tau, d)?.ln();
    let log_low = curve.weights().log_sum(0, tau - 1)?.ln();
    let log_p = -softplus(-log_odds);
    let log_q = -softplus(log_odds);
    let first = log_p + log_c - log_high;
    let second = log_q + log_c - log_low;
    if !(second < first) {
        return Err(Error::NonPositiveNormalizer { log_odds, log_ratio: log_low - log_high });
    }
    Ok(first + log_one_minus_exp(second - first))
}

/// `log(1 - e^x)` for `x < 0`.
fn log_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Signed agreement count `#matches - #mismatches` between two grid vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MatchStatistic(i64);

impl MatchStatistic {
    pub fn between(a: &[u32], b: &[u32]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
        }
        let matches = a.iter().zip(b).filter(|(x, y)| x == y).count();
        Ok(Self::from_matches(a.len(), matches))
    }

    pub fn from_matches(dim: usize, matches: usize) -> Self {
        debug_assert!(matches <= dim);
        MatchStatistic(2 * matches as i64 - dim as i64)
    }

    pub fn value(self) -> i64 {
        self.0
    }

    pub fn matches(self, dim: usize) -> usize {
        ((self.0 + dim as i64) / 2) as usize
    }
}

/// Output of one privatization.
#[derive(Debug, Clone, PartialEq)]
pub struct Privatized {
    /// The sampled grid vector `V`, the quantity that goes on the wire.
    pub levels: QuantizedVector,
    /// `Z = V / m`.
    pub estimate: Vec<f64>,
}

/// Ready-to-sample mechanism: parameters plus the two match-count samplers.
#[derive(Debug, Clone)]
pub struct PrivQuant {
    params: PrivacyParams,
    high: MatchCountSampler,
    low: MatchCountSampler,
    low_prob: f64,
    inv_m: f64,
}

impl PrivQuant {
    pub fn new(params: PrivacyParams) -> Result<Self> {
        let weights = RatioCurve::new(params.dim, params.levels)?.weights().clone();
        let high = MatchCountSampler::new(&weights, params.tau, params.dim)?;
        let low = MatchCountSampler::new(&weights, 0, params.tau - 1)?;
        let low_prob = params.low_prob();
        let inv_m = (-params.log_m).exp();
        Ok(PrivQuant { params, high, low, low_prob, inv_m })
    }

    pub fn params(&self) -> &PrivacyParams {
        &self.params
    }

    pub fn inv_m(&self) -> f64 {
        self.inv_m
    }

    /// Samples `V` for the level indices `xhat` into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, xhat: &[u32], out: &mut [u32], rng: &mut R) -> Result<()> {
        let d = self.params.dim;
        if xhat.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: xhat.len() });
        }
        if out.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: out.len() });
        }
        let sampler = if rng.random::<f64>() < self.low_prob { &self.low } else { &self.high };
        let mut to_match = sampler.sample(rng);
        let others = self.params.levels as u32 - 1;
        // Selection sampling: each remaining coordinate matches with
        // probability (matches still needed) / (coordinates left).
        for (j, (&x, v)) in xhat.iter().zip(out.iter_mut()).enumerate() {
            let left = d - j;
            if to_match == left || (to_match > 0 && rng.random_range(0..left) < to_match) {
                *v = x;
                to_match -= 1;
            } else {
                let r = rng.random_range(0..others);
                *v = if r >= x { r + 1 } else { r };
            }
        }
        Ok(())
    }

    pub fn privatize<R: Rng + ?Sized>(&self, xhat: &QuantizedVector, rng: &mut R) -> Result<Privatized> {
        if xhat.grid().levels() != self.params.levels {
            return Err(invalid(format!(
                "input grid has {} levels, mechanism expects {}",
                xhat.grid().levels(),
                self.params.levels
            )));
        }
        let mut sampled = vec![0u32; xhat.len()];
        self.sample_into(xhat.indices(), &mut sampled, rng)?;
        let levels = QuantizedVector::new(sampled, *xhat.grid())?;
        let estimate = self.estimate(&levels);
        Ok(Privatized { levels, estimate })
    }

    /// `Z = decode(V) / m`.
    pub fn estimate(&self, v: &QuantizedVector) -> Vec<f64> {
        v.decode().into_iter().map(|x| x * self.inv_m).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer::QuantGrid;
    use crate::rng::seeded;

    #[test]
    fn one_dimensional_normalizer_is_two_p_minus_one() {
        for p in [0.55, 0.6, 0.8, 0.95, 0.999] {
            let params = PrivacyParams::from_parts(1, 2, 0, p).unwrap();
            assert!((params.m() - (2.0 * p - 1.0)).abs() < 1e-12, "p={p}: m={}", params.m());
        }
    }

    #[test]
    fn normalizer_recomputes_stored_value() {
        let params = PrivacyParams::solve(64, 8, 30.0, 2.0).unwrap();
        assert_eq!(normalizer(&params).unwrap(), params.log_m());
    }

    #[test]
    fn budget_split_is_recorded() {
        let params = PrivacyParams::solve(256, 16, 400.0, 10.0).unwrap();
        assert_eq!(params.epsilon1(), 390.0);
        assert_eq!(params.epsilon2(), 10.0);
        assert!(params.slack() >= -1e-9);
        assert!(PrivacyParams::solve(256, 16, 10.0, 10.0).is_err());
    }

    #[test]
    fn flip_probability_below_half_is_rejected() {
        assert!(PrivacyParams::from_parts(4, 3, 0, 0.5).is_err());
        assert!(PrivacyParams::from_parts(4, 3, 0, 1.0).is_err());
    }

    #[test]
    fn non_positive_normalizer_is_signalled() {
        // tau = 1: high set is huge, a small odds ratio cannot outweigh it.
        let err = PrivacyParams::from_log_odds(6, 4, -6, 0.01).unwrap_err();
        assert!(matches!(err, Error::NonPositiveNormalizer { .. }));
    }

    #[test]
    fn match_statistic_parity_and_counts() {
        let a = [0u32, 1, 2, 3, 1];
        let b = [0u32, 2, 2, 0, 1];
        let m = MatchStatistic::between(&a, &b).unwrap();
        assert_eq!(m.value(), 1); // 3 matches - 2 mismatches
        assert_eq!(m.matches(5), 3);
        assert!(MatchStatistic::between(&a, &b[..4]).is_err());
        for matches in 0..=7 {
            assert_eq!(MatchStatistic::from_matches(7, matches).value().rem_euclid(2), 1);
        }
    }

    #[test]
    fn binary_one_dimensional_mechanism_is_randomized_response() {
        let params = PrivacyParams::from_parts(1, 2, 0, 0.8).unwrap();
        let mech = PrivQuant::new(params).unwrap();
        let grid = QuantGrid::new(2, 1.0).unwrap();
        let xhat = QuantizedVector::new(vec![1], grid).unwrap();
        let mut rng = seeded(10);
        let n = 200_000;
        let mut kept = 0;
        for _ in 0..n {
            let out = mech.privatize(&xhat, &mut rng).unwrap();
            let z = out.estimate[0];
            if out.levels.indices()[0] == 1 {
                kept += 1;
                assert!((z - 1.0 / 0.6).abs() < 1e-12);
            } else {
                assert!((z + 1.0 / 0.6).abs() < 1e-12);
            }
        }
        let sigma = (n as f64 * 0.8 * 0.2).sqrt();
        assert!((kept as f64 - 0.8 * n as f64).abs() < 3.0 * sigma);
    }

    #[test]
    fn privatize_checks_shapes() {
        let params = PrivacyParams::from_parts(3, 4, 0, 0.7).unwrap();
        let mech = PrivQuant::new(params).unwrap();
        let mut rng = seeded(1);
        let wrong_dim = QuantizedVector::new(vec![0, 1], QuantGrid::new(4, 1.0).unwrap()).unwrap();
        assert!(matches!(mech.privatize(&wrong_dim, &mut rng), Err(Error::DimensionMismatch { .. })));
        let wrong_levels = QuantizedVector::new(vec![0, 1, 2], QuantGrid::new(5, 1.0).unwrap()).unwrap();
        assert!(mech.privatize(&wrong_levels, &mut rng).is_err());
    }

    #[test]
    fn sampled_match_counts_respect_branch_bands() {
        let params = PrivacyParams::from_parts(9, 3, 3, 0.9).unwrap();
        let tau = params.tau();
        let mech = PrivQuant::new(params).unwrap();
        let xhat = [0u32, 1, 2, 0, 1, 2, 0, 1, 2];
        let mut v = [0u32; 9];
        let mut rng = seeded(2);
        let mut high = 0;
        let n = 50_000;
        for _ in 0..n {
            mech.sample_into(&xhat, &mut v, &mut rng).unwrap();
            assert!(v.iter().all(|&x| x < 3));
            let matches = MatchStatistic::between(&xhat, &v).unwrap().matches(9);
            if matches >= tau {
                high += 1;
            }
        }
        let sigma = (n as f64 * 0.9 * 0.1).sqrt();
        assert!((high as f64 - 0.9 * n as f64).abs() < 3.0 * sigma);
    }
}
