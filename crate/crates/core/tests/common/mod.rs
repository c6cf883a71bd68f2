#![allow(dead_code)]

pub mod exact;

use sqsgd::privquant::{exact_pmf, outcome_levels, PrivacyParams};

/// Total variation between an empirical histogram and a probability table.
pub fn total_variation(counts: &[u64], pmf: &[f64]) -> f64 {
    let n = counts.iter().sum::<u64>() as f64;
    0.5 * counts.iter().zip(pmf).map(|(&c, &p)| (c as f64 / n - p).abs()).sum::<f64>()
}

/// `E|X - n p|` for `X ~ Binomial(n, p)`, by de Moivre's closed form
/// `2 v C(n, v) p^v (1 - p)^(n - v + 1)` with `v = floor(n p) + 1`.
pub fn binomial_mean_abs_deviation(n: u64, p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    let v = (n as f64 * p).floor() as u64 + 1;
    if v > n {
        return 0.0;
    }
    let ln_choose = libm::lgamma(n as f64 + 1.0) - libm::lgamma(v as f64 + 1.0) - libm::lgamma((n - v) as f64 + 1.0);
    let ln = (2.0 * v as f64).ln() + ln_choose + v as f64 * p.ln() + (n - v + 1) as f64 * (1.0 - p).ln();
    ln.exp()
}

/// Expected total variation between `pmf` and the histogram of `n` exact
/// draws from it.
pub fn expected_tv(pmf: &[f64], n: u64) -> f64 {
    0.5 * pmf.iter().map(|&p| binomial_mean_abs_deviation(n, p)).sum::<f64>() / n as f64
}

/// Upper quantile of chi-square by the Wilson-Hilferty approximation.
pub fn chi_square_quantile(dof: f64, z: f64) -> f64 {
    let a = 2.0 / (9.0 * dof);
    dof * (1.0 - a + z * a.sqrt()).powi(3)
}

/// `max ln p(v | u) - ln p(v | u')` over every input pair and output.
pub fn max_log_ratio(params: &PrivacyParams) -> f64 {
    let (d, k) = (params.dim(), params.levels());
    let n = k.pow(d as u32);
    let tables: Vec<Vec<f64>> = (0..n).map(|u| exact_pmf(&outcome_levels(k, d, u), params).unwrap()).collect();
    let mut worst = f64::NEG_INFINITY;
    for v in 0..n {
        for a in &tables {
            for b in &tables {
                worst = worst.max(a[v].ln() - b[v].ln());
            }
        }
    }
    worst
}

/// Largest coordinate error of `sum_v v p(v | x) = m x` on the level scale
/// `[-1, 1]`, for the input `x`.
pub fn unbiasedness_error(params: &PrivacyParams, x: &[u32]) -> f64 {
    let (d, k) = (params.dim(), params.levels());
    let pmf = exact_pmf(x, params).unwrap();
    let decode = |l: u32| -1.0 + 2.0 * l as f64 / (k - 1) as f64;
    let mut mean = vec![0.0; d];
    for (i, &p) in pmf.iter().enumerate() {
        for (m, &l) in mean.iter_mut().zip(&outcome_levels(k, d, i)) {
            *m += p * decode(l);
        }
    }
    let m = params.m();
    mean.iter().zip(x).map(|(e, &l)| (e - m * decode(l)).abs()).fold(0.0, f64::max)
}

/// Every level vector of length `d` over `K` levels, or a spread sample of
/// `limit` of them when there are more.
pub fn inputs(d: usize, k: usize, limit: usize) -> Vec<Vec<u32>> {
    let n = k.pow(d as u32);
    let step = n.div_ceil(limit).max(1);
    (0..n).step_by(step).map(|i| outcome_levels(k, d, i)).collect()
}
