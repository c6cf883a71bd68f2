//! Exact output law of the mechanism by enumerating `{0..K-1}^d`.
//!
//! Set sizes are counted during the enumeration itself, so the table does not
//! depend on the log-space sums it is used to check.

use super::PrivacyParams;
use crate::error::{Error, Result};

/// Largest `K^d` that [`exact_pmf`] will enumerate.
pub const ENUMERATION_CAP: usize = 1 << 20;

/// Mixed-radix index of a level vector, coordinate 0 least significant.
pub fn outcome_index(levels: usize, v: &[u32]) -> usize {
    v.iter().rev().fold(0, |acc, &x| acc * levels + x as usize)
}

/// Inverse of [`outcome_index`].
pub fn outcome_levels(levels: usize, dim: usize, mut index: usize) -> Vec<u32> {
    (0..dim)
        .map(|_| {
            let x = (index % levels) as u32;
            index /= levels;
            x
        })
        .collect()
}

fn outcome_count(levels: usize, dim: usize) -> Option<usize> {
    let mut n = 1usize;
    for _ in 0..dim {
        n = n.checked_mul(levels).filter(|&n| n <= ENUMERATION_CAP)?;
    }
    Some(n)
}

/// `p(v | xhat)` for every `v`, indexed by [`outcome_index`].
pub fn exact_pmf(xhat: &[u32], params: &PrivacyParams) -> Result<Vec<f64>> {
    let (d, k) = (params.dim(), params.levels());
    if xhat.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: xhat.len() });
    }
    let n = outcome_count(k, d).ok_or(Error::EnumerationTooLarge { levels: k, dim: d, cap: ENUMERATION_CAP })?;

    let mut high = vec![false; n];
    let mut digits = vec![0u32; d];
    let mut matches = xhat.iter().filter(|&&x| x == 0).count();
    let mut high_count = 0usize;
    for (i, flag) in high.iter_mut().enumerate() {
        if i > 0 {
            // odometer increment, tracking the match count incrementally
            for (pos, digit) in digits.iter_mut().enumerate() {
                let was = *digit == xhat[pos];
                *digit = (*digit + 1) % k as u32;
                let now = *digit == xhat[pos];
                matches = matches + now as usize - was as usize;
                if *digit != 0 {
                    break;
                }
            }
        }
        *flag = matches >= params.tau();
        high_count += *flag as usize;
    }

    let low_count = n - high_count;
    let p_high = params.flip_prob() / high_count as f64;
    let p_low = if low_count == 0 { 0.0 } else { params.low_prob() / low_count as f64 };
    Ok(high.into_iter().map(|h| if h { p_high } else { p_low }).collect())
}
