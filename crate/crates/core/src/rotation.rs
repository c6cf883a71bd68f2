//! Randomized Hadamard rotation `R = H A / sqrt(d~)` and l2 clipping.
//!
//! `A` is a diagonal of independent signs drawn from public randomness, `H`
//! the Sylvester-Hadamard matrix. `R` is orthonormal, so a vector clipped to
//! the l2 ball of radius `U` still has every rotated coordinate in `[-U, U]`,
//! and the rotation spreads its mass so the largest coordinate is typically
//! of order `U sqrt(log d~ / d~)`.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::rng::{stream, Purpose};

/// Padded dimension `2^ceil(log2(r d))`.
pub fn padded_dim(ratio: f64, dim: usize) -> Result<usize> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(invalid(format!("sampling ratio must lie in (0, 1], got {ratio}")));
    }
    if dim == 0 {
        return Err(invalid("model dimension must be at least 1"));
    }
    // r d is usually a decimal product; shave off representation error so
    // that e.g. 0.005 * 51200 stays 256.
    let target = (ratio * dim as f64 * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok(target.next_power_of_two())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationPlan {
    dtilde: usize,
    seed: u64,
    scale: f64,
    signs: Vec<f64>,
}

impl RotationPlan {
    /// Plan for a `d~`-dimensional block with signs derived from `seed`.
    pub fn new(dtilde: usize, seed: u64) -> Result<Self> {
        if !dtilde.is_power_of_two() {
            return Err(invalid(format!("rotation dimension must be a power of two, got {dtilde}")));
        }
        let mut rng = stream(seed, Purpose::Rotation, 0, 0);
        let signs = (0..dtilde).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        Ok(RotationPlan { dtilde, seed, scale: 1.0 / (dtilde as f64).sqrt(), signs })
    }

    pub fn dtilde(&self) -> usize {
        self.dtilde
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dtilde {
            return Err(Error::DimensionMismatch { expected: self.dtilde, actual: x.len() });
        }
        Ok(())
    }

    /// `x <- H A x / sqrt(d~)`, in place.
    pub fn rotate(&self, x: &mut [f64]) -> Result<()> {
        self.check(x)?;
        for (v, s) in x.iter_mut().zip(&self.signs) {
            *v *= s;
        }
        fwht(x);
        for v in x.iter_mut() {
            *v *= self.scale;
        }
        Ok(())
    }

    /// `x <- A H x / sqrt(d~)`, in place.
    pub fn inverse_rotate(&self, x: &mut [f64]) -> Result<()> {
        self.check(x)?;
        fwht(x);
        for (v, s) in x.iter_mut().zip(&self.signs) {
            *v *= s * self.scale;
        }
        Ok(())
    }
}

/// Plan for sampling ratio `r` on a `d`-dimensional model.
pub fn make_plan(ratio: f64, dim: usize, seed: u64) -> Result<RotationPlan> {
    RotationPlan::new(padded_dim(ratio, dim)?, seed)
}

/// Unnormalized fast Walsh-Hadamard transform in place. The length must be a
/// power of two.
pub fn fwht(x: &mut [f64]) {
    let n = x.len();
    debug_assert!(n.is_power_of_two() || n == 0);
    let mut h = 1;
    while h < n {
        for block in x.chunks_exact_mut(2 * h) {
            let (a, b) = block.split_at_mut(h);
            for (u, v) in a.iter_mut().zip(b.iter_mut()) {
                let (s, t) = (*u + *v, *u - *v);
                *u = s;
                *v = t;
            }
        }
        h *= 2;
    }
}

pub fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Projects `x` onto the l2 ball of radius `bound`, in place. Returns the
/// norm before projection.
pub fn clip_l2(x: &mut [f64], bound: f64) -> f64 {
    let norm = l2_norm(x);
    if norm > bound {
        let s = bound / norm;
        for v in x.iter_mut() {
            *v *= s;
        }
    }
    norm
}
