//! Stochastic `K`-level quantization onto a uniform grid on `[-U, U]`.
//!
//! Level indices are zero-based throughout: index `k` decodes to
//! `-U + 2kU/(K-1)`, so index `0` is `-U` and index `K-1` is `+U`. Zero-based
//! indices are what make the `ceil(log2 K)`-bit packing exact.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantGrid {
    levels: usize,
    bound: f64,
}

impl QuantGrid {
    pub fn new(levels: usize, bound: f64) -> Result<Self> {
        if levels < 2 {
            return Err(invalid(format!("quantization needs K >= 2 levels, got {levels}")));
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(invalid(format!("grid bound must be positive and finite, got {bound}")));
        }
        Ok(QuantGrid { levels, bound })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Distance between adjacent levels, `2U/(K-1)`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.bound / (self.levels - 1) as f64
    }

    /// Value of level `k` (zero-based). The endpoints are exact.
    pub fn level(&self, k: usize) -> f64 {
        debug_assert!(k < self.levels);
        if k == 0 {
            -self.bound
        } else if k == self.levels - 1 {
            self.bound
        } else {
            -self.bound + 2.0 * k as f64 * self.bound / (self.levels - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.level(k)).collect()
    }

    pub fn bits_per_level(&self) -> u32 {
        bits_per_level(self.levels)
    }

    /// Lower end `k` of the bin `[B_k, B_{k+1})` holding `x`, and the
    /// probability of rounding up to `B_{k+1}`. `x = U` sits in the top bin
    /// with round-up probability one.
    fn bin(&self, x: f64) -> (usize, f64) {
        let top = self.levels - 2;
        let mut k = (((x + self.bound) / self.spacing()).floor().max(0.0) as usize).min(top);
        // The floor can land one bin off when x is a rounded grid value.
        while k < top && x >= self.level(k + 1) {
            k += 1;
        }
        while k > 0 && x < self.level(k) {
            k -= 1;
        }
        let lo = self.level(k);
        let hi = self.level(k + 1);
        let up = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        (k, up)
    }

    /// Unbiased stochastic rounding of one in-range value to a level index.
    pub fn round<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> u32 {
        let (k, up) = self.bin(x);
        if up == 0.0 {
            k as u32
        } else if up == 1.0 || rng.random::<f64>() < up {
            k as u32 + 1
        } else {
            k as u32
        }
    }

    fn check(&self, index: usize, x: f64) -> Result<()> {
        if x.abs() <= self.bound {
            Ok(())
        } else {
            Err(Error::OutOfRange { index, value: x, bound: self.bound })
        }
    }
}

/// `ceil(log2 K)` bits hold a zero-based level index.
pub fn bits_per_level(levels: usize) -> u32 {
    debug_assert!(levels >= 2);
    usize::BITS - (levels - 1).leading_zeros()
}

/// Grid vector stored as level indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedVector {
    indices: Vec<u32>,
    grid: QuantGrid,
}

impl QuantizedVector {
    pub fn new(indices: Vec<u32>, grid: QuantGrid) -> Result<Self> {
        if let Some(pos) = indices.iter().position(|&i| i as usize >= grid.levels()) {
            return Err(invalid(format!(
                "level index {} at position {pos} exceeds K - 1 = {}",
                indices[pos],
                grid.levels() - 1
            )));
        }
        Ok(QuantizedVector { indices, grid })
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn grid(&self) -> &QuantGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn decode(&self) -> Vec<f64> {
        self.indices.iter().map(|&k| self.grid.level(k as usize)).collect()
    }

    /// Serialized size in bits: `len * ceil(log2 K)`.
    pub fn bit_len(&self) -> u64 {
        self.indices.len() as u64 * self.grid.bits_per_level() as u64
    }

    /// Little-endian bit packing, coordinate-major: coordinate `j` occupies
    /// bits `j*b .. (j+1)*b` of the stream, least significant bit first.
    pub fn pack(&self) -> Vec<u8> {
        let b = self.grid.bits_per_level() as u64;
        let mut out = vec![0u8; self.bit_len().div_ceil(8) as usize];
        for (j, &idx) in self.indices.iter().enumerate() {
            let start = j as u64 * b;
            for bit in 0..b {
                if (idx >> bit) & 1 == 1 {
                    let pos = start + bit;
                    out[(pos / 8) as usize] |= 1 << (pos % 8);
                }
            }
        }
        out
    }

    pub fn unpack(bytes: &[u8], len: usize, grid: QuantGrid) -> Result<Self> {
        let b = grid.bits_per_level() as u64;
        let needed = (len as u64 * b).div_ceil(8) as usize;
        if bytes.len() != needed {
            return Err(Error::Wire(format!("{len} levels of {b} bits need {needed} bytes, got {}", bytes.len())));
        }
        let indices = (0..len as u64)
            .map(|j| {
                (0..b).fold(0u32, |acc, bit| {
                    let pos = j * b + bit;
                    let set = (bytes[(pos / 8) as usize] >> (pos % 8)) & 1;
                    acc | ((set as u32) << bit)
                })
            })
            .collect();
        QuantizedVector::new(indices, grid)
    }
}

/// Quantizes every coordinate of `x` independently and without bias.
/// Coordinates must already lie in `[-U, U]`.
pub fn quantize<R: Rng + ?Sized>(x: &[f64], grid: &QuantGrid, rng: &mut R) -> Result<QuantizedVector> {
    for (i, &v) in x.iter().enumerate() {
        grid.check(i, v)?;
    }
    let indices = x.iter().map(|&v| grid.round(v, rng)).collect();
    Ok(QuantizedVector { indices, grid: *grid })
}
