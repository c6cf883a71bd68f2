//! Coordinate subsampling with residual accumulation.
//!
//! Each round a client sends only a random block of coordinates. Mass on the
//! other coordinates is not dropped: it accumulates in a residual (scaled by
//! `alpha`) and rides along the next time those coordinates are selected.

use rand::Rng;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClientResidual {
    res: Vec<f64>,
    alpha: f64,
    beta: f64,
}

impl ClientResidual {
    pub fn new(dim: usize, alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(invalid("residual factors must be finite"));
        }
        Ok(ClientResidual { res: vec![0.0; dim], alpha, beta })
    }

    pub fn residual(&self) -> &[f64] {
        &self.res
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn reset(&mut self) {
        self.res.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Returns `res[D] + beta grad[D]` in the order of `dims`, then sets
    /// `res[D] = 0` and `res[j] += alpha grad[j]` off `D`.
    pub fn extract_and_update(&mut self, grad: &[f64], dims: &[usize]) -> Result<Vec<f64>> {
        if grad.len() != self.res.len() {
            return Err(Error::DimensionMismatch { expected: self.res.len(), actual: grad.len() });
        }
        if let Some(&j) = dims.iter().find(|&&j| j >= grad.len()) {
            return Err(invalid(format!("selected index {j} outside dimension {}", grad.len())));
        }
        let payload = dims.iter().map(|&j| self.res[j] + self.beta * grad[j]).collect();
        for (r, g) in self.res.iter_mut().zip(grad) {
            *r += self.alpha * g;
        }
        for &j in dims {
            self.res[j] = 0.0;
        }
        Ok(payload)
    }
}

/// Uniform `dtilde`-subset of `0..dim`, sorted. The full selection consumes
/// no randomness.
pub fn select_dims<R: Rng + ?Sized>(dim: usize, dtilde: usize, rng: &mut R) -> Result<Vec<usize>> {
    if dtilde > dim {
        return Err(invalid(format!("cannot select {dtilde} of {dim} coordinates")));
    }
    if dtilde == dim {
        return Ok((0..dim).collect());
    }
    let mut dims = rand::seq::index::sample(rng, dim, dtilde).into_vec();
    dims.sort_unstable();
    Ok(dims)
}

/// Dense length-`dim` vector holding `payload` at `dims` and zeros elsewhere.
pub fn scatter(payload: &[f64], dims: &[usize], dim: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; dim];
    scatter_add(payload, dims, &mut out)?;
    Ok(out)
}

/// `out[dims[i]] += payload[i]`.
pub fn scatter_add(payload: &[f64], dims: &[usize], out: &mut [f64]) -> Result<()> {
    if payload.len() != dims.len() {
        return Err(Error::DimensionMismatch { expected: dims.len(), actual: payload.len() });
    }
    let dim = out.len();
    for (&v, &j) in payload.iter().zip(dims) {
        let slot = out.get_mut(j).ok_or_else(|| invalid(format!("index {j} outside dimension {dim}")))?;
        *slot += v;
    }
    Ok(())
}

/// Wire size of an index set: a 32-bit count followed by 32-bit indices.
pub fn index_set_bits(len: usize) -> u64 {
    32 * (1 + len as u64)
}

/// Count, then sorted indices, all `u32` little-endian.
pub fn encode_index_set(dims: &[usize]) -> Result<Vec<u8>> {
    let mut sorted = dims.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Wire("index set contains duplicates".into()));
    }
    let mut out = Vec::with_capacity(4 * (1 + dims.len()));
    let count = u32::try_from(dims.len()).map_err(|_| Error::Wire("index set too large".into()))?;
    out.extend_from_slice(&count.to_le_bytes());
    for j in sorted {
        let j = u32::try_from(j).map_err(|_| Error::Wire(format!("index {j} does not fit in 32 bits")))?;
        out.extend_from_slice(&j.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_index_set(bytes: &[u8]) -> Result<Vec<usize>> {
    let word =
        |i: usize| -> Option<u32> { bytes.get(4 * i..4 * i + 4).map(|b| u32::from_le_bytes(b.try_into().unwrap())) };
    let count = word(0).ok_or_else(|| Error::Wire("missing index count".into()))? as usize;
    if bytes.len() != 4 * (1 + count) {
        return Err(Error::Wire(format!("{count} indices need {} bytes, got {}", 4 * (1 + count), bytes.len())));
    }
    let dims: Vec<usize> = (1..=count).map(|i| word(i).unwrap() as usize).collect();
    if dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Wire("indices are not strictly increasing".into()));
    }
    Ok(dims)
}
