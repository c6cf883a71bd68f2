//! One round of the client/server protocol.
//!
//! Client: batch gradient, l2 clip to `U_t`, coordinate selection, residual
//! blend, re-clip, zero padding to `d~`, rotation, quantization onto the
//! `K`-level grid on `[-U_t, U_t]`, privatization, and a private norm report.
//!
//! Server: for each message, decode the levels, divide by `m`, undo the
//! rotation, drop the padding and scatter onto the selected coordinates; then
//! average over clients, take an SGD step and update `U_t`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::{sample_batch, Shard};
use super::model::Model;
use crate::error::{invalid, Error, Result};
use crate::privquant::{PrivQuant, PrivacyParams};
use crate::quantizer::{quantize, QuantGrid, QuantizedVector};
use crate::rng::{stream, Purpose};
use crate::rotation::{clip_l2, padded_dim, RotationPlan};
use crate::scalardp::{update_bound, NormBoundState, NormEstimator, ScalarDp};
use crate::sparsifier::{index_set_bits, scatter_add, select_dims, ClientResidual};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Full pipeline with privatization.
    Sqsgd,
    /// Everything except privatization; norm reports are exact.
    QuantizeOnly,
    /// Plain FedSgd on raw gradients.
    Baseline,
}

/// Which norm a client reports for the bound update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSignal {
    /// l2 norm of the clipped batch gradient.
    GradientL2,
    /// l2 norm of the clipped payload before rotation.
    PayloadL2,
    /// l-infinity norm of the rotated payload.
    RotatedLinf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub mode: Mode,
    pub levels: usize,
    pub sampling_ratio: f64,
    pub rotation: bool,
    pub subsample: bool,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub epsilon2: f64,
    pub shrinkage: bool,
    pub norm_signal: NormSignal,
    pub rotation_seed: u64,
}

impl PipelineSpec {
    pub fn sqsgd(levels: usize, sampling_ratio: f64, epsilon: f64, epsilon2: f64) -> Self {
        PipelineSpec {
            mode: Mode::Sqsgd,
            levels,
            sampling_ratio,
            rotation: true,
            subsample: true,
            alpha: 1.0,
            beta: 1.0,
            epsilon,
            epsilon2,
            shrinkage: epsilon2 > 0.0,
            norm_signal: NormSignal::GradientL2,
            rotation_seed: 0,
        }
    }

    pub fn quantize_only(levels: usize, sampling_ratio: f64) -> Self {
        PipelineSpec {
            mode: Mode::QuantizeOnly,
            epsilon: 0.0,
            epsilon2: 0.0,
            shrinkage: false,
            ..Self::sqsgd(levels, sampling_ratio, 1.0, 0.0)
        }
    }

    pub fn baseline() -> Self {
        PipelineSpec { mode: Mode::Baseline, rotation: false, subsample: false, ..Self::quantize_only(2, 1.0) }
    }
}

/// A [`PipelineSpec`] resolved for a model dimension.
#[derive(Debug, Clone)]
pub struct Pipeline {
    spec: PipelineSpec,
    dim: usize,
    selected: usize,
    dtilde: usize,
    rotation: Option<RotationPlan>,
    mechanism: Option<PrivQuant>,
    norm: Option<NormEstimator>,
}

impl Pipeline {
    pub fn new(spec: PipelineSpec, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("model dimension must be at least 1"));
        }
        if spec.mode == Mode::Baseline {
            return Ok(Pipeline { spec, dim, selected: dim, dtilde: dim, rotation: None, mechanism: None, norm: None });
        }
        let selected = if spec.subsample { padded_dim(spec.sampling_ratio, dim)?.min(dim) } else { dim };
        let dtilde = if spec.rotation { selected.next_power_of_two() } else { selected };
        let rotation = if spec.rotation { Some(RotationPlan::new(dtilde, spec.rotation_seed)?) } else { None };
        QuantGrid::new(spec.levels, 1.0)?;
        let (mechanism, norm) = match spec.mode {
            Mode::Sqsgd => {
                let epsilon2 = if spec.shrinkage { spec.epsilon2 } else { 0.0 };
                if spec.shrinkage && !(epsilon2 > 0.0) {
                    return Err(invalid("shrinkage needs a positive epsilon2"));
                }
                let params = PrivacyParams::solve(dtilde, spec.levels, spec.epsilon, epsilon2)?;
                let norm = spec.shrinkage.then(|| ScalarDp::new(epsilon2).map(NormEstimator::Private)).transpose()?;
                (Some(PrivQuant::new(params)?), norm)
            }
            _ => (None, spec.shrinkage.then_some(NormEstimator::Exact)),
        };
        Ok(Pipeline { spec, dim, selected, dtilde, rotation, mechanism, norm })
    }

    pub fn spec(&self) -> &PipelineSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of coordinates a client sends, `min(d~, d)`.
    pub fn selected(&self) -> usize {
        self.selected
    }

    /// Length of the rotated, quantized block.
    pub fn dtilde(&self) -> usize {
        self.dtilde
    }

    pub fn rotation(&self) -> Option<&RotationPlan> {
        self.rotation.as_ref()
    }

    pub fn privacy(&self) -> Option<&PrivacyParams> {
        self.mechanism.as_ref().map(|m| m.params())
    }

    pub fn shrinks(&self) -> bool {
        self.norm.is_some()
    }

    fn sends_dims(&self) -> bool {
        self.spec.subsample && self.selected < self.dim
    }

    /// Bits of the quantized block, `d~ ceil(log2 K)`; 64 per float for the
    /// baseline.
    pub fn payload_bits(&self) -> u64 {
        match self.spec.mode {
            Mode::Baseline => 64 * self.dim as u64,
            _ => self.dtilde as u64 * crate::quantizer::bits_per_level(self.spec.levels) as u64,
        }
    }

    /// Client-side encoding of a batch gradient. `grad` is clipped in place.
    pub fn encode<R: Rng + ?Sized>(
        &self,
        grad: &mut [f64],
        residual: Option<&mut ClientResidual>,
        bound: f64,
        rng: &mut R,
    ) -> Result<Encoded> {
        if grad.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: grad.len() });
        }
        if self.spec.mode == Mode::Baseline {
            return Ok(Encoded {
                payload: Payload::Dense(grad.to_vec()),
                dims: (0..self.dim).collect(),
                norm_estimate: None,
            });
        }
        let grad_norm = clip_l2(grad, bound).min(bound);
        let (dims, mut block) = match (self.spec.subsample, residual) {
            (true, Some(res)) => {
                let dims = select_dims(self.dim, self.selected, rng)?;
                let block = res.extract_and_update(grad, &dims)?;
                (dims, block)
            }
            (true, None) => return Err(invalid("subsampling needs a client residual")),
            (false, _) => ((0..self.dim).collect(), grad.to_vec()),
        };
        let payload_norm = clip_l2(&mut block, bound).min(bound);
        block.resize(self.dtilde, 0.0);
        if let Some(plan) = &self.rotation {
            plan.rotate(&mut block)?;
        }
        let signal = match self.spec.norm_signal {
            NormSignal::GradientL2 => grad_norm,
            NormSignal::PayloadL2 => payload_norm,
            NormSignal::RotatedLinf => block.iter().fold(0.0f64, |a, v| a.max(v.abs())).min(bound),
        };
        // Rotation preserves the l2 norm only up to rounding.
        for v in &mut block {
            *v = v.clamp(-bound, bound);
        }
        let grid = QuantGrid::new(self.spec.levels, bound)?;
        let quantized = quantize(&block, &grid, rng)?;
        let levels = match &self.mechanism {
            Some(mech) => mech.privatize(&quantized, rng)?.levels,
            None => quantized,
        };
        let norm_estimate = self.norm.map(|n| n.estimate(signal, bound, rng)).transpose()?;
        Ok(Encoded { payload: Payload::Levels(levels), dims, norm_estimate })
    }

    /// Server-side decoding of one message, added into the dense `out`.
    pub fn decode_into(&self, encoded: &Encoded, out: &mut [f64]) -> Result<()> {
        let mut z = match &encoded.payload {
            Payload::Dense(z) => z.clone(),
            Payload::Levels(v) => {
                let mut z = v.decode();
                if let Some(mech) = &self.mechanism {
                    let s = mech.inv_m();
                    z.iter_mut().for_each(|x| *x *= s);
                }
                z
            }
        };
        if z.len() != self.dtilde && self.spec.mode != Mode::Baseline {
            return Err(Error::DimensionMismatch { expected: self.dtilde, actual: z.len() });
        }
        if let Some(plan) = &self.rotation {
            plan.inverse_rotate(&mut z)?;
        }
        z.truncate(encoded.dims.len());
        scatter_add(&z, &encoded.dims, out)
    }

    pub fn decode(&self, encoded: &Encoded) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.decode_into(encoded, &mut out)?;
        Ok(out)
    }

    /// Uplink size of one message: payload, index set when coordinates are
    /// subsampled, and one 64-bit scalar when a norm is reported.
    pub fn uplink_bits(&self, encoded: &Encoded) -> u64 {
        let payload = match &encoded.payload {
            Payload::Levels(v) => v.bit_len(),
            Payload::Dense(z) => 64 * z.len() as u64,
        };
        let dims = if self.sends_dims() { index_set_bits(encoded.dims.len()) } else { 0 };
        let scalar = if encoded.norm_estimate.is_some() { 64 } else { 0 };
        payload + dims + scalar
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Levels(QuantizedVector),
    Dense(Vec<f64>),
}

/// What a client uploads.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub payload: Payload,
    pub dims: Vec<usize>,
    pub norm_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMessage {
    pub round: usize,
    pub client: usize,
    pub encoded: Encoded,
    pub uplink_bits: u64,
    pub payload_bits: u64,
    /// Mean batch loss at `theta_t`; diagnostics only, not part of the upload.
    pub batch_loss: f64,
}

#[derive(Debug, Clone)]
pub struct ClientState {
    pub id: usize,
    pub shard: Shard,
    pub residual: ClientResidual,
}

impl ClientState {
    pub fn new(shard: Shard, dim: usize, alpha: f64, beta: f64) -> Result<Self> {
        Ok(ClientState { id: shard.owner, residual: ClientResidual::new(dim, alpha, beta)?, shard })
    }
}

/// Everything a client needs from the server and the run configuration.
#[derive(Debug, Clone, Copy)]
pub struct RoundContext<'a> {
    pub round: usize,
    pub theta: &'a [f64],
    pub bound: f64,
    pub batch_size: usize,
    pub master_seed: u64,
    pub model: &'a Model,
    pub pipeline: &'a Pipeline,
}

/// Batch indices and the raw batch gradient a client computes in a round.
/// Uses the first draws of the client's stream, so it reproduces what
/// [`client_round`] sees.
pub fn client_gradient(state: &ClientState, ctx: &RoundContext) -> Result<(f64, Vec<f64>, crate::rng::SimRng)> {
    let mut rng = stream(ctx.master_seed, Purpose::Client, ctx.round as u64, state.id as u64);
    let batch = sample_batch(state.shard.data.len(), ctx.batch_size, &mut rng);
    let mut grad = vec![0.0; ctx.model.dim()];
    let loss = ctx.model.loss_and_grad(ctx.theta, &state.shard.data, &batch, &mut grad)?;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { client: state.id, round: ctx.round });
    }
    Ok((loss, grad, rng))
}

pub fn client_round(state: &mut ClientState, ctx: &RoundContext) -> Result<RoundMessage> {
    let (batch_loss, mut grad, mut rng) = client_gradient(state, ctx)?;
    let encoded = ctx.pipeline.encode(&mut grad, Some(&mut state.residual), ctx.bound, &mut rng)?;
    Ok(RoundMessage {
        round: ctx.round,
        client: state.id,
        uplink_bits: ctx.pipeline.uplink_bits(&encoded),
        payload_bits: match &encoded.payload {
            Payload::Levels(v) => v.bit_len(),
            Payload::Dense(z) => 64 * z.len() as u64,
        },
        encoded,
        batch_loss,
    })
}

/// Aggregates one round: returns the client-mean update and applies
/// `theta -= lr * update`, then moves the norm bound.
pub fn server_round(
    messages: &[RoundMessage],
    round: usize,
    theta: &mut [f64],
    learning_rate: f64,
    pipeline: &Pipeline,
    bound: &mut NormBoundState,
) -> Result<Vec<f64>> {
    if messages.is_empty() {
        return Err(invalid("no client messages in round"));
    }
    if let Some(m) = messages.iter().find(|m| m.round != round) {
        return Err(Error::MixedRound { expected: round, found: m.round });
    }
    if theta.len() != pipeline.dim() {
        return Err(Error::DimensionMismatch { expected: pipeline.dim(), actual: theta.len() });
    }
    let mut update = vec![0.0; pipeline.dim()];
    for m in messages {
        pipeline.decode_into(&m.encoded, &mut update)?;
    }
    let scale = 1.0 / messages.len() as f64;
    for (t, u) in theta.iter_mut().zip(update.iter_mut()) {
        *u *= scale;
        *t -= learning_rate * *u;
    }
    if pipeline.shrinks() {
        let estimates: Vec<f64> = messages.iter().filter_map(|m| m.encoded.norm_estimate).collect();
        update_bound(bound, &estimates)?;
    }
    Ok(update)
}
