//! The round loop.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{partition, Dataset};
use super::model::{Architecture, Model};
use super::protocol::{client_gradient, client_round, server_round, ClientState, Pipeline, PipelineSpec, RoundContext};
use crate::error::{invalid, Result};
use crate::rng::{stream, Purpose};
use crate::scalardp::NormBoundState;

/// `ceil(N / (M B))`: rounds until every client has seen its shard once in
/// expectation.
pub fn rounds_per_epoch(samples: usize, clients: usize, batch_size: usize) -> usize {
    samples.div_ceil(clients * batch_size).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub architecture: Architecture,
    pub clients: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub initial_bound: f64,
    pub master_seed: u64,
    pub pipeline: PipelineSpec,
}

/// Metrics for one round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    /// One-based.
    pub round: usize,
    /// Epochs completed after this round.
    pub epoch: f64,
    /// Client-mean batch loss at the start of the round.
    pub train_loss: f64,
    pub test_acc: Option<f64>,
    /// Norm bound used in this round.
    pub bound: f64,
    /// Cumulative uplink bits of one client.
    pub uplink_bits_per_client: u64,
}

pub struct Simulation {
    spec: SimulationSpec,
    model: Model,
    pipeline: Pipeline,
    theta: Vec<f64>,
    clients: Vec<ClientState>,
    bound: NormBoundState,
    test: Dataset,
    round: usize,
    rounds_per_epoch: usize,
    uplink: u64,
    last_update: Vec<f64>,
}

impl Simulation {
    pub fn new(spec: SimulationSpec, train: &Dataset, test: Dataset) -> Result<Self> {
        if spec.batch_size == 0 {
            return Err(invalid("batch size must be at least 1"));
        }
        if !(spec.learning_rate > 0.0 && spec.learning_rate.is_finite()) {
            return Err(invalid(format!("learning rate must be positive, got {}", spec.learning_rate)));
        }
        let model = Model::new(spec.architecture, train.features(), train.classes())?;
        let pipeline = Pipeline::new(spec.pipeline, model.dim())?;
        let shards = partition(train, spec.clients, &mut stream(spec.master_seed, Purpose::Partition, 0, 0))?;
        let clients = shards
            .into_iter()
            .map(|s| ClientState::new(s, model.dim(), spec.pipeline.alpha, spec.pipeline.beta))
            .collect::<Result<Vec<_>>>()?;
        let theta = model.init(&mut stream(spec.master_seed, Purpose::Init, 0, 0));
        let bound = NormBoundState::new(spec.initial_bound, spec.initial_bound * 1e-6)?;
        Ok(Simulation {
            rounds_per_epoch: rounds_per_epoch(train.len(), spec.clients, spec.batch_size),
            last_update: vec![0.0; model.dim()],
            spec,
            model,
            pipeline,
            theta,
            clients,
            bound,
            test,
            round: 0,
            uplink: 0,
        })
    }

    pub fn spec(&self) -> &SimulationSpec {
        &self.spec
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn bound(&self) -> &NormBoundState {
        &self.bound
    }

    pub fn clients(&self) -> &[ClientState] {
        &self.clients
    }

    pub fn rounds_done(&self) -> usize {
        self.round
    }

    pub fn rounds_per_epoch(&self) -> usize {
        self.rounds_per_epoch
    }

    /// Client-mean update applied in the last round.
    pub fn last_update(&self) -> &[f64] {
        &self.last_update
    }

    fn context(&self) -> RoundContext<'_> {
        RoundContext {
            round: self.round,
            theta: &self.theta,
            bound: self.bound.current(),
            batch_size: self.spec.batch_size,
            master_seed: self.spec.master_seed,
            model: &self.model,
            pipeline: &self.pipeline,
        }
    }

    /// Each client's batch gradient for the upcoming round, clipped to the
    /// current bound: what an exact, unsubsampled pipeline would average.
    pub fn clipped_gradients(&self) -> Result<Vec<Vec<f64>>> {
        let ctx = self.context();
        self.clients
            .iter()
            .map(|c| {
                let (_, mut g, _) = client_gradient(c, &ctx)?;
                crate::rotation::clip_l2(&mut g, ctx.bound);
                Ok(g)
            })
            .collect()
    }

    pub fn evaluate(&self) -> Result<f64> {
        self.model.accuracy(&self.theta, &self.test)
    }

    pub fn step(&mut self, evaluate: bool) -> Result<RoundRecord> {
        let bound = self.bound.current();
        let messages = {
            let ctx = RoundContext {
                round: self.round,
                theta: &self.theta,
                bound,
                batch_size: self.spec.batch_size,
                master_seed: self.spec.master_seed,
                model: &self.model,
                pipeline: &self.pipeline,
            };
            self.clients.par_iter_mut().map(|c| client_round(c, &ctx)).collect::<Result<Vec<_>>>()?
        };
        let train_loss = messages.iter().map(|m| m.batch_loss).sum::<f64>() / messages.len() as f64;
        self.uplink += messages[0].uplink_bits;
        self.last_update = server_round(
            &messages,
            self.round,
            &mut self.theta,
            self.spec.learning_rate,
            &self.pipeline,
            &mut self.bound,
        )?;
        self.round += 1;
        let test_acc = if evaluate { Some(self.evaluate()?) } else { None };
        Ok(RoundRecord {
            round: self.round,
            epoch: self.round as f64 / self.rounds_per_epoch as f64,
            train_loss,
            test_acc,
            bound,
            uplink_bits_per_client: self.uplink,
        })
    }

    /// Runs `rounds` rounds, evaluating every `eval_every` rounds and after
    /// the last one.
    pub fn train(&mut self, rounds: usize, eval_every: usize) -> Result<Vec<RoundRecord>> {
        let eval_every = eval_every.max(1);
        (0..rounds).map(|i| self.step((i + 1) % eval_every == 0 || i + 1 == rounds)).collect()
    }
}
