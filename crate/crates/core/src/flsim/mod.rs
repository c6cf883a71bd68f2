//! Cross-silo federated simulation.

pub mod data;
pub mod idx;
pub mod model;
pub mod protocol;
pub mod train;

pub use data::{partition, synth_data, Dataset, Shard, SynthSpec};
pub use idx::{load_idx, load_images, load_labels};
pub use model::{Architecture, Model};
pub use protocol::{
    client_round, server_round, ClientState, Encoded, Mode, NormSignal, Payload, Pipeline, PipelineSpec, RoundContext,
    RoundMessage,
};
pub use train::{rounds_per_epoch, RoundRecord, Simulation, SimulationSpec};
