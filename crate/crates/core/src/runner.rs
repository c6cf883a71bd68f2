//! Runs a configuration end to end and writes its artifacts.
//!
//! A run directory holds `metrics.csv` (one row per round), `summary.json` and
//! `resolved.toml`, the configuration plus the solved mechanism parameters.
//! Relative output directories are placed under `$SQSGD_OUTPUT_ROOT` when it is
//! set.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DataConfig, RunConfig};
use crate::error::{Error, Result};
use crate::flsim::{
    idx, rounds_per_epoch, synth_data, Dataset, Mode, Pipeline, RoundRecord, Simulation, SimulationSpec,
};
use crate::privquant::PrivacyParams;

pub const OUTPUT_ROOT_ENV: &str = "SQSGD_OUTPUT_ROOT";

/// Where a relative `output_dir` ends up.
pub fn output_dir(config: &RunConfig) -> PathBuf {
    let dir = &config.output_dir;
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir.clone(),
    }
}

/// Train and test sets for a configuration.
pub fn load_data(config: &RunConfig) -> Result<(Dataset, Dataset)> {
    match &config.data {
        DataConfig::Synthetic(s) => {
            let all = synth_data(s.spec(), config.seed)?;
            Ok(all.split_at(s.samples))
        }
        DataConfig::Idx(d) => {
            let paths =
                [&d.train_images, &d.train_labels, &d.test_images, &d.test_labels].map(|p| config.resolve_path(p));
            if let Some(missing) = paths.iter().find(|p| !p.exists()) {
                return Err(Error::MissingDataset(missing.clone()));
            }
            let mut train = idx::load_idx(&paths[0], &paths[1], d.classes)?;
            let mut test = idx::load_idx(&paths[2], &paths[3], d.classes)?;
            if let Some(n) = d.train_limit {
                train.truncate(n);
            }
            if let Some(n) = d.test_limit {
                test.truncate(n);
            }
            Ok((train, test))
        }
    }
}

/// Quantities derived from a configuration before training starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub dim: usize,
    pub selected: usize,
    pub dtilde: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub rounds: usize,
    pub rounds_per_epoch: usize,
    pub payload_bits_per_round: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub privacy: Option<PrivacyParams>,
}

#[derive(Serialize)]
struct Snapshot<'a> {
    #[serde(flatten)]
    config: &'a RunConfig,
    resolved: &'a Resolved,
}

/// A configuration with its data loaded and its simulation built.
pub struct Prepared {
    pub simulation: Simulation,
    pub resolved: Resolved,
}

pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    config.validate()?;
    let (train, test) = load_data(config)?;
    let t = &config.training;
    let spec = SimulationSpec {
        architecture: config.model,
        clients: t.clients,
        batch_size: t.batch_size,
        learning_rate: t.learning_rate,
        initial_bound: t.initial_bound,
        master_seed: config.seed,
        pipeline: config.pipeline_spec(),
    };
    let rpe = rounds_per_epoch(train.len(), t.clients, t.batch_size);
    let (train_samples, test_samples) = (train.len(), test.len());
    let simulation = Simulation::new(spec, &train, test)?;
    let pipeline: &Pipeline = simulation.pipeline();
    let resolved = Resolved {
        dim: pipeline.dim(),
        selected: pipeline.selected(),
        dtilde: pipeline.dtilde(),
        train_samples,
        test_samples,
        rounds: t.rounds.unwrap_or(t.epochs * rpe),
        rounds_per_epoch: rpe,
        payload_bits_per_round: pipeline.payload_bits(),
        privacy: pipeline.privacy().cloned(),
    };
    Ok(Prepared { simulation, resolved })
}

/// `resolved.toml` contents for a configuration.
pub fn resolved_toml(config: &RunConfig, resolved: &Resolved) -> Result<String> {
    Ok(toml::to_string(&Snapshot { config, resolved })?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub dim: usize,
    pub dtilde: usize,
    pub levels: usize,
    pub sampling_ratio: f64,
    pub epsilon: Option<f64>,
    pub rounds: usize,
    pub rounds_per_epoch: usize,
    pub final_test_acc: f64,
    pub best_test_acc: f64,
    pub final_train_loss: f64,
    pub initial_bound: f64,
    pub final_bound: f64,
    pub bound_monotone: bool,
    pub payload_bits_per_round: u64,
    pub uplink_bits_per_client: u64,
    pub privacy: Option<PrivacyParams>,
    pub seconds: f64,
}

#[derive(Serialize)]
struct MetricsRow {
    round: usize,
    epoch: f64,
    train_loss: f64,
    test_acc: Option<f64>,
    #[serde(rename = "U_t")]
    bound: f64,
    uplink_bits_per_client: u64,
}

pub fn write_metrics(path: &Path, records: &[RoundRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(MetricsRow {
            round: r.round,
            epoch: r.epoch,
            train_loss: r.train_loss,
            test_acc: r.test_acc,
            bound: r.bound,
            uplink_bits_per_client: r.uplink_bits_per_client,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `config` and writes its artifacts under [`output_dir`].
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    run_in(config, &output_dir(config))
}

/// Runs `config` with artifacts in `out`.
pub fn run_in(config: &RunConfig, out: &Path) -> Result<RunSummary> {
    let start = Instant::now();
    let Prepared { mut simulation, resolved } = prepare(config)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("resolved.toml"), resolved_toml(config, &resolved)?)?;
    let records = simulation.train(resolved.rounds, config.training.eval_every)?;
    write_metrics(&out.join("metrics.csv"), &records)?;
    let last = records.last().expect("at least one round");
    let history = simulation.bound().history();
    let summary = RunSummary {
        mode: config.mechanism.mode,
        dim: resolved.dim,
        dtilde: resolved.dtilde,
        levels: config.mechanism.levels,
        sampling_ratio: config.mechanism.sampling_ratio,
        epsilon: (config.mechanism.mode == Mode::Sqsgd).then_some(config.privacy.epsilon),
        rounds: resolved.rounds,
        rounds_per_epoch: resolved.rounds_per_epoch,
        final_test_acc: last.test_acc.unwrap_or(f64::NAN),
        best_test_acc: records.iter().filter_map(|r| r.test_acc).fold(0.0, f64::max),
        final_train_loss: last.train_loss,
        initial_bound: history[0],
        final_bound: simulation.bound().current(),
        bound_monotone: history.windows(2).all(|w| w[1] <= w[0]),
        payload_bits_per_round: resolved.payload_bits_per_round,
        uplink_bits_per_client: last.uplink_bits_per_client,
        privacy: resolved.privacy.clone(),
        seconds: start.elapsed().as_secs_f64(),
    };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Values are bits per level; `K = 2^bits`.
    QuantizationBits,
    Epsilon,
    SamplingRatio,
    /// Values are level counts `K`; the sampling ratio is rescaled so that
    /// `r log2 K` stays at its base value.
    BitsVsRatio,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantization_bits" | "bits" => Ok(SweepAxis::QuantizationBits),
            "epsilon" => Ok(SweepAxis::Epsilon),
            "sampling_ratio" | "ratio" => Ok(SweepAxis::SamplingRatio),
            "bits-vs-ratio" | "bits_vs_ratio" => Ok(SweepAxis::BitsVsRatio),
            other => Err(Error::Config(format!(
                "unknown sweep axis {other:?}; expected quantization_bits, epsilon, sampling_ratio or bits-vs-ratio"
            ))),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::QuantizationBits => "quantization_bits",
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::SamplingRatio => "sampling_ratio",
            SweepAxis::BitsVsRatio => "bits-vs-ratio",
        }
    }

    /// The base configuration moved to grid point `value`.
    pub fn apply(self, base: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut c = base.clone();
        let whole = |v: f64, what: &str| -> Result<usize> {
            if v.fract() == 0.0 && (1.0..64.0 * 1024.0).contains(&v) {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{what} must be a positive integer, got {v}")))
            }
        };
        match self {
            SweepAxis::QuantizationBits => {
                let bits = whole(value, "quantization bits")?;
                if bits > 20 {
                    return Err(Error::Config(format!("{bits} bits per level is too many")));
                }
                c.mechanism.levels = 1 << bits;
            }
            SweepAxis::Epsilon => c.privacy.epsilon = value,
            SweepAxis::SamplingRatio => c.mechanism.sampling_ratio = value,
            SweepAxis::BitsVsRatio => {
                let levels = whole(value, "level count")?;
                if levels < 2 {
                    return Err(Error::Config("level count must be at least 2".into()));
                }
                let budget = base.mechanism.sampling_ratio * (base.mechanism.levels as f64).log2();
                c.mechanism.levels = levels;
                c.mechanism.sampling_ratio = budget / (levels as f64).log2();
            }
        }
        c.output_dir = base.output_dir.join(format!("{}={value}", self.name()));
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: String,
    pub value: f64,
    pub levels: usize,
    pub sampling_ratio: f64,
    pub epsilon: f64,
    pub dtilde: usize,
    pub rounds: usize,
    pub final_test_acc: f64,
    pub best_test_acc: f64,
    pub final_train_loss: f64,
    pub final_bound: f64,
    pub payload_bits_per_round: u64,
    pub uplink_bits_per_client: u64,
}

/// One run per value, all with the base seed, plus `comparison.csv` in the
/// base output directory. `jobs` bounds the number of concurrent runs; each
/// run's result does not depend on it.
pub fn sweep(base: &RunConfig, axis: SweepAxis, values: &[f64], jobs: usize) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let configs = values.iter().map(|&v| axis.apply(base, v)).collect::<Result<Vec<_>>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let summaries = pool.install(|| configs.par_iter().map(run).collect::<Result<Vec<_>>>())?;
    let points: Vec<SweepPoint> = values
        .iter()
        .zip(&configs)
        .zip(summaries)
        .map(|((&value, c), s)| SweepPoint {
            axis: axis.name().to_string(),
            value,
            levels: c.mechanism.levels,
            sampling_ratio: c.mechanism.sampling_ratio,
            epsilon: c.privacy.epsilon,
            dtilde: s.dtilde,
            rounds: s.rounds,
            final_test_acc: s.final_test_acc,
            best_test_acc: s.best_test_acc,
            final_train_loss: s.final_train_loss,
            final_bound: s.final_bound,
            payload_bits_per_round: s.payload_bits_per_round,
            uplink_bits_per_client: s.uplink_bits_per_client,
        })
        .collect();
    let dir = output_dir(base);
    fs::create_dir_all(&dir)?;
    let mut w = csv::Writer::from_path(dir.join(format!("comparison-{}.csv", axis.name())))?;
    for p in &points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_names_parse() {
        for axis in [SweepAxis::QuantizationBits, SweepAxis::Epsilon, SweepAxis::SamplingRatio, SweepAxis::BitsVsRatio]
        {
            assert_eq!(axis.name().parse::<SweepAxis>().unwrap(), axis);
        }
        assert!("learning_rate".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn bits_axis_maps_to_levels() {
        let base = RunConfig::default();
        let levels: Vec<usize> = [1.0, 3.0, 5.0]
            .iter()
            .map(|&b| SweepAxis::QuantizationBits.apply(&base, b).unwrap().mechanism.levels)
            .collect();
        assert_eq!(levels, vec![2, 8, 32]);
        assert!(SweepAxis::QuantizationBits.apply(&base, 1.5).is_err());
    }

    #[test]
    fn bits_vs_ratio_holds_the_product() {
        let mut base = RunConfig::default();
        base.mechanism.levels = 2;
        base.mechanism.sampling_ratio = 0.7;
        for k in [2.0, 8.0, 32.0, 128.0] {
            let c = SweepAxis::BitsVsRatio.apply(&base, k).unwrap();
            let product = c.mechanism.sampling_ratio * (c.mechanism.levels as f64).log2();
            assert!((product - 0.7).abs() < 1e-12);
        }
        base.mechanism.sampling_ratio = 1.0;
        base.mechanism.levels = 8;
        assert!(SweepAxis::BitsVsRatio.apply(&base, 2.0).is_err());
    }
}
