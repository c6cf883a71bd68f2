//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! output_dir = "runs/default"
//!
//! [data]
//! source = "synthetic"        # or "idx" with train_images/train_labels/...
//! samples = 10000
//!
//! [model]
//! kind = "logistic"           # or "mlp" with hidden = 64
//!
//! [training]
//! clients = 10
//! batch_size = 32
//! epochs = 5
//! learning_rate = 0.001
//!
//! [privacy]
//! epsilon = 400.0
//! epsilon2 = 10.0
//! shrinkage = true
//!
//! [mechanism]
//! mode = "sqsgd"              # "quantize_only" | "baseline"
//! levels = 16
//! sampling_ratio = 0.005
//! ```
//!
//! Every field has a default; an empty file is the reference configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flsim::{Architecture, Mode, NormSignal, PipelineSpec, SynthSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub model: Architecture,
    pub training: TrainingConfig,
    pub privacy: PrivacyConfig,
    pub mechanism: MechanismConfig,
    /// Directory relative data paths are resolved against; set by
    /// [`RunConfig::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            output_dir: PathBuf::from("runs/default"),
            data: DataConfig::default(),
            model: Architecture::Logistic,
            training: TrainingConfig::default(),
            privacy: PrivacyConfig::default(),
            mechanism: MechanismConfig::default(),
            base_dir: PathBuf::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataConfig {
    Synthetic(SyntheticData),
    Idx(IdxData),
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::Synthetic(SyntheticData::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticData {
    pub samples: usize,
    pub test_samples: usize,
    pub features: usize,
    pub classes: usize,
    pub margin: f64,
    pub noise_std: f64,
    /// 0 for isotropic clusters in feature space.
    pub latent_dims: usize,
}

impl Default for SyntheticData {
    fn default() -> Self {
        SyntheticData {
            samples: 10_000,
            test_samples: 2_000,
            features: 784,
            classes: 10,
            margin: 3.2,
            noise_std: 1.0,
            latent_dims: 20,
        }
    }
}

impl SyntheticData {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec {
            samples: self.samples + self.test_samples,
            features: self.features,
            classes: self.classes,
            margin: self.margin,
            noise_std: self.noise_std,
            latent_dims: self.latent_dims,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdxData {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    #[serde(default = "ten")]
    pub classes: usize,
    /// Keep only the first `n` training rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_limit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_limit: Option<usize>,
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub clients: usize,
    pub batch_size: usize,
    pub epochs: usize,
    /// Overrides `epochs` when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    pub learning_rate: f64,
    pub alpha: f64,
    pub beta: f64,
    pub initial_bound: f64,
    pub eval_every: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            clients: 10,
            batch_size: 32,
            epochs: 5,
            rounds: None,
            learning_rate: 0.001,
            alpha: 1.0,
            beta: 1.0,
            initial_bound: 10.0,
            eval_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivacyConfig {
    /// Total budget `epsilon = epsilon1 + epsilon2`.
    pub epsilon: f64,
    /// Budget of the norm report; ignored without shrinkage.
    pub epsilon2: f64,
    pub shrinkage: bool,
    pub norm_signal: NormSignal,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        PrivacyConfig { epsilon: 400.0, epsilon2: 10.0, shrinkage: true, norm_signal: NormSignal::GradientL2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechanismConfig {
    pub mode: Mode,
    pub levels: usize,
    pub sampling_ratio: f64,
    pub rotation: bool,
    pub subsample: bool,
    /// Seed of the public rotation signs; the run seed when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotation_seed: Option<u64>,
}

impl Default for MechanismConfig {
    fn default() -> Self {
        MechanismConfig {
            mode: Mode::Sqsgd,
            levels: 16,
            sampling_ratio: 0.005,
            rotation: true,
            subsample: true,
            rotation_seed: None,
        }
    }
}

fn fail(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Parses and validates `path`; relative data paths resolve against its
    /// directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Checks every constraint the pipeline would otherwise reject later.
    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(fail("seed must fit in a signed 64-bit integer"));
        }
        match &self.data {
            DataConfig::Synthetic(s) => {
                if s.classes < 2 || s.features == 0 {
                    return Err(fail("synthetic data needs classes >= 2 and features >= 1"));
                }
                if s.test_samples == 0 {
                    return Err(fail("synthetic data needs test_samples >= 1"));
                }
                if !(s.margin >= 0.0 && s.noise_std > 0.0) {
                    return Err(fail("synthetic data needs margin >= 0 and noise_std > 0"));
                }
            }
            DataConfig::Idx(d) => {
                if d.classes < 2 || d.classes > 256 {
                    return Err(fail("idx data needs 2 <= classes <= 256"));
                }
            }
        }
        if let Architecture::Mlp { hidden: 0 } = self.model {
            return Err(fail("mlp needs hidden >= 1"));
        }
        let t = &self.training;
        if t.clients == 0 || t.batch_size == 0 || t.eval_every == 0 {
            return Err(fail("clients, batch_size and eval_every must be at least 1"));
        }
        if t.rounds.unwrap_or(t.epochs) == 0 {
            return Err(fail("training needs at least one round"));
        }
        if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
            return Err(fail("learning_rate must be positive"));
        }
        if !(t.initial_bound > 0.0 && t.initial_bound.is_finite()) {
            return Err(fail("initial_bound must be positive"));
        }
        if !t.alpha.is_finite() || !t.beta.is_finite() {
            return Err(fail("alpha and beta must be finite"));
        }
        let m = &self.mechanism;
        if m.levels < 2 {
            return Err(fail(format!("levels must be at least 2, got {}", m.levels)));
        }
        if !(m.sampling_ratio > 0.0 && m.sampling_ratio <= 1.0) {
            return Err(fail(format!("sampling_ratio must lie in (0, 1], got {}", m.sampling_ratio)));
        }
        let p = &self.privacy;
        if m.mode == Mode::Sqsgd {
            if !(p.epsilon > 0.0 && p.epsilon.is_finite()) {
                return Err(fail("epsilon must be positive"));
            }
            if p.shrinkage && !(p.epsilon2 > 0.0 && p.epsilon2 < p.epsilon) {
                return Err(fail(format!(
                    "shrinkage needs 0 < epsilon2 < epsilon, got epsilon2 = {} and epsilon = {}",
                    p.epsilon2, p.epsilon
                )));
            }
        }
        Ok(())
    }

    pub fn pipeline_spec(&self) -> PipelineSpec {
        let p = &self.privacy;
        let m = &self.mechanism;
        PipelineSpec {
            mode: m.mode,
            levels: m.levels,
            sampling_ratio: m.sampling_ratio,
            rotation: m.rotation && m.mode != Mode::Baseline,
            subsample: m.subsample && m.mode != Mode::Baseline,
            alpha: self.training.alpha,
            beta: self.training.beta,
            epsilon: p.epsilon,
            epsilon2: if p.shrinkage { p.epsilon2 } else { 0.0 },
            shrinkage: p.shrinkage && m.mode != Mode::Baseline,
            norm_signal: p.norm_signal,
            rotation_seed: m.rotation_seed.unwrap_or(self.seed),
        }
    }
}
