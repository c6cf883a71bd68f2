//! In-memory datasets, a synthetic generator and client sharding.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::rng::{stream, Purpose, SimRng};

/// Row-major feature matrix plus class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: usize,
    classes: usize,
    inputs: Vec<f64>,
    labels: Vec<u32>,
}

impl Dataset {
    pub fn new(features: usize, classes: usize, inputs: Vec<f64>, labels: Vec<u32>) -> Result<Self> {
        if features == 0 || classes < 2 {
            return Err(invalid(format!("need features >= 1 and classes >= 2, got {features}, {classes}")));
        }
        if inputs.len() != labels.len() * features {
            return Err(Error::DimensionMismatch { expected: labels.len() * features, actual: inputs.len() });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y as usize >= classes) {
            return Err(invalid(format!("label {bad} outside 0..{classes}")));
        }
        Ok(Dataset { features, classes, inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.features..(i + 1) * self.features]
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut inputs = Vec::with_capacity(indices.len() * self.features);
        for &i in indices {
            inputs.extend_from_slice(self.row(i));
        }
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset { features: self.features, classes: self.classes, inputs, labels }
    }

    /// First `n` rows and the rest.
    pub fn split_at(&self, n: usize) -> (Dataset, Dataset) {
        let n = n.min(self.len());
        let head: Vec<usize> = (0..n).collect();
        let tail: Vec<usize> = (n..self.len()).collect();
        (self.subset(&head), self.subset(&tail))
    }

    pub fn truncate(&mut self, n: usize) {
        if n < self.len() {
            self.labels.truncate(n);
            self.inputs.truncate(n * self.features);
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &y in &self.labels {
            counts[y as usize] += 1;
        }
        counts
    }
}

/// One client's slice of the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    pub owner: usize,
    pub data: Dataset,
}

/// Gaussian class clusters: class `c` is centred at `margin * noise_std * u_c`
/// for a random unit vector `u_c`, with isotropic noise of scale `noise_std`.
/// Classes are balanced (sizes differ by at most one) and rows shuffled.
///
/// With `latent_dims = r > 0` the clusters live in `R^r` and are embedded in
/// feature space by a fixed random `features x r` map, so rows span an
/// `r`-dimensional subspace. Image data behaves this way: the within-class
/// variation shares directions with the differences between classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub samples: usize,
    pub features: usize,
    pub classes: usize,
    pub margin: f64,
    pub noise_std: f64,
    pub latent_dims: usize,
}

pub fn synth_data(spec: SynthSpec, seed: u64) -> Result<Dataset> {
    let SynthSpec { samples, features, classes, margin, noise_std, latent_dims } = spec;
    if classes < 2 || features == 0 {
        return Err(invalid(format!("need features >= 1 and classes >= 2, got {features}, {classes}")));
    }
    if !(margin >= 0.0 && noise_std > 0.0) {
        return Err(invalid("margin must be nonnegative and noise_std positive"));
    }
    let mut rng = stream(seed, Purpose::Data, 0, 0);
    let space = if latent_dims == 0 { features } else { latent_dims };
    let centres: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            let u: Vec<f64> = (0..space).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            u.into_iter().map(|v| v / norm * margin * noise_std).collect()
        })
        .collect();
    // Entries of variance 1/r keep the embedding roughly norm-preserving.
    let embed: Vec<f64> = if latent_dims == 0 {
        Vec::new()
    } else {
        let s = 1.0 / (latent_dims as f64).sqrt();
        (0..features * latent_dims)
            .map(|_| s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect()
    };
    let mut labels: Vec<u32> = (0..samples).map(|i| (i % classes) as u32).collect();
    labels.shuffle(&mut rng);
    let mut inputs = Vec::with_capacity(samples * features);
    let mut latent = vec![0.0; space];
    for &y in &labels {
        for (l, &c) in latent.iter_mut().zip(&centres[y as usize]) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *l = c + noise_std * z;
        }
        if latent_dims == 0 {
            inputs.extend_from_slice(&latent);
        } else {
            inputs.extend(
                embed.chunks_exact(latent_dims).map(|row| row.iter().zip(&latent).map(|(a, b)| a * b).sum::<f64>()),
            );
        }
    }
    Dataset::new(features, classes, inputs, labels)
}

/// Random partition into `clients` shards whose sizes differ by at most one.
pub fn partition(data: &Dataset, clients: usize, rng: &mut SimRng) -> Result<Vec<Shard>> {
    if clients == 0 || clients > data.len() {
        return Err(invalid(format!("cannot split {} samples across {clients} clients", data.len())));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(rng);
    let base = data.len() / clients;
    let extra = data.len() % clients;
    let mut start = 0;
    Ok((0..clients)
        .map(|owner| {
            let size = base + usize::from(owner < extra);
            let shard = Shard { owner, data: data.subset(&order[start..start + size]) };
            start += size;
            shard
        })
        .collect())
}

/// `B` distinct row indices of a shard (all rows if it is smaller).
pub fn sample_batch<R: Rng + ?Sized>(len: usize, batch: usize, rng: &mut R) -> Vec<usize> {
    if batch >= len {
        return (0..len).collect();
    }
    rand::seq::index::sample(rng, len, batch).into_vec()
}
