//! Softmax classifiers with hand-written gradients.
//!
//! Parameters live in one flat vector. Logistic regression stores the
//! `classes x features` weight matrix row-major followed by the biases, so
//! `d = features * classes + classes`. The MLP has one `tanh` hidden layer:
//! `W1 (hidden x features), b1, W2 (classes x hidden), b2`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Logistic,
    Mlp { hidden: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    arch: Architecture,
    features: usize,
    classes: usize,
}

/// Writes `softmax(logits)` into `logits` and returns `-log p_label`.
fn softmax_xent(logits: &mut [f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in logits.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    let loss = total.ln() - (logits[label].ln());
    for v in logits.iter_mut() {
        *v /= total;
    }
    loss
}

fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for (k, o) in out.iter_mut().enumerate() {
        let row = &w[k * n..(k + 1) * n];
        *o = b[k] + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
    }
}

impl Model {
    pub fn new(arch: Architecture, features: usize, classes: usize) -> Result<Self> {
        if features == 0 || classes < 2 {
            return Err(invalid(format!("need features >= 1 and classes >= 2, got {features}, {classes}")));
        }
        if let Architecture::Mlp { hidden: 0 } = arch {
            return Err(invalid("MLP needs at least one hidden unit"));
        }
        Ok(Model { arch, features, classes })
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn dim(&self) -> usize {
        let (f, c) = (self.features, self.classes);
        match self.arch {
            Architecture::Logistic => f * c + c,
            Architecture::Mlp { hidden: h } => h * f + h + c * h + c,
        }
    }

    /// Uniform `+-1/sqrt(fan_in)` for every layer's weights and biases.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut uniform = |n: usize, fan_in: usize| -> Vec<f64> {
            let a = 1.0 / (fan_in as f64).sqrt();
            (0..n).map(|_| rng.random_range(-a..=a)).collect::<Vec<f64>>()
        };
        let (f, c) = (self.features, self.classes);
        match self.arch {
            Architecture::Logistic => uniform(f * c + c, f),
            Architecture::Mlp { hidden: h } => {
                let mut theta = uniform(h * f + h, f);
                theta.extend(uniform(c * h + c, h));
                theta
            }
        }
    }

    fn check(&self, theta: &[f64], data: &Dataset) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: theta.len() });
        }
        if data.features() != self.features || data.classes() != self.classes {
            return Err(invalid(format!(
                "dataset is {}x{} but the model expects {}x{}",
                data.features(),
                data.classes(),
                self.features,
                self.classes
            )));
        }
        Ok(())
    }

    /// Class probabilities for one row, written into `probs`. `hidden` is
    /// scratch space for the MLP.
    fn forward(&self, theta: &[f64], x: &[f64], hidden: &mut [f64], probs: &mut [f64]) {
        let (f, c) = (self.features, self.classes);
        match self.arch {
            Architecture::Logistic => {
                let (w, b) = theta.split_at(f * c);
                affine(w, b, x, probs);
            }
            Architecture::Mlp { hidden: h } => {
                let (w1, rest) = theta.split_at(h * f);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(c * h);
                affine(w1, b1, x, hidden);
                hidden.iter_mut().for_each(|v| *v = v.tanh());
                affine(w2, b2, hidden, probs);
            }
        }
    }

    fn hidden_len(&self) -> usize {
        match self.arch {
            Architecture::Logistic => 0,
            Architecture::Mlp { hidden } => hidden,
        }
    }

    /// Mean cross-entropy over `rows` and its gradient, written into `grad`.
    pub fn loss_and_grad(&self, theta: &[f64], data: &Dataset, rows: &[usize], grad: &mut [f64]) -> Result<f64> {
        self.check(theta, data)?;
        if grad.len() != theta.len() {
            return Err(Error::DimensionMismatch { expected: theta.len(), actual: grad.len() });
        }
        if rows.is_empty() {
            return Err(invalid("empty batch"));
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let (f, c) = (self.features, self.classes);
        let scale = 1.0 / rows.len() as f64;
        let mut hidden = vec![0.0; self.hidden_len()];
        let mut delta = vec![0.0; c];
        let mut dh = vec![0.0; self.hidden_len()];
        let mut loss = 0.0;
        for &i in rows {
            let x = data.row(i);
            let y = data.label(i) as usize;
            self.forward(theta, x, &mut hidden, &mut delta);
            loss += softmax_xent(&mut delta, y);
            delta[y] -= 1.0;
            match self.arch {
                Architecture::Logistic => {
                    let (gw, gb) = grad.split_at_mut(f * c);
                    for (k, &dk) in delta.iter().enumerate() {
                        let s = dk * scale;
                        for (g, &xv) in gw[k * f..(k + 1) * f].iter_mut().zip(x) {
                            *g += s * xv;
                        }
                        gb[k] += s;
                    }
                }
                Architecture::Mlp { hidden: h } => {
                    let w2 = &theta[h * f + h..h * f + h + c * h];
                    let (gw1, rest) = grad.split_at_mut(h * f);
                    let (gb1, rest) = rest.split_at_mut(h);
                    let (gw2, gb2) = rest.split_at_mut(c * h);
                    dh.iter_mut().for_each(|v| *v = 0.0);
                    for (k, &dk) in delta.iter().enumerate() {
                        let s = dk * scale;
                        for j in 0..h {
                            gw2[k * h + j] += s * hidden[j];
                            dh[j] += dk * w2[k * h + j];
                        }
                        gb2[k] += s;
                    }
                    for j in 0..h {
                        let da = dh[j] * (1.0 - hidden[j] * hidden[j]) * scale;
                        for (g, &xv) in gw1[j * f..(j + 1) * f].iter_mut().zip(x) {
                            *g += da * xv;
                        }
                        gb1[j] += da;
                    }
                }
            }
        }
        Ok(loss * scale)
    }

    /// Mean cross-entropy over `rows`.
    pub fn loss(&self, theta: &[f64], data: &Dataset, rows: &[usize]) -> Result<f64> {
        self.check(theta, data)?;
        let mut hidden = vec![0.0; self.hidden_len()];
        let mut probs = vec![0.0; self.classes];
        let total: f64 = rows
            .iter()
            .map(|&i| {
                self.forward(theta, data.row(i), &mut hidden, &mut probs);
                softmax_xent(&mut probs, data.label(i) as usize)
            })
            .sum();
        Ok(total / rows.len().max(1) as f64)
    }

    /// Fraction of rows whose arg-max class equals the label.
    pub fn accuracy(&self, theta: &[f64], data: &Dataset) -> Result<f64> {
        self.check(theta, data)?;
        if data.is_empty() {
            return Ok(0.0);
        }
        let mut hidden = vec![0.0; self.hidden_len()];
        let mut logits = vec![0.0; self.classes];
        let correct = (0..data.len())
            .filter(|&i| {
                self.forward(theta, data.row(i), &mut hidden, &mut logits);
                let best = logits
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc })
                    .0;
                best == data.label(i) as usize
            })
            .count();
        Ok(correct as f64 / data.len() as f64)
    }
}
