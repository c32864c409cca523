//! Small dense models with hand-written backpropagation.

use super::data::Sample;
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Architecture {
    /// `ŷ = W x`, squared loss against the one-hot label.
    Linear { inputs: usize, outputs: usize },
    /// `tanh` hidden layer, softmax cross-entropy output.
    Mlp { inputs: usize, hidden: usize, classes: usize },
}

impl Architecture {
    pub fn param_count(&self) -> usize {
        match *self {
            Architecture::Linear { inputs, outputs } => inputs * outputs,
            Architecture::Mlp { inputs, hidden, classes } => hidden * inputs + hidden + classes * hidden + classes,
        }
    }

    pub fn inputs(&self) -> usize {
        match *self {
            Architecture::Linear { inputs, .. } | Architecture::Mlp { inputs, .. } => inputs,
        }
    }

    pub fn classes(&self) -> usize {
        match *self {
            Architecture::Linear { outputs, .. } => outputs,
            Architecture::Mlp { classes, .. } => classes,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Architecture::Linear { inputs, outputs } => inputs > 0 && outputs > 0,
            Architecture::Mlp { inputs, hidden, classes } => inputs > 0 && hidden > 0 && classes > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("layer sizes must be positive: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    arch: Architecture,
    weights: Vec<f64>,
}

impl Model {
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        Ok(Model {
            arch,
            weights: vec![0.0; arch.param_count()],
        })
    }

    pub fn from_weights(arch: Architecture, weights: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if weights.len() != arch.param_count() {
            return Err(Error::invalid(format!(
                "{} weights for an architecture with {} parameters",
                weights.len(),
                arch.param_count()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("weights must be finite"));
        }
        Ok(Model { arch, weights })
    }

    /// Xavier-uniform weight matrices, zero biases.
    pub fn xavier<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Result<Self> {
        let mut model = Model::zeros(arch)?;
        let mut fill = |w: &mut [f64], fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            w.iter_mut().for_each(|v| *v = dist.sample(rng));
        };
        match arch {
            Architecture::Linear { inputs, outputs } => fill(&mut model.weights, inputs, outputs),
            Architecture::Mlp { inputs, hidden, classes } => {
                let (w1, rest) = model.weights.split_at_mut(hidden * inputs);
                fill(w1, inputs, hidden);
                fill(&mut rest[hidden..hidden + classes * hidden], hidden, classes);
            }
        }
        Ok(model)
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn param_count(&self) -> usize {
        self.weights.len()
    }

    /// `w ← w − η g`.
    pub fn apply_update(&mut self, gradient: &[f64], learning_rate: f64) -> Result<()> {
        if gradient.len() != self.weights.len() {
            return Err(Error::invalid(format!(
                "gradient of length {} for {} weights",
                gradient.len(),
                self.weights.len()
            )));
        }
        for (w, g) in self.weights.iter_mut().zip(gradient) {
            *w -= learning_rate * g;
        }
        Ok(())
    }

    fn check_sample(&self, s: &Sample) -> Result<()> {
        if s.features.len() != self.arch.inputs() {
            return Err(Error::invalid(format!(
                "sample has {} features, model expects {}",
                s.features.len(),
                self.arch.inputs()
            )));
        }
        if s.label >= self.arch.classes() {
            return Err(Error::invalid(format!(
                "label {} out of range for {} classes",
                s.label,
                self.arch.classes()
            )));
        }
        Ok(())
    }

    /// Output scores and, for the MLP, the hidden activations.
    fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self.arch {
            Architecture::Linear { inputs, outputs } => {
                let out = (0..outputs).map(|o| dot(&self.weights[o * inputs..(o + 1) * inputs], x)).collect();
                (out, Vec::new())
            }
            Architecture::Mlp { inputs, hidden, classes } => {
                let (w1, rest) = self.weights.split_at(hidden * inputs);
                let (b1, rest) = rest.split_at(hidden);
                let (w2, b2) = rest.split_at(classes * hidden);
                let a: Vec<f64> = (0..hidden)
                    .map(|h| (dot(&w1[h * inputs..(h + 1) * inputs], x) + b1[h]).tanh())
                    .collect();
                let z = (0..classes).map(|c| dot(&w2[c * hidden..(c + 1) * hidden], &a) + b2[c]).collect();
                (z, a)
            }
        }
    }

    /// Mean loss over the batch and its gradient with respect to the weights.
    pub fn loss_and_grad(&self, batch: &[&Sample]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let mut grad = vec![0.0; self.weights.len()];
        let mut loss = 0.0;
        for s in batch {
            self.check_sample(s)?;
            let x = &s.features;
            let (out, a) = self.forward(x);
            match self.arch {
                Architecture::Linear { inputs, .. } => {
                    for (o, &yhat) in out.iter().enumerate() {
                        let r = yhat - if o == s.label { 1.0 } else { 0.0 };
                        loss += 0.5 * r * r;
                        axpy(&mut grad[o * inputs..(o + 1) * inputs], r, x);
                    }
                }
                Architecture::Mlp { inputs, hidden, classes } => {
                    let p = softmax(&out);
                    loss -= p[s.label].max(f64::MIN_POSITIVE).ln();
                    let w2 = &self.weights[hidden * inputs + hidden..][..classes * hidden];
                    let (gw1, rest) = grad.split_at_mut(hidden * inputs);
                    let (gb1, rest) = rest.split_at_mut(hidden);
                    let (gw2, gb2) = rest.split_at_mut(classes * hidden);
                    let mut da = vec![0.0; hidden];
                    for c in 0..classes {
                        let dz = p[c] - if c == s.label { 1.0 } else { 0.0 };
                        gb2[c] += dz;
                        axpy(&mut gw2[c * hidden..(c + 1) * hidden], dz, &a);
                        axpy(&mut da, dz, &w2[c * hidden..(c + 1) * hidden]);
                    }
                    for h in 0..hidden {
                        let dz = da[h] * (1.0 - a[h] * a[h]);
                        gb1[h] += dz;
                        axpy(&mut gw1[h * inputs..(h + 1) * inputs], dz, x);
                    }
                }
            }
        }
        let scale = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        Ok((loss * scale, grad))
    }

    /// Loss of a single sample and the predicted class, without gradients.
    pub fn loss_and_predict(&self, s: &Sample) -> Result<(f64, usize)> {
        self.check_sample(s)?;
        let (out, _) = self.forward(&s.features);
        let loss = match self.arch {
            Architecture::Linear { .. } => out
                .iter()
                .enumerate()
                .map(|(o, v)| 0.5 * (v - if o == s.label { 1.0 } else { 0.0 }).powi(2))
                .sum(),
            Architecture::Mlp { .. } => -softmax(&out)[s.label].max(f64::MIN_POSITIVE).ln(),
        };
        Ok((loss, argmax(&out)))
    }

    /// Index of the largest output; ties go to the lowest index.
    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        if features.len() != self.arch.inputs() {
            return Err(Error::invalid(format!(
                "{} features, model expects {}",
                features.len(),
                self.arch.inputs()
            )));
        }
        Ok(argmax(&self.forward(features).0))
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}
