use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::network::{DropoutPlan, Gradient, Label, Masks, NetworkParams};
use crate::domain::GrayImage;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub patch: GrayImage,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Classical momentum coefficient; 0 gives plain mini-batch SGD.
    pub momentum: f64,
    pub seed: u64,
    /// Layers below this index are frozen.
    pub trainable_from: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 30, learning_rate: 0.01, batch_size: 32, momentum: 0.9, seed: 0, trainable_from: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Training accuracy under the dropout-active passes of that epoch.
    pub accuracy: f64,
}

/// Loss, probabilities and gradient of one example.
type Step<T> = (T, [T; 2], Gradient<T>);

/// Mini-batch SGD on mean cross-entropy with dropout active.
///
/// Epoch `e` shuffles the data with ChaCha8 seeded by
/// `derive_indexed(derive_seed(seed, "shuffle"), e)`; the example at position `k`
/// of that epoch uses the dropout plan `(derive_seed(seed, "dropout"), e * N + k)`.
pub fn train<T: Scalar>(
    net: &NetworkParams<T>,
    data: &[TrainingExample],
    cfg: &TrainConfig,
) -> Result<(NetworkParams<T>, Vec<EpochStats>)> {
    if data.is_empty() {
        return Err(Error::Contract("training data is empty".into()));
    }
    if !data.iter().any(|d| d.label == Label::Minutia) || !data.iter().any(|d| d.label == Label::NonMinutia) {
        return Err(Error::Contract("training data must contain both labels".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Contract("batch size must be positive".into()));
    }
    let inputs: Vec<Vec<T>> = data.iter().map(|d| net.input_from_patch(&d.patch)).collect::<Result<_>>()?;

    let mut net = net.clone();
    let mut velocity = Gradient::zeros_like(&net);
    let shuffle_seed = rng::derive_seed(cfg.seed, "shuffle");
    let dropout_seed = rng::derive_seed(cfg.seed, "dropout");
    let lr = T::lit(cfg.learning_rate);
    let mu = T::lit(cfg.momentum);
    let n = data.len();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::chacha(rng::derive_indexed(shuffle_seed, epoch as u64)));
        let mut loss_sum = 0.0;
        let mut correct = 0usize;

        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let base = epoch * n + b * cfg.batch_size;
            let results: Vec<Result<Step<T>>> = chunk
                .par_iter()
                .enumerate()
                .map(|(k, &idx)| {
                    let plan = DropoutPlan::new(dropout_seed, (base + k) as u64);
                    net.loss_and_gradient(&inputs[idx], data[idx].label, &Masks::Plan(plan), cfg.trainable_from)
                })
                .collect();
            let mut total = Gradient::zeros_like(&net);
            for (r, &idx) in results.into_iter().zip(chunk) {
                let (loss, probs, g) = r?;
                let loss = loss.as_f64();
                if !loss.is_finite() {
                    return Err(Error::Training(format!(
                        "non-finite loss at epoch {epoch}, batch {b} with learning rate {}; lower the learning rate",
                        cfg.learning_rate
                    )));
                }
                loss_sum += loss;
                let predicted = if probs[0] >= probs[1] { Label::Minutia } else { Label::NonMinutia };
                correct += usize::from(predicted == data[idx].label);
                total.add_assign(&g);
            }
            let scale = T::one() / T::lit(chunk.len() as f64);
            for (i, layer) in net.layers_mut().iter_mut().enumerate().skip(cfg.trainable_from) {
                step(&mut layer.weights, &total.weights[i], &mut velocity.weights[i], scale, lr, mu);
                step(&mut layer.biases, &total.biases[i], &mut velocity.biases[i], scale, lr, mu);
            }
        }
        let stats = EpochStats { epoch, mean_loss: loss_sum / n as f64, accuracy: correct as f64 / n as f64 };
        log::debug!("epoch {epoch}: loss {:.5} acc {:.4}", stats.mean_loss, stats.accuracy);
        history.push(stats);
    }
    Ok((net, history))
}

fn step<T: Scalar>(params: &mut [T], grad: &[T], vel: &mut [T], scale: T, lr: T, mu: T) {
    for ((p, g), v) in params.iter_mut().zip(grad).zip(vel) {
        *v = mu * *v - lr * scale * *g;
        *p = *p + *v;
    }
}

/// Deterministic-pass accuracy.
pub fn accuracy<T: Scalar>(net: &NetworkParams<T>, data: &[TrainingExample]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let hits: Vec<bool> = data
        .par_iter()
        .map(|d| {
            net.forward(&d.patch).map(|p| {
                let predicted = if p[0] >= p[1] { Label::Minutia } else { Label::NonMinutia };
                predicted == d.label
            })
        })
        .collect::<Result<_>>()?;
    Ok(hits.iter().filter(|h| **h).count() as f64 / data.len() as f64)
}
