use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{backward, bce_loss, forward_train};
use super::params::NetworkParameters;
use super::{NetError, Scalar};
use crate::embedding::{EmbeddingTable, EncodedSequence};
use crate::labels::LabelVector;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Rescale each batch gradient to at most this global L2 norm.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 42,
            clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.batch_size == 0 {
            return Err(NetError::InvalidConfig("batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NetError::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(NetError::InvalidConfig(format!("clip norm {c} must be positive")));
            }
        }
        Ok(())
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: i32,
    m: NetworkParameters<T>,
    v: NetworkParameters<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(params: &NetworkParameters<T>, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut NetworkParameters<T>, grad: &NetworkParameters<T>) {
        self.step += 1;
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let one = T::one();
        let c1 = T::of(1.0 - self.beta1.powi(self.step));
        let c2 = T::of(1.0 - self.beta2.powi(self.step));
        let lr = T::of(self.learning_rate);
        let eps = T::of(self.epsilon);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for ((((_, p), (_, g)), (_, m)), (_, v)) in tensors {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub params: NetworkParameters<T>,
    /// Mean training-mode loss per epoch.
    pub epoch_losses: Vec<f64>,
    /// Examples skipped because they encode to zero tokens.
    pub skipped_empty: usize,
}

fn accumulate<T: Scalar>(into: &mut NetworkParameters<T>, grad: &NetworkParameters<T>) {
    for ((_, a), (_, g)) in into.tensors_mut().into_iter().zip(grad.tensors()) {
        for (x, y) in a.iter_mut().zip(g) {
            *x += *y;
        }
    }
}

fn scale<T: Scalar>(grad: &mut NetworkParameters<T>, factor: T) {
    for (_, t) in grad.tensors_mut() {
        for x in t.iter_mut() {
            *x *= factor;
        }
    }
}

fn global_norm<T: Scalar>(grad: &NetworkParameters<T>) -> f64 {
    grad.tensors()
        .iter()
        .flat_map(|(_, t)| t.iter())
        .map(|v| {
            let v = v.to_f64().unwrap_or(f64::NAN);
            v * v
        })
        .sum::<f64>()
        .sqrt()
}

/// Mini-batch Adam training.
///
/// Sample order and dropout masks come from one ChaCha stream seeded by
/// `config.seed`, so identical inputs give bit-identical parameters.
/// Examples with no valid tokens are skipped.
pub fn train<T: Scalar>(
    dataset: &[(EncodedSequence, LabelVector)],
    table: &EmbeddingTable,
    params: NetworkParameters<T>,
    config: &TrainConfig,
) -> Result<TrainOutcome<T>, NetError> {
    config.validate()?;
    params.validate()?;
    let usable: Vec<usize> = (0..dataset.len())
        .filter(|&i| dataset[i].0.true_length() > 0)
        .collect();
    if usable.is_empty() {
        return Err(NetError::EmptyDataset);
    }
    let skipped_empty = dataset.len() - usable.len();

    let mut params = params;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(&params, config.learning_rate);
    let mut order = usable;
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grad = params.zeros_like();
            for &i in batch {
                let (seq, target) = &dataset[i];
                let cache = forward_train(seq, table, &params, &mut rng)?;
                let loss = bce_loss(&cache.scores(), target);
                if !loss.is_finite() {
                    return Err(NetError::NonFiniteLoss { epoch, sample: i });
                }
                epoch_loss += loss;
                accumulate(&mut grad, &backward(&cache, &params, target)?);
            }
            scale(&mut grad, T::of(1.0 / batch.len() as f64));
            if let Some(max_norm) = config.clip_norm {
                let norm = global_norm(&grad);
                if norm > max_norm {
                    scale(&mut grad, T::of(max_norm / norm));
                }
            }
            adam.step(&mut params, &grad);
        }
        if !params.all_finite() {
            return Err(NetError::NonFiniteLoss { epoch, sample: usize::MAX });
        }
        epoch_losses.push(epoch_loss / order.len() as f64);
    }
    Ok(TrainOutcome {
        params,
        epoch_losses,
        skipped_empty,
    })
}
