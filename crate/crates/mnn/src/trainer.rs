//! Adam training of spring constants under box constraints.
//!
//! One epoch is one full-batch gradient over the training split followed by
//! one Adam step and a projection onto `[k_min, k_max]`. Training is
//! sequential and fully deterministic for a given seed: identical configs
//! reproduce identical records bit for bit.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adjoint::batch_gradient_with_operator;
use crate::error::{Error, Result};
use crate::lattice::Network;
use crate::losses::LossSpec;
use crate::statics::{DofMap, LoadCase, Operator};
use crate::tasks::{Sample, Task};

/// First/second moment estimates and step counter of the Adam optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(n: usize, alpha: f64) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            alpha,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// One bias-corrected Adam update, clamped to the box `bounds`.
    pub fn step(&mut self, k: &[f64], grad: &[f64], bounds: (f64, f64)) -> Result<Vec<f64>> {
        if k.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::DimensionMismatch(format!(
                "adam state holds {} parameters, got k of {} and grad of {}",
                self.m.len(),
                k.len(),
                grad.len()
            )));
        }
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        let (lo, hi) = bounds;
        let mut out = Vec::with_capacity(k.len());
        for i in 0..k.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / b1t;
            let v_hat = self.v[i] / b2t;
            out.push((k[i] - self.alpha * m_hat / (v_hat.sqrt() + self.epsilon)).clamp(lo, hi));
        }
        Ok(out)
    }
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}
fn default_split() -> f64 {
    0.7
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Learning rate, N/m per step.
    pub alpha: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Overrides the network's own stiffness bounds when set.
    #[serde(default)]
    pub k_bounds: Option<(f64, f64)>,
    pub seed: u64,
    /// Fraction of the dataset used for training; the rest is the test set.
    #[serde(default = "default_split")]
    pub split: f64,
}

impl TrainConfig {
    pub fn new(epochs: usize, alpha: f64, seed: u64) -> Self {
        TrainConfig {
            epochs,
            alpha,
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_epsilon(),
            k_bounds: None,
            seed,
            split: default_split(),
        }
    }
}

/// Per-epoch observations. `loss_train` is the batch loss that produced the
/// epoch's gradient; `loss_test` and `metric` are evaluated on the updated
/// stiffness.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub loss_train: f64,
    pub loss_test: f64,
    pub metric: f64,
}

/// Everything a run produced: the history, the final spring constants, the
/// gradient-path solve count, and the exact train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub history: Vec<EpochStats>,
    pub final_k: Vec<f64>,
    /// Solves spent on gradients: `2 · |training split| · epochs`.
    pub solves_used: usize,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

fn at_epoch(epoch: usize) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::ZeroMode(diag) => Error::ZeroModeAtEpoch { epoch, diag },
        other => other,
    }
}

/// Full-batch Adam training of `net`'s spring constants on `task`.
///
/// The dataset is generated from `cfg.seed`, shuffled once into a
/// train/test split, and iterated `cfg.epochs` times. Returns the trained
/// network and the run record.
pub fn train(net: &Network, task: &Task, cfg: &TrainConfig) -> Result<(Network, TrainRecord)> {
    if cfg.epochs == 0 {
        return Err(Error::InvalidConfig("epochs ≥ 1 required".into()));
    }
    if !(cfg.split > 0.0 && cfg.split < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split fraction must lie in (0, 1), got {}",
            cfg.split
        )));
    }

    let dofs = DofMap::new(net);
    let samples = task.samples(net, &dofs, cfg.seed)?;
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }

    // Seeded shuffle; the gradient stream (dataset generation) and the
    // split stream stay independent.
    let mut indices: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    indices.shuffle(&mut rng);
    let n_train = ((samples.len() as f64 * cfg.split).round() as usize).clamp(1, samples.len());
    let train_indices: Vec<usize> = indices[..n_train].to_vec();
    let mut test_indices: Vec<usize> = indices[n_train..].to_vec();
    test_indices.sort_unstable();
    // a single-sample dataset tests on its own training point
    let eval_indices: &[usize] = if test_indices.is_empty() {
        &train_indices
    } else {
        &test_indices
    };

    let pick = |ids: &[usize]| -> Vec<Sample> { ids.iter().map(|&i| samples[i].clone()).collect() };
    let train_set: Vec<(LoadCase, LossSpec)> = pick(&train_indices)
        .into_iter()
        .map(|s| (s.load, s.loss))
        .collect();
    let test_set: Vec<Sample> = pick(eval_indices);

    let bounds = cfg.k_bounds.unwrap_or(net.k_bounds);
    let mut k = net.stiffness();
    let mut adam = AdamState::new(k.len(), cfg.alpha);
    adam.beta1 = cfg.beta1;
    adam.beta2 = cfg.beta2;
    adam.epsilon = cfg.epsilon;

    let mut current = net.clone();
    let mut op = Operator::new(&current).map_err(at_epoch(0))?;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut solves_used = 0usize;

    for epoch in 0..cfg.epochs {
        let rep = batch_gradient_with_operator(&op, &train_set).map_err(at_epoch(epoch))?;
        solves_used += rep.solves_used;
        k = adam.step(&k, &rep.grad, bounds)?;
        current = current.with_stiffness(&k)?;
        op = Operator::new(&current).map_err(at_epoch(epoch))?;
        let (loss_test, metric) = task.test_stats(&op, &test_set)?;
        history.push(EpochStats {
            loss_train: rep.loss,
            loss_test,
            metric,
        });
    }

    Ok((
        current,
        TrainRecord {
            history,
            final_k: k,
            solves_used,
            train_indices,
            test_indices,
        },
    ))
}

/// Warm-started training: identical to [`train`], starting from the spring
/// constants the given (already trained) network carries.
pub fn retrain(
    trained: &Network,
    new_task: &Task,
    cfg: &TrainConfig,
) -> Result<(Network, TrainRecord)> {
    train(trained, new_task, cfg)
}
