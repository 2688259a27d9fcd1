use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rodkit_core::{Error, Result, Scalar};

use crate::graph::Tape;
use crate::loss::{sigmoid_bce, Reduction};
use crate::model::Model;
use crate::params::ParamStore;
use crate::tensor::Tensor5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: Optimizer,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub sgd_momentum: f64,
    pub sigmoid_clamp_eps: f64,
    pub loss_reduction: Reduction,
    pub rng_seed: u64,
    /// Stop after this many optimizer steps, if set.
    pub max_steps: Option<usize>,
    /// Invoke the checkpoint callback every this many epochs (0 = only at the end).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 4,
            epochs: 10,
            optimizer: Optimizer::Adam,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            sgd_momentum: 0.0,
            sigmoid_clamp_eps: 1e-7,
            loss_reduction: Reduction::Sum,
            rng_seed: 0,
            max_steps: None,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config(format!("learning rate must be finite and non-negative, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if !(self.sigmoid_clamp_eps > 0.0 && self.sigmoid_clamp_eps <= 1e-3) {
            return Err(Error::config(format!("sigmoid clamp eps must be in (0, 1e-3], got {}", self.sigmoid_clamp_eps)));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || !(self.adam_epsilon > 0.0) {
            return Err(Error::config("adam betas must lie in [0, 1) and epsilon must be positive"));
        }
        if !(0.0..1.0).contains(&self.sgd_momentum) {
            return Err(Error::config("sgd momentum must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// One training pair: a `(1, 2, τ, h, w)` input and `(1, classes, τ, h, w)` target.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub input: Tensor5<T>,
    pub target: Tensor5<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub mean_loss: f64,
    pub steps: usize,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochReport>,
    /// Batch loss of every optimizer step.
    pub step_losses: Vec<f64>,
}

/// Loss summed over all heads (equal-weight deep supervision) and its
/// parameter gradient for one sample.
pub fn sample_gradient<T: Scalar>(model: &Model<T>, sample: &Sample<T>, eps: f64, reduction: Reduction) -> Result<(f64, ParamStore<T>)> {
    let mut tape = Tape::new(&model.params);
    let x = tape.input(sample.input.clone());
    let heads = model.forward_graph(&mut tape, x)?;
    let mut loss = 0.0;
    let mut seeds = Vec::with_capacity(heads.len());
    for h in heads {
        let (l, g) = sigmoid_bce(tape.value(h), &sample.target, eps, reduction)?;
        loss += l;
        seeds.push((h, g));
    }
    Ok((loss, tape.backward(seeds)?.params))
}

struct OptState<T> {
    m: ParamStore<T>,
    v: ParamStore<T>,
    step: i32,
}

impl<T: Scalar> OptState<T> {
    fn new(params: &ParamStore<T>) -> Self {
        OptState { m: params.zeros_like(), v: params.zeros_like(), step: 0 }
    }

    fn apply(&mut self, params: &mut ParamStore<T>, grads: &ParamStore<T>, cfg: &TrainConfig) {
        self.step += 1;
        let lr = T::lit(cfg.learning_rate);
        match cfg.optimizer {
            Optimizer::Sgd => {
                let mu = T::lit(cfg.sgd_momentum);
                for ((p, g), m) in params.iter_mut().zip(grads.iter()).zip(self.m.iter_mut()) {
                    for ((w, &d), vel) in p.data.iter_mut().zip(&g.data).zip(m.data.iter_mut()) {
                        *vel = mu * *vel + d;
                        *w -= lr * *vel;
                    }
                }
            }
            Optimizer::Adam => {
                let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
                let c1 = T::lit(1.0 / (1.0 - b1.powi(self.step)));
                let c2 = T::lit(1.0 / (1.0 - b2.powi(self.step)));
                let (b1, b2, eps) = (T::lit(b1), T::lit(b2), T::lit(cfg.adam_epsilon));
                let one = T::one();
                for (((p, g), m), v) in params.iter_mut().zip(grads.iter()).zip(self.m.iter_mut()).zip(self.v.iter_mut()) {
                    for (((w, &d), mm), vv) in p.data.iter_mut().zip(&g.data).zip(m.data.iter_mut()).zip(v.data.iter_mut()) {
                        *mm = b1 * *mm + (one - b1) * d;
                        *vv = b2 * *vv + (one - b2) * d * d;
                        *w -= lr * (*mm * c1) / ((*vv * c2).sqrt() + eps);
                    }
                }
            }
        }
    }
}

/// Mini-batch training. Samples are shuffled each epoch from `rng_seed`;
/// per-sample gradients are computed in parallel and summed in batch order,
/// so results do not depend on the thread count. `on_epoch` runs after each
/// epoch with the current model and whether a checkpoint is due.
pub fn train<T: Scalar>(
    model: &mut Model<T>,
    data: &[Sample<T>],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochReport, &Model<T>, bool) -> Result<()>,
) -> Result<TrainReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::config("training set is empty"));
    }
    for s in data {
        model.check_input(&s.input)?;
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut opt = OptState::new(&model.params);
    let mut report = TrainReport::default();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut steps = 0usize;
    'epochs: for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut total, mut n) = (0.0, 0usize);
        let mut epoch_steps = 0;
        for batch in order.chunks(cfg.batch_size) {
            if cfg.max_steps.is_some_and(|m| steps >= m) {
                break;
            }
            let results: Vec<Result<(f64, ParamStore<T>)>> = batch
                .par_iter()
                .map(|&i| sample_gradient(model, &data[i], cfg.sigmoid_clamp_eps, cfg.loss_reduction))
                .collect();
            let mut grads = model.params.zeros_like();
            let mut batch_loss = 0.0;
            for (r, &i) in results.into_iter().zip(batch) {
                let (l, g) = r?;
                if !l.is_finite() {
                    return Err(Error::Numerical(format!("loss became {l} at epoch {epoch}, step {steps}, sample {i}")));
                }
                batch_loss += l;
                grads.accumulate(&g)?;
            }
            opt.apply(&mut model.params, &grads, cfg);
            if !model.params.is_finite() {
                return Err(Error::Numerical(format!("parameters became non-finite at epoch {epoch}, step {steps}")));
            }
            report.step_losses.push(batch_loss);
            total += batch_loss;
            n += batch.len();
            steps += 1;
            epoch_steps += 1;
        }
        if epoch_steps == 0 {
            break 'epochs;
        }
        let er = EpochReport { epoch, mean_loss: total / n as f64, steps: epoch_steps, elapsed_s: start.elapsed().as_secs_f64() };
        let last = epoch + 1 == cfg.epochs || cfg.max_steps.is_some_and(|m| steps >= m);
        let due = last || (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0);
        on_epoch(&er, model, due)?;
        report.epochs.push(er);
    }
    Ok(report)
}
