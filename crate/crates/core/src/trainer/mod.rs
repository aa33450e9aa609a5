//! Optimization loop, validation and checkpointing.
//!
//! Each update averages the SDR-proxy loss over a batch of scenes, clips the
//! global gradient norm and takes one Adam step. Per-scene gradients may be
//! computed on several threads but are always summed in batch order, so a
//! run is reproducible regardless of thread count.

mod adam;
mod checkpoint;
mod config;
mod data;

pub use adam::{clip_global_norm, global_norm, Adam, BETA1, BETA2, EPSILON};
pub use checkpoint::{Checkpoint, RngState, MAGIC, VERSION};
pub use config::{OptimizerKind, TrainConfig};
pub use data::{evaluate, scene_loss, Prepared};

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Model;
use crate::numcore::{Tape, Tensor};

/// One line of the training history.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_sdr: f64,
}

/// Training state that survives checkpoint and resume.
pub struct Trainer {
    model: Model,
    config: TrainConfig,
    adam: Adam,
    rng: ChaCha8Rng,
    rng_seed: u64,
    epoch: usize,
    best_val_sdr: Option<f64>,
    best_params: Option<Vec<Tensor>>,
    epochs_since_best: usize,
    history: Vec<EpochRecord>,
}

impl Trainer {
    pub fn new(model: Model, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        check_bins(&model, &config)?;
        let adam = Adam::new(model.params());
        Ok(Trainer {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            rng_seed: config.seed,
            model,
            config,
            adam,
            epoch: 0,
            best_val_sdr: None,
            best_params: None,
            epochs_since_best: 0,
            history: Vec::new(),
        })
    }

    /// Continues from a snapshot. `config` may raise `epochs` or change
    /// other settings; the model config always comes from the checkpoint.
    pub fn resume(ckpt: Checkpoint, config: Option<TrainConfig>) -> Result<Self> {
        let model = ckpt.model()?;
        let config = config.unwrap_or(ckpt.train_config);
        config.validate()?;
        check_bins(&model, &config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(ckpt.rng.seed);
        rng.set_word_pos(ckpt.rng.word_pos);
        Ok(Trainer {
            model,
            config,
            adam: ckpt.optimizer,
            rng,
            // The shuffler keeps its original key even if the config seed
            // was edited for the resumed run.
            rng_seed: ckpt.rng.seed,
            epoch: ckpt.epoch,
            best_val_sdr: ckpt.best_val_sdr,
            best_params: None,
            epochs_since_best: ckpt.epochs_since_best,
            history: ckpt.history,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn into_model(self) -> Model {
        self.model
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Completed epochs, counting those before a resume.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn history(&self) -> &[EpochRecord] {
        &self.history
    }

    pub fn best_val_sdr(&self) -> Option<f64> {
        self.best_val_sdr
    }

    /// The model at its best validation epoch in this session, if any.
    pub fn best_model(&self) -> Result<Option<Model>> {
        let Some(best) = &self.best_params else {
            return Ok(None);
        };
        let names = self.model.params().iter().map(|(n, _)| n.to_string());
        Model::from_params(self.model.config().clone(), names.zip(best.iter().cloned())).map(Some)
    }

    /// True once the epoch budget is spent or patience has run out.
    pub fn finished(&self) -> bool {
        self.epoch >= self.config.epochs
            || (self.config.early_stop_patience > 0 && self.epochs_since_best >= self.config.early_stop_patience)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            model_config: self.model.config().clone(),
            train_config: self.config.clone(),
            params: self
                .model
                .params()
                .iter()
                .map(|(n, t)| (n.to_string(), t.clone()))
                .collect(),
            optimizer: self.adam.clone(),
            rng: RngState {
                seed: self.rng_seed,
                word_pos: self.rng.get_word_pos(),
            },
            epoch: self.epoch,
            best_val_sdr: self.best_val_sdr,
            epochs_since_best: self.epochs_since_best,
            history: self.history.clone(),
        }
    }

    /// Mean loss and summed-then-averaged gradients of one batch.
    fn batch_gradients(&self, batch: &[&Prepared]) -> Result<(f64, Vec<Vec<f64>>)> {
        let model = &self.model;
        let per_scene: Vec<(f64, Vec<Vec<f64>>)> = batch
            .par_iter()
            .map(|scene| {
                let mut tape = Tape::new();
                let loss = scene_loss(model, &mut tape, scene)?;
                let value = tape.value(loss).data()[0];
                let grads = tape.backward(loss)?.param_grads(model.params());
                Ok((value, grads))
            })
            .collect::<Result<_>>()?;
        let n = batch.len() as f64;
        let mut total = 0.0;
        let mut sum: Vec<Vec<f64>> = model.params().iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        for (loss, grads) in per_scene {
            total += loss;
            for (s, g) in sum.iter_mut().zip(grads) {
                s.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            }
        }
        sum.iter_mut().flatten().for_each(|g| *g /= n);
        Ok((total / n, sum))
    }

    /// One update on `batch`; returns the mean loss before the update.
    pub fn step(&mut self, batch: &[&Prepared]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Input("empty batch".into()));
        }
        let (loss, mut grads) = self.batch_gradients(batch)?;
        if !loss.is_finite() || grads.iter().flatten().any(|g| !g.is_finite()) {
            let seeds: Vec<u64> = batch.iter().map(|s| s.seed).collect();
            return Err(Error::Numeric(format!(
                "non-finite loss or gradient in epoch {} on batch with scene seeds {seeds:?} (loss {loss})",
                self.epoch + 1
            )));
        }
        clip_global_norm(&mut grads, self.config.grad_clip_norm);
        self.adam
            .update(self.model.params_mut(), &grads, self.config.learning_rate);
        Ok(loss)
    }

    /// Mean SI-SDR of the current model over `scenes`.
    pub fn validate(&self, scenes: &[Prepared]) -> Result<f64> {
        mean_sdr(&self.model, scenes)
    }

    /// Shuffles, trains on every batch, then validates.
    pub fn run_epoch(&mut self, train: &[Prepared], val: &[Prepared]) -> Result<EpochRecord> {
        if train.is_empty() || val.is_empty() {
            return Err(Error::Input("training and validation sets must be non-empty".into()));
        }
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut self.rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(self.config.batch_size) {
            let batch: Vec<&Prepared> = chunk.iter().map(|&i| &train[i]).collect();
            total += self.step(&batch)?;
            batches += 1;
        }
        let val_sdr = self.validate(val)?;
        self.epoch += 1;
        let record = EpochRecord {
            epoch: self.epoch,
            train_loss: total / batches as f64,
            val_sdr,
        };
        self.history.push(record);
        if self.best_val_sdr.is_none_or(|b| val_sdr > b) {
            self.best_val_sdr = Some(val_sdr);
            self.best_params = Some(self.model.params().iter().map(|(_, t)| t.clone()).collect());
            self.epochs_since_best = 0;
        } else {
            self.epochs_since_best += 1;
        }
        Ok(record)
    }

    /// Runs epochs until [`Trainer::finished`]. `on_epoch` sees the trainer
    /// after each epoch and whether that epoch set a new best.
    pub fn fit<F>(&mut self, train: &[Prepared], val: &[Prepared], mut on_epoch: F) -> Result<()>
    where
        F: FnMut(&Trainer, &EpochRecord, bool) -> Result<()>,
    {
        while !self.finished() {
            let record = self.run_epoch(train, val)?;
            let improved = self.epochs_since_best == 0;
            on_epoch(self, &record, improved)?;
        }
        Ok(())
    }
}

fn check_bins(model: &Model, config: &TrainConfig) -> Result<()> {
    if model.config().input_bins != config.bins() {
        return Err(Error::Config(format!(
            "model.input_bins is {} but train.frame_size {} gives {} bins",
            model.config().input_bins,
            config.frame_size,
            config.bins()
        )));
    }
    Ok(())
}

/// Mean SI-SDR of `model` over `scenes`, evaluated in parallel.
pub fn mean_sdr(model: &Model, scenes: &[Prepared]) -> Result<f64> {
    let scores = scenes
        .par_iter()
        .map(|s| evaluate(model, s).map(|v| v.db()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// History as CSV with header `epoch,train_loss,val_sdr`.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,val_sdr\n");
    for r in history {
        let _ = writeln!(out, "{},{},{}", r.epoch, r.train_loss, r.val_sdr);
    }
    out
}

pub fn write_history_csv(path: &Path, history: &[EpochRecord]) -> Result<()> {
    std::fs::write(path, history_csv(history))?;
    Ok(())
}

#[cfg(test)]
mod tests;
