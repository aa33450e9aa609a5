use serde::{Deserialize, Serialize};

use crate::dsp::StftPlan;
use crate::error::Result;
use crate::models::{Model, ModelConfig, Variant};
use crate::scenegen::{generate_scene, pool_seeds, LadderOrder, Protocol, SceneConfig, Split};
use crate::trainer::{EpochRecord, Prepared, TrainConfig, Trainer};

/// A reduced-size experiment: scene settings, network size and the pools.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeskConfig {
    pub scene: SceneConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub n_train: usize,
    pub n_val: usize,
    /// Seeds both scene pools.
    pub base_seed: u64,
    /// Seeds parameter initialization.
    pub model_seed: u64,
}

impl Default for DeskConfig {
    fn default() -> Self {
        let train = TrainConfig {
            epochs: 30,
            frame_size: 256,
            hop: 128,
            early_stop_patience: 0,
            ..TrainConfig::default()
        };
        DeskConfig {
            scene: SceneConfig::default(),
            model: ModelConfig {
                input_bins: train.bins(),
                front_dim: 128,
                hidden: 128,
                ..ModelConfig::default()
            },
            train,
            n_train: 100,
            n_val: 20,
            base_seed: 2017,
            model_seed: 7,
        }
    }
}

impl DeskConfig {
    pub fn plan(&self) -> Result<StftPlan> {
        StftPlan::new(self.train.frame_size, self.train.hop)
    }

    pub fn train_seeds(&self) -> Vec<u64> {
        pool_seeds(self.base_seed, Split::Train, self.n_train)
    }

    pub fn val_seeds(&self) -> Vec<u64> {
        pool_seeds(self.base_seed, Split::Validation, self.n_val)
    }

    /// Training and validation scenes at the training channel count.
    /// Static training uses randomly ordered ladders.
    pub fn pools(&self, protocol: Protocol) -> Result<(Vec<Prepared>, Vec<Prepared>)> {
        let protocol = match protocol {
            Protocol::Static(_) => Protocol::Static(LadderOrder::Random),
            p => p,
        };
        let plan = self.plan()?;
        let k = self.train.channels_k_train;
        let build = |seeds: Vec<u64>| -> Result<Vec<Prepared>> {
            use rayon::prelude::*;
            seeds
                .par_iter()
                .map(|&s| Prepared::new(&generate_scene(&self.scene, protocol, k, s)?, &plan))
                .collect()
        };
        Ok((build(self.train_seeds())?, build(self.val_seeds())?))
    }

    /// Trains one variant on prepared pools and returns the trainer, whose
    /// best model is the one to evaluate.
    pub fn train_variant<F>(
        &self,
        variant: Variant,
        train: &[Prepared],
        val: &[Prepared],
        on_epoch: F,
    ) -> Result<Trainer>
    where
        F: FnMut(&Trainer, &EpochRecord, bool) -> Result<()>,
    {
        let config = ModelConfig {
            variant,
            bidirectional_channels: self.model.bidirectional_channels && variant != Variant::AvgRnn,
            ..self.model.clone()
        };
        let mut trainer = Trainer::new(Model::new(config, self.model_seed)?, self.train.clone())?;
        trainer.fit(train, val, on_epoch)?;
        Ok(trainer)
    }
}
