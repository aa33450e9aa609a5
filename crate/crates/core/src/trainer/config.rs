use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
}

/// Optimization settings. Recorded verbatim into every checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Scenes per update.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    /// Gradients are rescaled so their global L2 norm is at most this.
    pub grad_clip_norm: f64,
    pub seed: u64,
    /// Channels per training scene.
    pub channels_k_train: usize,
    /// Stop after this many epochs without a better validation score.
    /// Zero disables early stopping.
    pub early_stop_patience: usize,
    pub frame_size: usize,
    pub hop: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 4,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            grad_clip_norm: 5.0,
            seed: 0,
            channels_k_train: 5,
            early_stop_patience: 5,
            frame_size: 1024,
            hop: 512,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("train.{field} {why}")));
        if self.epochs == 0 {
            return bad("epochs", "must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be a finite non-negative number");
        }
        if self.grad_clip_norm.is_nan() || self.grad_clip_norm <= 0.0 {
            return bad("grad_clip_norm", "must be positive");
        }
        if self.channels_k_train == 0 {
            return bad("channels_k_train", "must be positive");
        }
        if self.frame_size == 0 || self.hop == 0 {
            return bad("frame_size", "and hop must be positive");
        }
        Ok(())
    }

    /// Frequency bins the configured STFT produces.
    pub fn bins(&self) -> usize {
        self.frame_size / 2 + 1
    }
}
