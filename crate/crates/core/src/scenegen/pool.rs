use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dynamic_scene, static_ladder, synth_source, DynamicConfig, LadderOrder, Scene, SourceKind};
use crate::error::{Error, Result};

/// Signal-level settings shared by every generated scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub sample_rate: u32,
    pub duration_s: f64,
    pub target: SourceKind,
    /// Interferer families; each scene picks one by seed.
    pub interferers: Vec<SourceKind>,
    pub dynamic: DynamicConfig,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            sample_rate: 16000,
            duration_s: 2.0,
            target: SourceKind::Tonal,
            interferers: vec![SourceKind::Chirp, SourceKind::NoiseBand],
            dynamic: DynamicConfig::default(),
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate < 8000 {
            return Err(Error::Config(format!(
                "sample_rate must be at least 8000, got {}",
                self.sample_rate
            )));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::Config(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            )));
        }
        if self.interferers.is_empty() {
            return Err(Error::Config("interferers must list at least one source kind".into()));
        }
        self.dynamic.validate()
    }
}

/// How channels of a generated scene are formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Static(LadderOrder),
    Dynamic,
}

/// Builds the scene for `seed`. The target, interferer and geometry depend
/// only on the seed, so the same seed at different `k` shares all of them.
pub fn generate_scene(config: &SceneConfig, protocol: Protocol, k: usize, seed: u64) -> Result<Scene> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clean_seed = rng.next_u64();
    let noise_seed = rng.next_u64();
    let protocol_seed = rng.next_u64();
    let noise_kind = config.interferers[rng.random_range(0..config.interferers.len())];
    let clean = synth_source(config.target, config.duration_s, config.sample_rate, clean_seed)?;
    let noise = synth_source(noise_kind, config.duration_s, config.sample_rate, noise_seed)?;
    let mut scene = match protocol {
        Protocol::Static(order) => static_ladder(&clean, &noise, k, order, protocol_seed)?,
        Protocol::Dynamic => dynamic_scene(&clean, &noise, k, &config.dynamic, protocol_seed)?,
    };
    scene.meta.seed = seed;
    scene.meta.target_kind = Some(config.target);
    scene.meta.noise_kind = Some(noise_kind);
    Ok(scene)
}

/// Training and validation draw from disjoint seed streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
}

/// First `n` scene seeds of a split. Growing `n` keeps the earlier seeds.
pub fn pool_seeds(base_seed: u64, split: Split, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(match split {
        Split::Train => 1,
        Split::Validation => 2,
    });
    (0..n).map(|_| rng.next_u64()).collect()
}
