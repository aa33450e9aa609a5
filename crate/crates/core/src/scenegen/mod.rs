//! Synthetic multi-channel scenes.
//!
//! Every scene is one clean target heard by `k` microphones, each channel
//! being `clean + noise_i`. The static protocol gives each channel a fixed
//! SNR from a ladder. The dynamic protocol moves the noise source around a
//! circle so each channel's SNR changes over time with the geometry.

mod dynamic;
mod io;
mod mix;
mod pool;
mod source;

pub use dynamic::{DynamicConfig, Geometry};
pub use io::{list_scene_dirs, load_scene, load_scenes, save_scene};
pub use mix::{ladder_snrs, measured_snr_db, mix_at_snr, noise_gain_for_snr, LadderOrder, MAX_LADDER_K};
pub use pool::{generate_scene, pool_seeds, Protocol, SceneConfig, Split};
pub use source::{synth_source, SourceKind};

use serde::{Deserialize, Serialize};

use crate::dsp::Waveform;
use crate::error::{Error, Result};

/// Which protocol produced a scene.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    StaticInc,
    StaticDec,
    StaticRandom,
    Dynamic,
    /// Scenes read from disk that carry no protocol information.
    External,
}

impl Scenario {
    pub fn tag(self) -> &'static str {
        match self {
            Scenario::StaticInc => "static_inc",
            Scenario::StaticDec => "static_dec",
            Scenario::StaticRandom => "static_random",
            Scenario::Dynamic => "dynamic",
            Scenario::External => "external",
        }
    }
}

impl From<LadderOrder> for Scenario {
    fn from(order: LadderOrder) -> Self {
        match order {
            LadderOrder::Increasing => Scenario::StaticInc,
            LadderOrder::Decreasing => Scenario::StaticDec,
            LadderOrder::Random => Scenario::StaticRandom,
        }
    }
}

/// Everything needed to interpret or regenerate a scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneMeta {
    pub scenario: Scenario,
    pub seed: u64,
    pub k: usize,
    /// Whole-clip SNR of each channel in dB.
    pub snrs_db: Vec<f64>,
    /// Static scenes: the gain on the noise per channel. Dynamic scenes: the
    /// single global scale applied after attenuation.
    #[serde(default)]
    pub noise_gains: Vec<f64>,
    #[serde(default)]
    pub geometry: Option<Geometry>,
    #[serde(default)]
    pub target_kind: Option<SourceKind>,
    #[serde(default)]
    pub noise_kind: Option<SourceKind>,
    /// Factor applied to all signals when written to PCM16; undone on load.
    #[serde(default = "one")]
    pub export_scale: f64,
}

fn one() -> f64 {
    1.0
}

/// `k` noisy channels of one event plus the clean target.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub channels: Vec<Waveform>,
    pub clean: Waveform,
    pub meta: SceneMeta,
}

impl Scene {
    pub fn new(channels: Vec<Waveform>, clean: Waveform, meta: SceneMeta) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Input("scene needs at least one channel".into()));
        }
        if clean.is_empty() {
            return Err(Error::Input("scene clean signal is empty".into()));
        }
        for (i, c) in channels.iter().enumerate() {
            if c.len() != clean.len() || c.sample_rate != clean.sample_rate {
                return Err(Error::Input(format!(
                    "channel {i} has {} samples at {} Hz but clean has {} at {} Hz",
                    c.len(),
                    c.sample_rate,
                    clean.len(),
                    clean.sample_rate
                )));
            }
            if c.samples.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input(format!("channel {i} has non-finite samples")));
            }
        }
        if meta.k != channels.len() {
            return Err(Error::Input(format!(
                "metadata says k = {} but scene has {} channels",
                meta.k,
                channels.len()
            )));
        }
        Ok(Scene { channels, clean, meta })
    }

    pub fn k(&self) -> usize {
        self.channels.len()
    }

    pub fn sample_rate(&self) -> u32 {
        self.clean.sample_rate
    }

    /// Noise component of channel `i`, i.e. the channel minus the target.
    pub fn noise_part(&self, i: usize) -> Waveform {
        let samples = self.channels[i]
            .samples
            .iter()
            .zip(&self.clean.samples)
            .map(|(c, s)| c - s)
            .collect();
        Waveform::new(samples, self.clean.sample_rate)
    }
}

/// Static protocol: channel `i` is `clean + g_i·noise` at the `i`-th ladder SNR.
pub fn static_ladder(clean: &Waveform, noise: &Waveform, k: usize, order: LadderOrder, seed: u64) -> Result<Scene> {
    let snrs_db = ladder_snrs(k, order, seed)?;
    let mut channels = Vec::with_capacity(k);
    let mut noise_gains = Vec::with_capacity(k);
    for &snr in &snrs_db {
        let g = noise_gain_for_snr(clean, noise, snr)?;
        channels.push(mix::add_scaled(clean, noise, g));
        noise_gains.push(g);
    }
    let meta = SceneMeta {
        scenario: order.into(),
        seed,
        k,
        snrs_db,
        noise_gains,
        geometry: None,
        target_kind: None,
        noise_kind: None,
        export_scale: 1.0,
    };
    Scene::new(channels, clean.clone(), meta)
}

/// Dynamic protocol: microphones drawn in the disk, noise orbiting on the
/// circle, one global noise scale so channel SNRs average to 0 dB.
pub fn dynamic_scene(clean: &Waveform, noise: &Waveform, k: usize, config: &DynamicConfig, seed: u64) -> Result<Scene> {
    let geometry = Geometry::sample(k, config, seed)?;
    let parts = dynamic::dynamic_noise(clean, noise, &geometry)?;
    let mut channels = Vec::with_capacity(k);
    let mut snrs_db = Vec::with_capacity(k);
    for p in &parts.parts {
        snrs_db.push(measured_snr_db(clean, p)?);
        channels.push(mix::add_scaled(clean, p, 1.0));
    }
    let meta = SceneMeta {
        scenario: Scenario::Dynamic,
        seed,
        k,
        snrs_db,
        noise_gains: vec![parts.scale],
        geometry: Some(geometry),
        target_kind: None,
        noise_kind: None,
        export_scale: 1.0,
    };
    Scene::new(channels, clean.clone(), meta)
}

#[cfg(test)]
mod tests;
