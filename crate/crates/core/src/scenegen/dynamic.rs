use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::Waveform;
use crate::error::{Error, Result};

/// Constants of the moving-noise geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicConfig {
    /// Radius of the circle the noise source travels.
    pub noise_radius: f64,
    /// Microphones are drawn uniformly from the disk of this radius.
    pub mic_radius: f64,
    /// Distance floor in the `1/max(d, floor)` attenuation law.
    pub distance_floor: f64,
    /// Laps of the circle per clip.
    pub revolutions: f64,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        DynamicConfig {
            noise_radius: 1.0,
            mic_radius: 0.9,
            distance_floor: 0.1,
            revolutions: 1.0,
        }
    }
}

impl DynamicConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.noise_radius > 0.0
            && self.mic_radius > 0.0
            && self.mic_radius < self.noise_radius
            && self.distance_floor > 0.0
            && self.revolutions > 0.0;
        if !ok {
            return Err(Error::Config(format!(
                "dynamic geometry needs 0 < mic_radius < noise_radius and positive floor and revolutions, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Where everything sits in a dynamic scene. The target is at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub mic_positions: Vec<[f64; 2]>,
    pub noise_radius: f64,
    pub start_phase: f64,
    pub revolutions: f64,
    pub distance_floor: f64,
}

impl Geometry {
    /// Draws the start phase and then `k` microphones in sequence, so the
    /// first `k` microphones of a seed do not depend on how many follow.
    pub fn sample(k: usize, config: &DynamicConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if k == 0 {
            return Err(Error::Input("dynamic scene needs k ≥ 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start_phase = rng.random_range(0.0..2.0 * PI);
        let mic_positions = (0..k)
            .map(|_| {
                let r = config.mic_radius * rng.random::<f64>().sqrt();
                let theta = rng.random_range(0.0..2.0 * PI);
                [r * theta.cos(), r * theta.sin()]
            })
            .collect();
        Ok(Geometry {
            mic_positions,
            noise_radius: config.noise_radius,
            start_phase,
            revolutions: config.revolutions,
            distance_floor: config.distance_floor,
        })
    }

    /// Noise position at sample `i` of `n`.
    pub fn noise_position(&self, i: usize, n: usize) -> [f64; 2] {
        let angle = self.start_phase + 2.0 * PI * self.revolutions * i as f64 / n as f64;
        [self.noise_radius * angle.cos(), self.noise_radius * angle.sin()]
    }

    /// Per-sample attenuation from the noise source to microphone `mic`.
    pub fn gain_trajectory(&self, mic: usize, n: usize) -> Vec<f64> {
        let [mx, my] = self.mic_positions[mic];
        (0..n)
            .map(|i| {
                let [nx, ny] = self.noise_position(i, n);
                1.0 / (nx - mx).hypot(ny - my).max(self.distance_floor)
            })
            .collect()
    }
}

/// Noise parts of a dynamic scene plus the global scale that was applied.
pub(crate) struct DynamicNoise {
    pub parts: Vec<Waveform>,
    pub scale: f64,
}

/// Attenuates `noise` along each microphone's trajectory, then applies one
/// scale so the channels' whole-clip SNRs average to 0 dB.
pub(crate) fn dynamic_noise(clean: &Waveform, noise: &Waveform, geometry: &Geometry) -> Result<DynamicNoise> {
    super::mix::check_pair(clean, noise)?;
    let n = clean.len();
    let mut parts: Vec<Waveform> = (0..geometry.mic_positions.len())
        .map(|m| {
            let g = geometry.gain_trajectory(m, n);
            let samples = noise.samples.iter().zip(&g).map(|(v, g)| v * g).collect();
            Waveform::new(samples, noise.sample_rate)
        })
        .collect();
    let clean_energy = clean.energy();
    let mean_db = parts
        .iter()
        .map(|p| 10.0 * (clean_energy / p.energy()).log10())
        .sum::<f64>()
        / parts.len() as f64;
    // Scaling every part by c lowers each SNR by 20·log₁₀(c).
    let scale = 10f64.powf(mean_db / 20.0);
    for p in &mut parts {
        p.samples.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(DynamicNoise { parts, scale })
}
