use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::Waveform;
use crate::error::{Error, Result};

/// Largest channel count the static protocol defines.
pub const MAX_LADDER_K: usize = 30;

/// Gain `g` such that `clean` over `g·noise` has the requested SNR.
pub fn noise_gain_for_snr(clean: &Waveform, noise: &Waveform, snr_db: f64) -> Result<f64> {
    check_pair(clean, noise)?;
    if !snr_db.is_finite() {
        return Err(Error::Input(format!("SNR must be finite, got {snr_db}")));
    }
    Ok((clean.energy() / noise.energy() / 10f64.powf(snr_db / 10.0)).sqrt())
}

/// `clean + g·noise` at exactly `snr_db`.
pub fn mix_at_snr(clean: &Waveform, noise: &Waveform, snr_db: f64) -> Result<Waveform> {
    let g = noise_gain_for_snr(clean, noise, snr_db)?;
    Ok(add_scaled(clean, noise, g))
}

/// Whole-clip SNR in dB between a clean part and a noise part.
pub fn measured_snr_db(clean: &Waveform, noise_part: &Waveform) -> Result<f64> {
    check_pair(clean, noise_part)?;
    Ok(10.0 * (clean.energy() / noise_part.energy()).log10())
}

pub(crate) fn add_scaled(clean: &Waveform, noise: &Waveform, g: f64) -> Waveform {
    let samples = clean
        .samples
        .iter()
        .zip(&noise.samples)
        .map(|(c, n)| c + g * n)
        .collect();
    Waveform::new(samples, clean.sample_rate)
}

pub(crate) fn check_pair(clean: &Waveform, noise: &Waveform) -> Result<()> {
    if clean.len() != noise.len() {
        return Err(Error::Input(format!(
            "clean has {} samples but noise has {}",
            clean.len(),
            noise.len()
        )));
    }
    if clean.sample_rate != noise.sample_rate {
        return Err(Error::Input(format!(
            "clean is {} Hz but noise is {} Hz",
            clean.sample_rate, noise.sample_rate
        )));
    }
    if clean.energy().is_nan() || clean.energy() <= 0.0 {
        return Err(Error::Input("clean signal has zero energy".into()));
    }
    if noise.energy().is_nan() || noise.energy() <= 0.0 {
        return Err(Error::Input("noise signal has zero energy".into()));
    }
    Ok(())
}

/// Order in which the static protocol presents its SNR ladder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderOrder {
    Increasing,
    Decreasing,
    Random,
}

impl LadderOrder {
    pub fn tag(self) -> &'static str {
        match self {
            LadderOrder::Increasing => "static_inc",
            LadderOrder::Decreasing => "static_dec",
            LadderOrder::Random => "static_random",
        }
    }
}

/// Channel SNRs for the static protocol.
///
/// Increasing runs linearly from −5 to −5 + k/3 dB and decreasing from 5 to
/// 5 − k/3 dB. Values are formed from integer numerators over one shared
/// denominator, so at k = 30 both orders give bit-identical multisets.
/// `Random` shuffles the increasing ladder with `seed`.
pub fn ladder_snrs(k: usize, order: LadderOrder, seed: u64) -> Result<Vec<f64>> {
    if !(1..=MAX_LADDER_K).contains(&k) {
        return Err(Error::Input(format!("ladder needs 1 ≤ k ≤ {MAX_LADDER_K}, got {k}")));
    }
    if k == 1 {
        let first = if order == LadderOrder::Decreasing { 5.0 } else { -5.0 };
        return Ok(vec![first]);
    }
    let den = (3 * (k - 1)) as f64;
    let base = 15 * (k as i64 - 1);
    let step = k as i64;
    let inc = |i: usize| (-base + step * i as i64) as f64 / den;
    let dec = |i: usize| (base - step * i as i64) as f64 / den;
    let mut snrs: Vec<f64> = match order {
        LadderOrder::Decreasing => (0..k).map(dec).collect(),
        _ => (0..k).map(inc).collect(),
    };
    if order == LadderOrder::Random {
        snrs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    Ok(snrs)
}
