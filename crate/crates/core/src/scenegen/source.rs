use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dsp::Waveform;
use crate::error::{Error, Result};

/// Synthetic signal families. `Tonal` stands in for speech; the other two
/// are interferers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Tonal,
    Chirp,
    NoiseBand,
}

impl SourceKind {
    pub fn tag(self) -> &'static str {
        match self {
            SourceKind::Tonal => "tonal",
            SourceKind::Chirp => "chirp",
            SourceKind::NoiseBand => "noise_band",
        }
    }
}

/// Seeded source of `duration_s` seconds scaled to unit RMS.
pub fn synth_source(kind: SourceKind, duration_s: f64, sample_rate: u32, seed: u64) -> Result<Waveform> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::Input(format!(
            "source duration must be positive, got {duration_s}"
        )));
    }
    if sample_rate < 8000 {
        return Err(Error::Input(format!(
            "sample rate must be at least 8000 Hz, got {sample_rate}"
        )));
    }
    let n = (duration_s * sample_rate as f64).round().max(1.0) as usize;
    let fs = sample_rate as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = match kind {
        SourceKind::Tonal => tonal(&mut rng, n, fs),
        SourceKind::Chirp => chirp(&mut rng, n, fs),
        SourceKind::NoiseBand => noise_band(&mut rng, n, fs),
    };
    let rms = (samples.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms.is_nan() || rms <= 0.0 {
        return Err(Error::Numeric(format!(
            "{} source with seed {seed} is silent",
            kind.tag()
        )));
    }
    samples.iter_mut().for_each(|v| *v /= rms);
    Ok(Waveform::new(samples, sample_rate))
}

/// A few harmonics of a gliding fundamental under a syllable-rate envelope.
fn tonal(rng: &mut ChaCha8Rng, n: usize, fs: f64) -> Vec<f64> {
    let f0 = rng.random_range(100.0..250.0);
    let harmonics = rng.random_range(3..=6usize);
    let amps: Vec<f64> = (1..=harmonics).map(|h| rng.random_range(0.5..1.0) / h as f64).collect();
    let phases: Vec<f64> = (0..harmonics).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let glide_rate = rng.random_range(0.5..2.0);
    let glide_phase = rng.random_range(0.0..2.0 * PI);
    let syllable_rate = rng.random_range(2.0..5.0);
    let syllable_phase = rng.random_range(0.0..2.0 * PI);

    let mut theta = 0.0;
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let f = f0 * (1.0 + 0.08 * (2.0 * PI * glide_rate * t + glide_phase).sin());
            theta += 2.0 * PI * f / fs;
            let env = 0.15 + 0.85 * (0.5 + 0.5 * (2.0 * PI * syllable_rate * t + syllable_phase).sin()).powi(2);
            let tone: f64 = amps
                .iter()
                .zip(&phases)
                .enumerate()
                .map(|(h, (a, p))| a * ((h + 1) as f64 * theta + p).sin())
                .sum();
            env * tone
        })
        .collect()
}

/// Repeating linear sweeps between two random frequencies.
fn chirp(rng: &mut ChaCha8Rng, n: usize, fs: f64) -> Vec<f64> {
    let top = 0.4 * fs;
    let lo = rng.random_range(150.0..1000.0);
    let hi = rng.random_range(1500.0..top);
    let period = rng.random_range(0.2..0.8);
    let mut theta = rng.random_range(0.0..2.0 * PI);
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let frac = (t / period).fract();
            // Triangle sweep so the frequency never jumps.
            let u = if frac < 0.5 { 2.0 * frac } else { 2.0 - 2.0 * frac };
            theta += 2.0 * PI * (lo + (hi - lo) * u) / fs;
            theta.sin()
        })
        .collect()
}

/// Gaussian noise restricted to a random band by zeroing FFT bins.
fn noise_band(rng: &mut ChaCha8Rng, n: usize, fs: f64) -> Vec<f64> {
    let lo = rng.random_range(200.0..1200.0);
    let hi = rng.random_range(2000.0..0.45 * fs);
    let mut buf: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let bin = k.min(n - k);
        let f = bin as f64 * fs / n as f64;
        if f < lo || f > hi {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}
